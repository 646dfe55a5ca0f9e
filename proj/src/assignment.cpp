#include "gcilsm/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "gcilsm/errors.hpp"

namespace gcilsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Lexicographic cost: primary value, then a tie counter (number of matched
// pairs). Forms an ordered group, so the Hungarian potentials work unchanged.
struct LexCost {
  double value = 0.0;
  long tie = 0;

  friend LexCost operator+(LexCost a, LexCost b) { return {a.value + b.value, a.tie + b.tie}; }
  friend LexCost operator-(LexCost a, LexCost b) { return {a.value - b.value, a.tie - b.tie}; }
  friend bool operator<(LexCost a, LexCost b) {
    return a.value < b.value || (a.value == b.value && a.tie < b.tie);
  }
  [[nodiscard]] bool infinite() const { return value == kInf; }
};

constexpr LexCost kLexInf{kInf, 0};

using TieMatrix = Eigen::Matrix<long, Eigen::Dynamic, Eigen::Dynamic>;

std::optional<std::vector<int>> hungarian(const Eigen::MatrixXd& a, const TieMatrix& tie) {
  const auto n = static_cast<int>(a.rows());
  const auto m = static_cast<int>(a.cols());
  if (n > m) throw DomainError("assignment needs at least as many columns as rows");
  if (n == 0) return std::vector<int>{};

  auto entry = [&](int i, int j) -> LexCost {
    const double v = a(i - 1, j - 1);
    if (v == kInf) return kLexInf;
    return {v, tie(i - 1, j - 1)};
  };

  std::vector<LexCost> u(n + 1), v(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<LexCost> minv(m + 1, kLexInf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      LexCost delta = kLexInf;
      int j1 = -1;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const LexCost e = entry(i0, j);
        const LexCost cur = e.infinite() ? kLexInf : e - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      if (j1 < 0 || delta.infinite()) return std::nullopt;
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] = u[p[j]] + delta;
          v[j] = v[j] - delta;
        } else if (!minv[j].infinite()) {
          minv[j] = minv[j] - delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= m; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

LexCost total(const Eigen::MatrixXd& a, const TieMatrix& tie, const std::vector<int>& r2c) {
  LexCost c;
  for (std::size_t i = 0; i < r2c.size(); ++i)
    c = c + LexCost{a(static_cast<Eigen::Index>(i), r2c[i]), tie(static_cast<Eigen::Index>(i), r2c[i])};
  return c;
}

struct Ranked {
  std::vector<int> row_to_col;
  LexCost cost;
};

// Murty's partitioning over complete row assignments.
std::vector<Ranked> murty(const Eigen::MatrixXd& a, const TieMatrix& tie, int k) {
  struct Node {
    LexCost cost;
    long seq;
    std::vector<int> row_to_col;
    Eigen::MatrixXd constrained;
  };
  auto later = [](const Node& x, const Node& y) {
    if (y.cost < x.cost) return true;
    if (x.cost < y.cost) return false;
    return x.seq > y.seq;
  };
  std::priority_queue<Node, std::vector<Node>, decltype(later)> queue(later);

  long seq = 0;
  if (auto first = hungarian(a, tie)) {
    const LexCost c = total(a, tie, *first);
    queue.push(Node{c, seq++, std::move(*first), a});
  }

  std::vector<Ranked> out;
  const auto n = static_cast<int>(a.rows());
  while (!queue.empty() && static_cast<int>(out.size()) < k) {
    Node node = queue.top();
    queue.pop();
    out.push_back({node.row_to_col, node.cost});
    if (static_cast<int>(out.size()) == k) break;

    Eigen::MatrixXd fixed = node.constrained;
    for (int t = 0; t < n; ++t) {
      const int col = node.row_to_col[t];
      Eigen::MatrixXd child = fixed;
      child(t, col) = kInf;
      if (auto sol = hungarian(child, tie)) {
        const LexCost c = total(a, tie, *sol);
        queue.push(Node{c, seq++, std::move(*sol), std::move(child)});
      }
      // Force (t, col) for the remaining children.
      const double keep = fixed(t, col);
      fixed.row(t).setConstant(kInf);
      fixed.col(col).setConstant(kInf);
      fixed(t, col) = keep;
    }
  }
  return out;
}

}  // namespace

int Assignment::matches() const {
  return static_cast<int>(std::count_if(row_to_col.begin(), row_to_col.end(),
                                        [](int c) { return c >= 0; }));
}

std::optional<Assignment> solve_assignment(const Eigen::MatrixXd& cost) {
  const TieMatrix tie = TieMatrix::Zero(cost.rows(), cost.cols());
  auto sol = hungarian(cost, tie);
  if (!sol) return std::nullopt;
  const double c = total(cost, tie, *sol).value;
  return Assignment{std::move(*sol), c};
}

std::vector<Assignment> kbest_assignments(const Eigen::MatrixXd& cost, int k) {
  if (k <= 0) throw DomainError("k must be positive");
  const TieMatrix tie = TieMatrix::Zero(cost.rows(), cost.cols());
  std::vector<Assignment> out;
  for (auto& r : murty(cost, tie, k)) out.push_back({std::move(r.row_to_col), r.cost.value});
  return out;
}

std::vector<Assignment> murty_kbest(const CostMatrix& c, int k) {
  if (k <= 0) throw DomainError("k must be positive");
  const auto n1 = static_cast<Eigen::Index>(c.rows.size());
  const auto n2 = static_cast<Eigen::Index>(c.cols.size());
  if (c.entries.rows() != n1 || c.entries.cols() != n2)
    throw DomainError("cost matrix dimensions do not match its label lists");
  const double gamma = c.non_assignment_cost;

  auto true_cost = [&](const std::vector<int>& r2c) {
    double s = 0.0;
    std::vector<char> col_used(static_cast<std::size_t>(n2), 0);
    for (Eigen::Index i = 0; i < n1; ++i) {
      const int j = r2c[static_cast<std::size_t>(i)];
      if (j >= 0) {
        s += c.entries(i, j);
        col_used[static_cast<std::size_t>(j)] = 1;
      } else {
        s += gamma;
      }
    }
    for (char u : col_used)
      if (!u) s += gamma;
    return s;
  };

  if (n1 == 0) {
    const double s = static_cast<double>(n2) * gamma;
    if (!std::isfinite(s) && n2 > 0) return {};
    return {Assignment{{}, n2 > 0 ? s : 0.0}};
  }

  std::vector<Assignment> out;
  if (std::isinf(gamma)) {
    if (n1 != n2) return out;
    const TieMatrix tie = TieMatrix::Ones(n1, n2);
    for (auto& r : murty(c.entries, tie, k)) {
      const double s = true_cost(r.row_to_col);
      out.push_back({std::move(r.row_to_col), s});
    }
    return out;
  }

  // Row i may take a real column j at C_ij - gamma (one fewer unassigned
  // column) or its private dummy column at gamma. A constant n2 * gamma
  // restores the total. Each partial assignment has exactly one encoding.
  Eigen::MatrixXd a = Eigen::MatrixXd::Constant(n1, n2 + n1, kInf);
  TieMatrix tie = TieMatrix::Zero(n1, n2 + n1);
  for (Eigen::Index i = 0; i < n1; ++i) {
    for (Eigen::Index j = 0; j < n2; ++j) {
      if (std::isfinite(c.entries(i, j))) {
        a(i, j) = c.entries(i, j) - gamma;
        tie(i, j) = 1;
      }
    }
    a(i, n2 + i) = gamma;
  }
  for (auto& r : murty(a, tie, k)) {
    std::vector<int> r2c = r.row_to_col;
    for (int& j : r2c)
      if (j >= n2) j = -1;
    const double s = true_cost(r2c);
    out.push_back({std::move(r2c), s});
  }
  std::stable_sort(out.begin(), out.end(), [](const Assignment& x, const Assignment& y) {
    if (x.cost != y.cost) return x.cost < y.cost;
    return x.matches() < y.matches();
  });
  return out;
}

}  // namespace gcilsm
