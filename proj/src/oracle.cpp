#include "gcilsm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "gcilsm/errors.hpp"

namespace gcilsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Pointwise evaluation with per-component factorizations cached.
class MixtureEvaluator {
 public:
  explicit MixtureEvaluator(const GaussianMixtured& gm) {
    for (const auto& c : gm.components) {
      Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
      if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
      const double d = static_cast<double>(c.mean.size());
      const double log_det = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
      const Eigen::MatrixXd l = llt.matrixL().toDenseMatrix();
      terms_.push_back({c.weight * std::exp(-0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det)), c.mean,
                        l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(l.rows(), l.cols()))});
    }
  }

  // Called millions of times by the nested quadrature; must not allocate.
  double operator()(const Eigen::VectorXd& x) const {
    double v = 0.0;
    const Eigen::Index n = x.size();
    for (const auto& t : terms_) {
      double q = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        double y = 0.0;
        for (Eigen::Index j = 0; j <= i; ++j) y += t.inv_chol(i, j) * (x(j) - t.mean(j));
        q += y * y;
      }
      v += t.scale * std::exp(-0.5 * q);
    }
    return v;
  }

 private:
  struct Term {
    double scale;
    Eigen::VectorXd mean;
    Eigen::MatrixXd inv_chol;
  };
  std::vector<Term> terms_;
};

struct Axis {
  double lo = kInf;
  double hi = -kInf;
  std::vector<double> breaks;
};

// Integration range and break points along one coordinate.
void extend_axis(Axis& axis, const GaussianMixtured& gm, Eigen::Index k, double widen) {
  for (const auto& c : gm.components) {
    const double s = std::sqrt(c.covariance(k, k)) * widen;
    const double m = c.mean(k);
    axis.lo = std::min(axis.lo, m - 10.0 * s);
    axis.hi = std::max(axis.hi, m + 10.0 * s);
    axis.breaks.push_back(m);
    for (double f : {1.5, 4.0}) {
      axis.breaks.push_back(m - f * s);
      axis.breaks.push_back(m + f * s);
    }
  }
}

double integrate_fn(const std::function<double(const Eigen::VectorXd&)>& f, const std::vector<Axis>& axes) {
  if (axes.size() == 1) {
    Eigen::VectorXd x(1);
    return integrate_1d(
        [&](double t) {
          x(0) = t;
          return f(x);
        },
        axes[0].lo, axes[0].hi, axes[0].breaks);
  }
  Eigen::VectorXd x(2);
  return integrate_1d(
      [&](double s) {
        return integrate_1d(
            [&](double t) {
              x(0) = s;
              x(1) = t;
              return f(x);
            },
            axes[1].lo, axes[1].hi, axes[1].breaks);
      },
      axes[0].lo, axes[0].hi, axes[0].breaks);
}

std::vector<Axis> box_for(std::initializer_list<std::pair<const GaussianMixtured*, double>> parts) {
  Eigen::Index dim = 0;
  for (const auto& [gm, w] : parts) {
    if (gm->empty()) throw DomainError("empty density");
    dim = gm->dim();
  }
  if (dim < 1 || dim > 2) throw DomainError("oracle supports low dimension only");
  std::vector<Axis> axes(static_cast<std::size_t>(dim));
  for (Eigen::Index k = 0; k < dim; ++k)
    for (const auto& [gm, w] : parts) extend_axis(axes[static_cast<std::size_t>(k)], *gm, k, 1.0 / std::sqrt(w));
  return axes;
}

void enumerate_maps(const CostMatrix& c, std::size_t row, std::vector<int>& r2c, std::vector<char>& used,
                    std::vector<Assignment>& out) {
  const std::size_t n1 = c.rows.size();
  const std::size_t n2 = c.cols.size();
  if (row == n1) {
    double s = 0.0;
    for (std::size_t i = 0; i < n1; ++i)
      s += r2c[i] < 0 ? c.non_assignment_cost : c.entries(static_cast<Eigen::Index>(i), r2c[i]);
    for (std::size_t j = 0; j < n2; ++j)
      if (!used[j]) s += c.non_assignment_cost;
    if (std::isfinite(s)) out.push_back({r2c, s});
    return;
  }
  r2c[row] = -1;
  enumerate_maps(c, row + 1, r2c, used, out);
  for (std::size_t j = 0; j < n2; ++j) {
    if (used[j] || !std::isfinite(c.entries(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j))))
      continue;
    used[j] = 1;
    r2c[row] = static_cast<int>(j);
    enumerate_maps(c, row + 1, r2c, used, out);
    used[j] = 0;
  }
  r2c[row] = -1;
}

}  // namespace

double ospa(std::span<const Eigen::Vector2d> x, std::span<const Eigen::Vector2d> y, const OspaParams& params) {
  if (x.size() > y.size()) return ospa(y, x, params);
  const std::size_t m = x.size();
  const std::size_t n = y.size();
  if (n == 0) return 0.0;
  const double cp = std::pow(params.cutoff, params.order);
  double sum = cp * static_cast<double>(n - m);
  if (m > 0) {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
            std::pow(std::min((x[i] - y[j]).norm(), params.cutoff), params.order);
    const auto best = solve_assignment(d);
    sum += best->cost;
  }
  return std::pow(sum / static_cast<double>(n), 1.0 / params.order);
}

BernoulliTrack brute_marginal(const MdGlmbDensity& density, const Label& label) {
  const std::size_t n = density.label_space.size();
  if (n > 12) throw DomainError("enumeration bound");
  std::vector<Label> space = density.label_space;
  std::sort(space.begin(), space.end());
  const auto it = std::find(space.begin(), space.end(), label);
  if (it == space.end()) throw DomainError("unknown label");
  const auto bit = static_cast<std::size_t>(it - space.begin());

  BernoulliTrack out{label, 0.0, {}};
  std::vector<std::pair<double, const GaussianMixtured*>> parts;
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    if (!(mask & (std::size_t{1} << bit))) continue;
    std::vector<Label> subset;
    for (std::size_t i = 0; i < n; ++i)
      if (mask & (std::size_t{1} << i)) subset.push_back(space[i]);
    const Hypothesis* h = density.find(subset);
    if (!h || !(h->weight > 0.0)) continue;
    out.existence += h->weight;
    parts.emplace_back(h->weight, &h->densities[*h->position(label)]);
  }
  for (const auto& [w, gm] : parts)
    for (const auto& c : gm->components)
      out.density.components.push_back({w * c.weight / out.existence, c.mean, c.covariance});
  return out;
}

double integrate_1d(const std::function<double(double)>& f, double lo, double hi, std::vector<double> breaks) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
  using Rule = boost::math::quadrature::gauss_kronrod<double, 31>;
  // One fixed-rule pass first. Segments carrying a negligible share of the
  // integral keep that estimate: refining them against a relative tolerance
  // only chases rounding noise in the far tails.
  struct Segment {
    double a, b, value, l1;
  };
  std::vector<Segment> segments;
  double scale = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = std::max(breaks[i], lo);
    const double b = std::min(breaks[i + 1], hi);
    if (!(b > a)) continue;
    double l1 = 0.0;
    const double value = Rule::integrate(f, a, b, 0, 0.0, nullptr, &l1);
    segments.push_back({a, b, value, l1});
    scale += l1;
  }
  double total = 0.0;
  for (const auto& s : segments)
    total += s.l1 > 1e-16 * scale ? Rule::integrate(f, s.a, s.b, 12, 1e-12) : s.value;
  return total;
}

double quad_eta(const GaussianMixtured& p1, const GaussianMixtured& p2, double omega1, double omega2) {
  const auto axes = box_for({{&p1, omega1}, {&p2, omega2}});
  const MixtureEvaluator f1(p1);
  const MixtureEvaluator f2(p2);
  return integrate_fn([&](const Eigen::VectorXd& x) { return std::pow(f1(x), omega1) * std::pow(f2(x), omega2); },
                      axes);
}

double quad_power_mass(const GaussianMixtured& p, double omega) {
  const auto axes = box_for({{&p, omega}});
  const MixtureEvaluator f(p);
  return integrate_fn([&](const Eigen::VectorXd& x) { return std::pow(f(x), omega); }, axes);
}

double quad_product_mass(const GaussianMixtured& p1, const GaussianMixtured& p2) {
  const auto axes = box_for({{&p1, 1.0}, {&p2, 1.0}});
  const MixtureEvaluator f1(p1);
  const MixtureEvaluator f2(p2);
  return integrate_fn([&](const Eigen::VectorXd& x) { return f1(x) * f2(x); }, axes);
}

std::vector<Assignment> brute_ranked_assignments(const CostMatrix& c) {
  if (c.rows.size() > 7 || c.cols.size() > 7) throw DomainError("enumeration bound");
  std::vector<Assignment> out;
  std::vector<int> r2c(c.rows.size(), -1);
  std::vector<char> used(c.cols.size(), 0);
  enumerate_maps(c, 0, r2c, used, out);
  std::sort(out.begin(), out.end(), [](const Assignment& a, const Assignment& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.matches() != b.matches()) return a.matches() < b.matches();
    return a.row_to_col < b.row_to_col;
  });
  return out;
}

Assignment brute_assignment(const CostMatrix& c) {
  auto all = brute_ranked_assignments(c);
  if (all.empty()) return {std::vector<int>(c.rows.size(), -1), kInf};
  return all.front();
}

std::map<std::vector<Label>, double> brute_gci_weights(const MdGlmbDensity& first, const MdGlmbDensity& second,
                                                       double omega1, double omega2) {
  std::map<std::vector<Label>, double> raw;
  double total = 0.0;
  for (const auto& h1 : first.hypotheses) {
    const Hypothesis* h2 = second.find(h1.labels);
    if (!h2) continue;
    double w = std::pow(h1.weight, omega1) * std::pow(h2->weight, omega2);
    for (std::size_t k = 0; k < h1.labels.size() && w > 0.0; ++k)
      w *= quad_eta(h1.densities[k], h2->densities[k], omega1, omega2);
    raw[h1.labels] = w;
    total += w;
  }
  if (!(total > 0.0)) throw NumericError("degenerate fusion");
  for (auto& [k, w] : raw) w /= total;
  return raw;
}

}  // namespace gcilsm
