#include "gcilsm/matching.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gcilsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

// log of sum_ij w_i^a w_j^b rho(P_i, a) rho(P_j, b) N(m_i - m_j; 0, P_i/a + P_j/b)
double log_power_affinity(const GaussianMixtured& p1, const GaussianMixtured& p2, double w1, double w2) {
  std::vector<double> terms;
  terms.reserve(p1.size() * p2.size());
  std::vector<double> rho1;
  for (const auto& c : p1.components) rho1.push_back(log_power_normalizer(c.covariance, w1));
  std::vector<double> rho2;
  for (const auto& c : p2.components) rho2.push_back(log_power_normalizer(c.covariance, w2));
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(p1.dim());
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const auto& a = p1.components[i];
    if (!(a.weight > 0)) continue;
    for (std::size_t j = 0; j < p2.size(); ++j) {
      const auto& b = p2.components[j];
      if (!(b.weight > 0)) continue;
      const Eigen::MatrixXd s = a.covariance / w1 + b.covariance / w2;
      terms.push_back(w1 * std::log(a.weight) + w2 * std::log(b.weight) + rho1[i] + rho2[j] +
                      log_gaussian<double>(a.mean - b.mean, zero, s));
    }
  }
  return log_sum_exp<double>(terms);
}

}  // namespace

bool Matching::spaces_match() const {
  if (!leftovers_first.empty() || !leftovers_second.empty()) return false;
  return std::all_of(pair_costs.begin(), pair_costs.end(),
                     [this](double c) { return c <= non_assignment_cost; });
}

BernoulliTrack set_marginal(const LmbDensity& density, const Label& label) {
  if (const auto* t = density.find(label)) return *t;
  throw DomainError("unknown label");
}

BernoulliTrack set_marginal(const MdGlmbDensity& density, const Label& label, const ReductionParams& reduction) {
  if (std::find(density.label_space.begin(), density.label_space.end(), label) == density.label_space.end())
    throw DomainError("unknown label");
  BernoulliTrack out{label, 0.0, {}};
  GaussianMixtured mix;
  for (const auto& h : density.hypotheses) {
    const auto pos = h.position(label);
    if (!pos || !(h.weight > 0.0)) continue;
    out.existence += h.weight;
    for (const auto& c : h.densities[*pos].components)
      mix.components.push_back({h.weight * c.weight, c.mean, c.covariance});
  }
  if (out.existence > 0.0) {
    for (auto& c : mix.components) c.weight /= out.existence;
    out.density = gm_reduce(mix, reduction);
    out.existence = std::min(out.existence, 1.0);
  }
  return out;
}

std::vector<BernoulliTrack> set_marginals(const LmbDensity& density) { return density.tracks; }

std::vector<BernoulliTrack> set_marginals(const MdGlmbDensity& density, const ReductionParams& reduction) {
  std::vector<BernoulliTrack> out;
  out.reserve(density.label_space.size());
  for (const auto& l : density.label_space) out.push_back(set_marginal(density, l, reduction));
  return out;
}

double renyi_cost(const BernoulliTrack& first, const BernoulliTrack& second, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("Renyi order must lie in (0, 1)");
  const double beta = 1.0 - alpha;
  const double r1 = first.existence;
  const double r2 = second.existence;

  const double log_absent = alpha * safe_log(1.0 - r1) + beta * safe_log(1.0 - r2);
  double log_present = kNegInf;
  if (r1 > 0.0 && r2 > 0.0) {
    if (first.density.empty() || second.density.empty()) throw DomainError("empty density");
    log_present = alpha * std::log(r1) + beta * std::log(r2) +
                  log_power_affinity(first.density, second.density, alpha, beta);
  }
  const double terms[] = {log_absent, log_present};
  const double log_affinity = log_sum_exp<double>(terms);
  if (!(std::exp(log_affinity) > 0.0)) return kInf;
  return std::max(0.0, -log_affinity / beta);
}

CostMatrix build_cost_matrix(const std::vector<BernoulliTrack>& first,
                             const std::vector<BernoulliTrack>& second, double alpha,
                             double non_assignment_cost) {
  CostMatrix c;
  c.non_assignment_cost = non_assignment_cost;
  for (const auto& t : first) c.rows.push_back(t.label);
  for (const auto& t : second) c.cols.push_back(t.label);
  c.entries.resize(static_cast<Eigen::Index>(first.size()), static_cast<Eigen::Index>(second.size()));
  for (std::size_t i = 0; i < first.size(); ++i) {
    for (std::size_t j = 0; j < second.size(); ++j) {
      const double d = renyi_cost(first[i], second[j], alpha);
      c.entries(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d > non_assignment_cost ? kInf : d;
    }
  }
  return c;
}

Matching match_marginals(const std::vector<BernoulliTrack>& first,
                         const std::vector<BernoulliTrack>& second, double alpha,
                         double non_assignment_cost) {
  if (!(non_assignment_cost > 0.0)) throw DomainError("non-assignment cost must be positive");
  const CostMatrix c = build_cost_matrix(first, second, alpha, non_assignment_cost);
  const auto best = murty_kbest(c, 1);

  Matching m;
  m.non_assignment_cost = non_assignment_cost;
  if (best.empty()) throw NumericError("no feasible label matching");
  const auto& a = best.front();
  m.total_cost = a.cost;
  std::vector<char> col_used(second.size(), 0);
  for (std::size_t i = 0; i < first.size(); ++i) {
    const int j = a.row_to_col[i];
    if (j < 0) {
      m.leftovers_first.push_back(first[i].label);
      continue;
    }
    col_used[static_cast<std::size_t>(j)] = 1;
    m.pairs.emplace_back(first[i].label, second[static_cast<std::size_t>(j)].label);
    m.pair_costs.push_back(c.entries(static_cast<Eigen::Index>(i), j));
    m.relabel[second[static_cast<std::size_t>(j)].label] = first[i].label;
  }
  for (std::size_t j = 0; j < second.size(); ++j)
    if (!col_used[j]) m.leftovers_second.push_back(second[j].label);
  return m;
}

Matching match_label_spaces(const LmbDensity& first, const LmbDensity& second, double alpha,
                            double non_assignment_cost) {
  return match_marginals(set_marginals(first), set_marginals(second), alpha, non_assignment_cost);
}

Matching match_label_spaces(const MdGlmbDensity& first, const MdGlmbDensity& second, double alpha,
                            double non_assignment_cost) {
  return match_marginals(set_marginals(first), set_marginals(second), alpha, non_assignment_cost);
}

Matching match_by_name(const LmbDensity& first, const LmbDensity& second) {
  Matching m;
  m.non_assignment_cost = std::numeric_limits<double>::infinity();
  for (const auto& t : first.tracks) {
    if (second.find(t.label)) {
      m.pairs.emplace_back(t.label, t.label);
      m.pair_costs.push_back(0.0);
      m.relabel[t.label] = t.label;
    } else {
      m.leftovers_first.push_back(t.label);
    }
  }
  for (const auto& t : second.tracks)
    if (!first.find(t.label)) m.leftovers_second.push_back(t.label);
  return m;
}

}  // namespace gcilsm
