#include "gcilsm/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

namespace gcilsm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

void check_pair_weights(double omega1, double omega2) {
  if (!(omega1 > 0.0 && omega1 <= 1.0 && omega2 > 0.0 && omega2 <= 1.0) || std::abs(omega1 + omega2 - 1.0) > 1e-12)
    throw DomainError("fusion weights must be positive and sum to 1");
}

// Normalized product of the two powers and its log normalizer log eta.
ScaledMixture<double> fused_density(const GaussianMixtured& p1, const GaussianMixtured& p2, double omega1,
                                    double omega2) {
  const auto a = gm_power(p1, omega1);
  const auto b = gm_power(p2, omega2);
  auto prod = gm_product(a.density, b.density);
  prod.log_mass += a.log_mass + b.log_mass;
  return prod;
}

}  // namespace

double FusionWeights::of(int node) const {
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i] == node) return omega[i];
  throw DomainError("node has no fusion weight");
}

NetworkTopology::NetworkTopology(std::vector<int> nodes, const std::vector<std::pair<int, int>>& edges)
    : nodes_(std::move(nodes)), adjacency_(nodes_.size()) {
  std::vector<int> sorted = nodes_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw DomainError("duplicate node id");
  for (const auto& [a, b] : edges) {
    if (a == b) throw DomainError("self-loop in topology");
    auto& na = adjacency_[index_of(a)];
    auto& nb = adjacency_[index_of(b)];
    if (std::find(na.begin(), na.end(), b) != na.end()) throw DomainError("duplicate edge in topology");
    na.push_back(b);
    nb.push_back(a);
  }
  for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());
}

std::size_t NetworkTopology::index_of(int node) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end()) throw DomainError("unknown node");
  return static_cast<std::size_t>(it - nodes_.begin());
}

bool NetworkTopology::contains(int node) const {
  return std::find(nodes_.begin(), nodes_.end(), node) != nodes_.end();
}

const std::vector<int>& NetworkTopology::neighbors(int node) const { return adjacency_[index_of(node)]; }

bool NetworkTopology::connected() const {
  if (nodes_.empty()) return true;
  std::vector<char> seen(nodes_.size(), 0);
  std::queue<std::size_t> todo;
  todo.push(0);
  seen[0] = 1;
  std::size_t count = 1;
  while (!todo.empty()) {
    const std::size_t i = todo.front();
    todo.pop();
    for (int nb : adjacency_[i]) {
      const std::size_t j = index_of(nb);
      if (!seen[j]) {
        seen[j] = 1;
        ++count;
        todo.push(j);
      }
    }
  }
  return count == nodes_.size();
}

BernoulliTrack fuse_bernoulli_pair(const BernoulliTrack& first, const BernoulliTrack& second, double omega1,
                                   double omega2, const ReductionParams& reduction) {
  check_pair_weights(omega1, omega2);
  if (first.label != second.label) throw DomainError("fused tracks must carry the same label");
  const double r1 = first.existence;
  const double r2 = second.existence;
  const double log_absent = omega1 * safe_log(1.0 - r1) + omega2 * safe_log(1.0 - r2);

  BernoulliTrack out{first.label, 0.0, {}};
  if (!(r1 > 0.0) || !(r2 > 0.0)) return out;

  const auto fused = fused_density(first.density, second.density, omega1, omega2);
  if (!(fused.log_mass > kNegInf) || fused.density.empty()) {
    if (r1 == 1.0 && r2 == 1.0) throw NumericError("disjoint supports");
    return out;
  }
  const double log_present = omega1 * std::log(r1) + omega2 * std::log(r2) + fused.log_mass;
  const double terms[] = {log_absent, log_present};
  out.existence = std::clamp(std::exp(log_present - log_sum_exp<double>(terms)), 0.0, 1.0);
  out.density = gm_reduce(fused.density, reduction);
  return out;
}

LmbDensity fuse_lmb(const LmbDensity& first, const LmbDensity& second, const Matching& matching, double omega1,
                    double omega2, const ReductionParams& reduction) {
  LmbDensity out;
  out.tracks.reserve(matching.pairs.size());
  for (const auto& [l1, l2] : matching.pairs) {
    const auto* t1 = first.find(l1);
    const auto* t2 = second.find(l2);
    if (!t1 || !t2) throw DomainError("matching refers to an unknown label");
    BernoulliTrack renamed = *t2;
    renamed.label = l1;
    out.tracks.push_back(fuse_bernoulli_pair(*t1, renamed, omega1, omega2, reduction));
  }
  return out;
}

MdGlmbDensity fuse_mdglmb(const MdGlmbDensity& first, const MdGlmbDensity& second, double omega1, double omega2) {
  check_pair_weights(omega1, omega2);
  std::vector<Label> s1 = first.label_space;
  std::vector<Label> s2 = second.label_space;
  std::sort(s1.begin(), s1.end());
  std::sort(s2.begin(), s2.end());
  if (s1 != s2) throw DomainError("label spaces must match before fusion");

  MdGlmbDensity out;
  out.label_space = first.label_space;
  std::vector<double> logw;
  for (const auto& h1 : first.hypotheses) {
    const auto* h2 = second.find(h1.labels);
    if (!h2 || !(h1.weight > 0.0) || !(h2->weight > 0.0)) continue;
    Hypothesis h;
    h.labels = h1.labels;
    double lw = omega1 * std::log(h1.weight) + omega2 * std::log(h2->weight);
    for (std::size_t k = 0; k < h1.labels.size(); ++k) {
      auto fused = fused_density(h1.densities[k], h2->densities[k], omega1, omega2);
      lw += fused.log_mass;
      h.densities.push_back(std::move(fused.density));
    }
    if (!(lw > kNegInf)) continue;
    logw.push_back(lw);
    out.hypotheses.push_back(std::move(h));
  }
  const double norm = log_sum_exp<double>(logw);
  if (out.hypotheses.empty() || !std::isfinite(norm)) throw NumericError("degenerate fusion");
  for (std::size_t i = 0; i < logw.size(); ++i) out.hypotheses[i].weight = std::exp(logw[i] - norm);
  return out;
}

FusionWeights metropolis_weights(const NetworkTopology& topology, int node) {
  FusionWeights w;
  const auto& nbs = topology.neighbors(node);
  const auto deg = static_cast<double>(nbs.size());
  double rest = 1.0;
  std::vector<std::pair<int, double>> entries;
  for (int nb : nbs) {
    const double wj = 1.0 / (1.0 + std::max(deg, static_cast<double>(topology.degree(nb))));
    entries.emplace_back(nb, wj);
    rest -= wj;
  }
  entries.emplace_back(node, rest);
  std::sort(entries.begin(), entries.end());
  for (const auto& [n, x] : entries) {
    w.nodes.push_back(n);
    w.omega.push_back(x);
  }
  return w;
}

std::vector<LmbDensity> fuse_network(const std::vector<LmbDensity>& posteriors, const NetworkTopology& topology,
                                     const FusionParams& params) {
  if (posteriors.size() != topology.nodes().size()) throw DomainError("one posterior per node required");
  std::vector<LmbDensity> out;
  out.reserve(posteriors.size());
  for (std::size_t i = 0; i < posteriors.size(); ++i) {
    const int node = topology.nodes()[i];
    const FusionWeights weights = metropolis_weights(topology, node);
    const double self = weights.of(node);
    LmbDensity fused = posteriors[i];
    for (int nb : topology.neighbors(node)) {
      const auto& other = posteriors[topology.index_of(nb)];
      const Matching m = params.match_label_spaces
                             ? match_label_spaces(fused, other, params.alpha, params.non_assignment_cost)
                             : match_by_name(fused, other);
      const double omega1 = self / (self + weights.of(nb));
      fused = fuse_lmb(fused, other, m, omega1, 1.0 - omega1, params.reduction);
    }
    out.push_back(std::move(fused));
  }
  return out;
}

}  // namespace gcilsm
