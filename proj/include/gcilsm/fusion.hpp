#pragma once

#include <utility>
#include <vector>

#include "gcilsm/densities.hpp"
#include "gcilsm/matching.hpp"

namespace gcilsm {

/// GCI exponents for a set of nodes; positive and summing to one.
struct FusionWeights {
  std::vector<int> nodes;
  std::vector<double> omega;

  /// Weight of `node`; throws DomainError if absent.
  [[nodiscard]] double of(int node) const;
};

/// Undirected sensor network without self-loops.
class NetworkTopology {
 public:
  NetworkTopology() = default;
  NetworkTopology(std::vector<int> nodes, const std::vector<std::pair<int, int>>& edges);

  [[nodiscard]] const std::vector<int>& nodes() const { return nodes_; }
  /// Neighbors in ascending id order.
  [[nodiscard]] const std::vector<int>& neighbors(int node) const;
  [[nodiscard]] std::size_t degree(int node) const { return neighbors(node).size(); }
  [[nodiscard]] bool contains(int node) const;
  [[nodiscard]] bool connected() const;
  /// Position of `node` in nodes().
  [[nodiscard]] std::size_t index_of(int node) const;

 private:
  std::vector<int> nodes_;
  std::vector<std::vector<int>> adjacency_;
};

/// Pairs are fused by the geometric-mean rule; `alpha` and `non_assignment_cost`
/// configure the label-space matching step.
struct FusionParams {
  double alpha = 0.5;
  double non_assignment_cost = 2.0;
  ReductionParams reduction{};
  /// When false, label spaces are assumed shared and tracks are paired by
  /// label name (no divergence matching).
  bool match_label_spaces = true;
};

/// Weighted geometric mean of two labeled Bernoulli tracks with the same
/// label. The fused density is the normalized product of the component-wise
/// powers, reduced with `reduction`.
BernoulliTrack fuse_bernoulli_pair(const BernoulliTrack& first, const BernoulliTrack& second, double omega1,
                                   double omega2, const ReductionParams& reduction = {});

/// Fuses matched pairs under the first density's label names. Unmatched
/// tracks on either side are dropped.
LmbDensity fuse_lmb(const LmbDensity& first, const LmbDensity& second, const Matching& matching,
                    double omega1, double omega2, const ReductionParams& reduction = {});

/// Geometric-mean fusion of two Mδ-GLMB densities over the same label space.
/// Hypotheses missing (or weightless) on either side receive zero weight and
/// are omitted from the result. Per-label densities are not reduced.
/// Throws DomainError when the label spaces differ and
/// NumericError("degenerate fusion") when no hypothesis keeps weight.
MdGlmbDensity fuse_mdglmb(const MdGlmbDensity& first, const MdGlmbDensity& second, double omega1, double omega2);

/// Metropolis weights of `node` and its neighbors: 1 / (1 + max(deg i, deg j))
/// per neighbor, the remainder on the node itself.
FusionWeights metropolis_weights(const NetworkTopology& topology, int node);

/// Per node: start from the node's own posterior and fold in each neighbor in
/// ascending id order (match label spaces, then fuse the matched pairs with
/// the node's and neighbor's Metropolis weights renormalized to the pair).
/// `posteriors` is indexed like topology.nodes().
std::vector<LmbDensity> fuse_network(const std::vector<LmbDensity>& posteriors, const NetworkTopology& topology,
                                     const FusionParams& params);

}  // namespace gcilsm
