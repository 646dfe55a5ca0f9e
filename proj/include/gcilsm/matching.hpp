#pragma once

#include <limits>
#include <map>
#include <utility>
#include <vector>

#include "gcilsm/assignment.hpp"
#include "gcilsm/densities.hpp"

namespace gcilsm {

/// Reduction applied to Mδ-GLMB set marginals unless the caller asks for
/// something else: merging only, which keeps the mixture's first two moments.
inline constexpr ReductionParams kMomentPreservingReduction{0.0, 4.0,
                                                            std::numeric_limits<std::size_t>::max()};

/// Correspondence between two label spaces. Labels of the second space are
/// renamed to their partner in the first, so the fused space uses the first
/// space's names.
struct Matching {
  std::vector<std::pair<Label, Label>> pairs;
  std::vector<double> pair_costs;
  std::vector<Label> leftovers_first;
  std::vector<Label> leftovers_second;
  std::map<Label, Label> relabel;
  double total_cost = 0.0;
  double non_assignment_cost = 0.0;

  /// True when nothing is left over and every pair is within the threshold:
  /// the two label spaces then refer to the same objects.
  [[nodiscard]] bool spaces_match() const;
};

/// Single-label set marginal of an LMB: the track itself.
/// Throws DomainError("unknown label").
BernoulliTrack set_marginal(const LmbDensity& density, const Label& label);

/// Single-label set marginal of an Mδ-GLMB: existence is the total weight of
/// the hypotheses containing the label and the density is their weighted
/// mixture, reduced with `reduction`. A label present in no weighted
/// hypothesis yields existence 0 and an empty density.
BernoulliTrack set_marginal(const MdGlmbDensity& density, const Label& label,
                            const ReductionParams& reduction = kMomentPreservingReduction);

std::vector<BernoulliTrack> set_marginals(const LmbDensity& density);
std::vector<BernoulliTrack> set_marginals(const MdGlmbDensity& density,
                                          const ReductionParams& reduction = kMomentPreservingReduction);

/// Rényi divergence of order alpha between two labeled Bernoulli densities,
/// with Gaussian-mixture powers taken component-wise:
///   C = -(1/beta) log( q1^alpha q2^beta + r1^alpha r2^beta K ),  beta = 1 - alpha.
/// Clamped at 0 from below. +inf when the affinity underflows to zero.
double renyi_cost(const BernoulliTrack& first, const BernoulliTrack& second, double alpha);

/// Divergence between every pair of marginals. Pairs costlier than the
/// non-assignment cost are marked +inf so they can never be matched.
CostMatrix build_cost_matrix(const std::vector<BernoulliTrack>& first,
                             const std::vector<BernoulliTrack>& second, double alpha,
                             double non_assignment_cost);

/// Optimal correspondence between marginal lists under the non-assignment
/// cost.
Matching match_marginals(const std::vector<BernoulliTrack>& first,
                         const std::vector<BernoulliTrack>& second, double alpha,
                         double non_assignment_cost);

Matching match_label_spaces(const LmbDensity& first, const LmbDensity& second, double alpha,
                            double non_assignment_cost);
Matching match_label_spaces(const MdGlmbDensity& first, const MdGlmbDensity& second, double alpha,
                            double non_assignment_cost);

/// Pairs labels by name only (no divergence test); labels present on one side
/// are left over. This is what fusion does when it assumes a shared label
/// space.
Matching match_by_name(const LmbDensity& first, const LmbDensity& second);

}  // namespace gcilsm
