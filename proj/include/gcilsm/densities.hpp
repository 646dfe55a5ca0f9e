#pragma once

#include <optional>
#include <vector>

#include "gcilsm/gaussian_mixture.hpp"
#include "gcilsm/label.hpp"

namespace gcilsm {

/// Labeled Bernoulli: existence probability and normalized spatial density.
/// A track with zero existence may carry an empty density.
struct BernoulliTrack {
  Label label;
  double existence = 0.0;
  GaussianMixtured density;
};

/// Labeled multi-Bernoulli density: independent tracks with distinct labels.
struct LmbDensity {
  std::vector<BernoulliTrack> tracks;

  [[nodiscard]] bool empty() const { return tracks.empty(); }
  [[nodiscard]] std::size_t size() const { return tracks.size(); }
  [[nodiscard]] std::vector<Label> labels() const;
  [[nodiscard]] const BernoulliTrack* find(const Label& l) const;
};

/// One row of a marginalized delta-GLMB hypothesis table: a label set, its
/// joint existence weight and one density per label (aligned with `labels`,
/// which is sorted).
struct Hypothesis {
  std::vector<Label> labels;
  double weight = 0.0;
  std::vector<GaussianMixtured> densities;

  [[nodiscard]] std::optional<std::size_t> position(const Label& l) const;
};

/// Marginalized delta-GLMB density as an explicit hypothesis table.
struct MdGlmbDensity {
  std::vector<Label> label_space;
  std::vector<Hypothesis> hypotheses;

  [[nodiscard]] const Hypothesis* find(const std::vector<Label>& label_set) const;
};

/// Throws DomainError if a track violates 0 <= r <= 1, has an unnormalized
/// density while existing, or if labels repeat.
void validate(const LmbDensity& d);
/// Throws DomainError on weights not summing to one, repeated label sets,
/// labels outside the label space or unnormalized per-label densities.
void validate(const MdGlmbDensity& d);

/// Distribution of the number of existing tracks (length size()+1).
std::vector<double> cardinality_pmf(const LmbDensity& d);

/// Expand an LMB into its hypothesis table (2^n label sets). For tests and
/// small label spaces only.
MdGlmbDensity to_mdglmb(const LmbDensity& d);

}  // namespace gcilsm
