#include "gcilsm/densities.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace gcilsm {

std::vector<Label> LmbDensity::labels() const {
  std::vector<Label> out;
  out.reserve(tracks.size());
  for (const auto& t : tracks) out.push_back(t.label);
  return out;
}

const BernoulliTrack* LmbDensity::find(const Label& l) const {
  for (const auto& t : tracks)
    if (t.label == l) return &t;
  return nullptr;
}

std::optional<std::size_t> Hypothesis::position(const Label& l) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), l);
  if (it == labels.end() || *it != l) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

const Hypothesis* MdGlmbDensity::find(const std::vector<Label>& label_set) const {
  for (const auto& h : hypotheses)
    if (h.labels == label_set) return &h;
  return nullptr;
}

void validate(const LmbDensity& d) {
  std::set<Label> seen;
  for (const auto& t : d.tracks) {
    if (!seen.insert(t.label).second) throw DomainError("duplicate label");
    if (!(t.existence >= 0.0 && t.existence <= 1.0)) throw DomainError("existence outside [0, 1]");
    if (t.existence > 0.0 && !is_normalized(t.density)) throw DomainError("track density not normalized");
  }
}

void validate(const MdGlmbDensity& d) {
  std::set<Label> space(d.label_space.begin(), d.label_space.end());
  if (space.size() != d.label_space.size()) throw DomainError("duplicate label");
  std::set<std::vector<Label>> sets;
  double total = 0.0;
  for (const auto& h : d.hypotheses) {
    if (!(h.weight >= 0.0)) throw DomainError("negative hypothesis weight");
    if (!std::is_sorted(h.labels.begin(), h.labels.end()) ||
        std::adjacent_find(h.labels.begin(), h.labels.end()) != h.labels.end())
      throw DomainError("hypothesis labels must be sorted and distinct");
    if (!sets.insert(h.labels).second) throw DomainError("duplicate hypothesis label set");
    if (h.densities.size() != h.labels.size()) throw DomainError("one density per label required");
    for (std::size_t i = 0; i < h.labels.size(); ++i) {
      if (!space.contains(h.labels[i])) throw DomainError("unknown label");
      if (!is_normalized(h.densities[i])) throw DomainError("hypothesis density not normalized");
    }
    total += h.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) throw DomainError("hypothesis weights must sum to 1");
}

std::vector<double> cardinality_pmf(const LmbDensity& d) {
  std::vector<double> pmf{1.0};
  for (const auto& t : d.tracks) {
    std::vector<double> next(pmf.size() + 1, 0.0);
    for (std::size_t n = 0; n < pmf.size(); ++n) {
      next[n] += pmf[n] * (1.0 - t.existence);
      next[n + 1] += pmf[n] * t.existence;
    }
    pmf = std::move(next);
  }
  return pmf;
}

MdGlmbDensity to_mdglmb(const LmbDensity& d) {
  if (d.size() > 20) throw DomainError("label space too large to expand");
  std::vector<const BernoulliTrack*> sorted;
  for (const auto& t : d.tracks) sorted.push_back(&t);
  std::sort(sorted.begin(), sorted.end(),
            [](const auto* a, const auto* b) { return a->label < b->label; });

  MdGlmbDensity out;
  for (const auto* t : sorted) out.label_space.push_back(t->label);
  const std::size_t n = sorted.size();
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Hypothesis h;
    h.weight = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (std::size_t{1} << i)) {
        h.weight *= sorted[i]->existence;
        h.labels.push_back(sorted[i]->label);
        h.densities.push_back(sorted[i]->density);
      } else {
        h.weight *= 1.0 - sorted[i]->existence;
      }
    }
    out.hypotheses.push_back(std::move(h));
  }
  return out;
}

}  // namespace gcilsm
