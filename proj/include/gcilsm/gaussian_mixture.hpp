#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcilsm/errors.hpp"

namespace gcilsm {

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// One weighted Gaussian term w * N(x; m, P). Dimension is dynamic so the
/// same algebra serves 1-D test instances and the 4-D tracking state.
template <typename Scalar>
struct GaussianComponent {
  Scalar weight = Scalar(1);
  VectorX<Scalar> mean;
  MatrixX<Scalar> covariance;
};

/// Ordered list of components. An empty mixture is the density of an object
/// that does not exist.
template <typename Scalar>
struct GaussianMixture {
  using Component = GaussianComponent<Scalar>;
  std::vector<Component> components;

  GaussianMixture() = default;
  explicit GaussianMixture(std::vector<Component> c) : components(std::move(c)) {}

  static GaussianMixture single(VectorX<Scalar> mean, MatrixX<Scalar> cov) {
    return GaussianMixture({Component{Scalar(1), std::move(mean), std::move(cov)}});
  }

  [[nodiscard]] bool empty() const { return components.empty(); }
  [[nodiscard]] std::size_t size() const { return components.size(); }
  [[nodiscard]] Eigen::Index dim() const {
    return components.empty() ? 0 : components.front().mean.size();
  }
};

using GaussianComponentd = GaussianComponent<double>;
using GaussianMixtured = GaussianMixture<double>;

/// A mixture known only up to scale: `density` is normalized and the scale is
/// kept as a logarithm so that vanishing overlaps survive.
template <typename Scalar>
struct ScaledMixture {
  GaussianMixture<Scalar> density;
  Scalar log_mass = -std::numeric_limits<Scalar>::infinity();

  [[nodiscard]] Scalar mass() const { return std::exp(log_mass); }

  /// The mixture with its mass folded back into the component weights.
  [[nodiscard]] GaussianMixture<Scalar> unnormalized() const {
    GaussianMixture<Scalar> out = density;
    const Scalar m = mass();
    for (auto& c : out.components) c.weight *= m;
    return out;
  }
};

struct ReductionParams {
  double prune_threshold = 1e-5;
  double merge_threshold = 4.0;
  std::size_t max_components = 10;
};

namespace detail {

template <typename Scalar>
Scalar log_sum_exp(std::span<const Scalar> xs) {
  if (xs.empty()) return -std::numeric_limits<Scalar>::infinity();
  const Scalar hi = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(hi)) return hi;
  Scalar acc = 0;
  for (Scalar x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

template <typename Scalar>
Eigen::LLT<MatrixX<Scalar>> checked_llt(const MatrixX<Scalar>& m) {
  Eigen::LLT<MatrixX<Scalar>> llt(m);
  if (llt.info() != Eigen::Success) throw NumericError("covariance is not positive definite");
  return llt;
}

template <typename Scalar>
Scalar log_det(const Eigen::LLT<MatrixX<Scalar>>& llt) {
  return Scalar(2) * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline void require_non_empty(std::size_t n) {
  if (n == 0) throw DomainError("empty density");
}

}  // namespace detail

template <typename Scalar>
Scalar log_sum_exp(std::span<const Scalar> xs) {
  return detail::log_sum_exp(xs);
}

/// log N(x; m, P).
template <typename Scalar>
Scalar log_gaussian(const VectorX<Scalar>& x, const VectorX<Scalar>& mean,
                    const MatrixX<Scalar>& cov) {
  const auto llt = detail::checked_llt(cov);
  const VectorX<Scalar> diff = x - mean;
  const Scalar maha = llt.matrixL().solve(diff).squaredNorm();
  const auto d = static_cast<Scalar>(x.size());
  return Scalar(-0.5) * (d * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) +
                         detail::log_det(llt) + maha);
}

template <typename Scalar>
Scalar total_weight(const GaussianMixture<Scalar>& gm) {
  Scalar s = 0;
  for (const auto& c : gm.components) s += c.weight;
  return s;
}

template <typename Scalar>
bool is_normalized(const GaussianMixture<Scalar>& gm, Scalar tol = Scalar(1e-9)) {
  return !gm.empty() && std::abs(total_weight(gm) - Scalar(1)) <= tol;
}

template <typename Scalar>
GaussianMixture<Scalar> normalized(GaussianMixture<Scalar> gm) {
  detail::require_non_empty(gm.size());
  const Scalar s = total_weight(gm);
  if (!(s > 0)) throw NumericError("mixture has zero total weight");
  for (auto& c : gm.components) c.weight /= s;
  return gm;
}

/// Pointwise value of the mixture.
template <typename Scalar>
Scalar evaluate(const GaussianMixture<Scalar>& gm, const VectorX<Scalar>& x) {
  Scalar v = 0;
  for (const auto& c : gm.components) v += c.weight * std::exp(log_gaussian(x, c.mean, c.covariance));
  return v;
}

/// Overall first moment of a normalized mixture.
template <typename Scalar>
VectorX<Scalar> mixture_mean(const GaussianMixture<Scalar>& gm) {
  detail::require_non_empty(gm.size());
  VectorX<Scalar> m = VectorX<Scalar>::Zero(gm.dim());
  Scalar w = 0;
  for (const auto& c : gm.components) {
    m += c.weight * c.mean;
    w += c.weight;
  }
  return m / w;
}

/// Overall second central moment of a mixture.
template <typename Scalar>
MatrixX<Scalar> mixture_covariance(const GaussianMixture<Scalar>& gm) {
  const VectorX<Scalar> mu = mixture_mean(gm);
  MatrixX<Scalar> p = MatrixX<Scalar>::Zero(gm.dim(), gm.dim());
  Scalar w = 0;
  for (const auto& c : gm.components) {
    const VectorX<Scalar> d = c.mean - mu;
    p += c.weight * (c.covariance + d * d.transpose());
    w += c.weight;
  }
  return p / w;
}

/// log of rho(P, w) = integral of N(x; m, P)^w over x.
template <typename Scalar>
Scalar log_power_normalizer(const Eigen::LLT<MatrixX<Scalar>>& llt, Eigen::Index dim, Scalar omega) {
  const auto d = static_cast<Scalar>(dim);
  const Scalar log_two_pi = std::log(Scalar(2) * std::numbers::pi_v<Scalar>);
  return Scalar(0.5) * ((Scalar(1) - omega) * (d * log_two_pi + detail::log_det(llt)) -
                        d * std::log(omega));
}

template <typename Scalar>
Scalar log_power_normalizer(const MatrixX<Scalar>& cov, Scalar omega) {
  return log_power_normalizer(detail::checked_llt(cov), cov.rows(), omega);
}

/// Component-wise exponentiation (w, m, P) -> (w^omega rho(P, omega), m, P / omega).
/// Exact for a single Gaussian; for several components it approximates the
/// power of the sum by the sum of the powers, which is accurate when the
/// components are well separated.
template <typename Scalar>
ScaledMixture<Scalar> gm_power(const GaussianMixture<Scalar>& gm, Scalar omega) {
  detail::require_non_empty(gm.size());
  if (!(omega > 0 && omega <= 1)) throw DomainError("fusion exponent must lie in (0, 1]");

  ScaledMixture<Scalar> out;
  std::vector<Scalar> logw;
  logw.reserve(gm.size());
  out.density.components.reserve(gm.size());
  for (const auto& c : gm.components) {
    const auto llt = detail::checked_llt(c.covariance);
    const Scalar lw = (c.weight > 0 ? omega * std::log(c.weight)
                                    : -std::numeric_limits<Scalar>::infinity()) +
                      log_power_normalizer(llt, c.covariance.rows(), omega);
    logw.push_back(lw);
    out.density.components.push_back({Scalar(0), c.mean, c.covariance / omega});
  }
  out.log_mass = detail::log_sum_exp<Scalar>(logw);
  if (!std::isfinite(out.log_mass)) throw NumericError("mixture has zero total weight");
  for (std::size_t i = 0; i < logw.size(); ++i)
    out.density.components[i].weight = std::exp(logw[i] - out.log_mass);
  return out;
}

/// Exact product of two mixtures. Component (i, j) carries weight
/// w_i w_j N(m_i - m_j; 0, P_i + P_j) and the Gaussian-product moments.
/// If every pairwise overlap underflows even in log space, the returned
/// density is empty and log_mass is -inf.
template <typename Scalar>
ScaledMixture<Scalar> gm_product(const GaussianMixture<Scalar>& a, const GaussianMixture<Scalar>& b) {
  detail::require_non_empty(a.size());
  detail::require_non_empty(b.size());

  ScaledMixture<Scalar> out;
  std::vector<Scalar> logw;
  logw.reserve(a.size() * b.size());
  out.density.components.reserve(a.size() * b.size());
  const VectorX<Scalar> zero = VectorX<Scalar>::Zero(a.dim());
  for (const auto& ca : a.components) {
    for (const auto& cb : b.components) {
      if (!(ca.weight > 0) || !(cb.weight > 0)) continue;
      const MatrixX<Scalar> s = ca.covariance + cb.covariance;
      const auto llt = detail::checked_llt(s);
      const VectorX<Scalar> diff = cb.mean - ca.mean;
      const Scalar maha = llt.matrixL().solve(diff).squaredNorm();
      const auto d = static_cast<Scalar>(diff.size());
      const Scalar lw = std::log(ca.weight) + std::log(cb.weight) -
                        Scalar(0.5) * (d * std::log(Scalar(2) * std::numbers::pi_v<Scalar>) +
                                       detail::log_det(llt) + maha);
      // gain = Pa (Pa + Pb)^-1
      const MatrixX<Scalar> gain = llt.solve(ca.covariance).transpose();
      MatrixX<Scalar> cov = ca.covariance - gain * ca.covariance;
      cov = Scalar(0.5) * (cov + cov.transpose()).eval();
      logw.push_back(lw);
      out.density.components.push_back({Scalar(0), ca.mean + gain * diff, std::move(cov)});
    }
  }
  out.log_mass = detail::log_sum_exp<Scalar>(logw);
  if (!std::isfinite(out.log_mass)) {
    out.density.components.clear();
    return out;
  }
  for (std::size_t i = 0; i < logw.size(); ++i)
    out.density.components[i].weight = std::exp(logw[i] - out.log_mass);
  return out;
}

/// Prune, merge and cap a mixture. Components with weight below the prune
/// threshold are dropped; the heaviest remaining component absorbs every
/// component whose squared Mahalanobis distance under its own covariance is
/// within the merge threshold (moment-preserving); at most max_components
/// survive. A normalized input yields a normalized output. Output weights are
/// in descending order. If everything would be pruned the heaviest original
/// component is returned alone and `*all_pruned` is set.
template <typename Scalar>
GaussianMixture<Scalar> gm_reduce(const GaussianMixture<Scalar>& gm, const ReductionParams& params,
                                  bool* all_pruned = nullptr) {
  detail::require_non_empty(gm.size());
  if (params.max_components < 1) throw DomainError("max_components must be at least 1");
  if (all_pruned) *all_pruned = false;
  const bool was_normalized = is_normalized(gm);

  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < gm.size(); ++i)
    if (gm.components[i].weight >= Scalar(params.prune_threshold)) live.push_back(i);

  if (live.empty()) {
    if (all_pruned) *all_pruned = true;
    std::size_t best = 0;
    for (std::size_t i = 1; i < gm.size(); ++i)
      if (gm.components[i].weight > gm.components[best].weight) best = i;
    GaussianMixture<Scalar> out({gm.components[best]});
    if (was_normalized) out.components.front().weight = Scalar(1);
    return out;
  }
  const bool pruned = live.size() != gm.size();

  GaussianMixture<Scalar> out;
  while (!live.empty()) {
    std::size_t top = 0;
    for (std::size_t k = 1; k < live.size(); ++k)
      if (gm.components[live[k]].weight > gm.components[live[top]].weight) top = k;
    const auto& lead = gm.components[live[top]];
    const auto llt = detail::checked_llt(lead.covariance);

    std::vector<std::size_t> cluster;
    std::vector<std::size_t> rest;
    for (std::size_t idx : live) {
      const VectorX<Scalar> d = gm.components[idx].mean - lead.mean;
      const Scalar maha = llt.matrixL().solve(d).squaredNorm();
      (maha <= Scalar(params.merge_threshold) ? cluster : rest).push_back(idx);
    }

    if (cluster.size() == 1) {
      out.components.push_back(gm.components[cluster.front()]);
    } else {
      Scalar w = 0;
      VectorX<Scalar> m = VectorX<Scalar>::Zero(lead.mean.size());
      for (std::size_t idx : cluster) {
        w += gm.components[idx].weight;
        m += gm.components[idx].weight * gm.components[idx].mean;
      }
      m /= w;
      MatrixX<Scalar> p = MatrixX<Scalar>::Zero(m.size(), m.size());
      for (std::size_t idx : cluster) {
        const auto& c = gm.components[idx];
        const VectorX<Scalar> d = c.mean - m;
        p += c.weight * (c.covariance + d * d.transpose());
      }
      p /= w;
      out.components.push_back({w, std::move(m), Scalar(0.5) * (p + p.transpose())});
    }
    live = std::move(rest);
  }

  std::stable_sort(out.components.begin(), out.components.end(),
                   [](const auto& x, const auto& y) { return x.weight > y.weight; });
  const bool capped = out.size() > params.max_components;
  if (capped) out.components.resize(params.max_components);
  if (was_normalized && (pruned || capped)) out = normalized(std::move(out));
  return out;
}

}  // namespace gcilsm
