#pragma once

#include <functional>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "gcilsm/assignment.hpp"
#include "gcilsm/densities.hpp"

namespace gcilsm {

struct OspaParams {
  double order = 1.0;
  double cutoff = 100.0;
};

/// OSPA distance between two finite point sets (Euclidean base distance).
/// Zero for two empty sets, the cutoff when exactly one is empty.
double ospa(std::span<const Eigen::Vector2d> x, std::span<const Eigen::Vector2d> y, const OspaParams& params);

// Independent reference implementations. They enumerate or integrate
// directly and are bounded to small problems.

/// Set marginal by enumerating every subset of the label space (at most 12
/// labels). The mixture is the plain concatenation, not reduced.
BernoulliTrack brute_marginal(const MdGlmbDensity& density, const Label& label);

/// Adaptive Gauss-Kronrod integral of f over [lo, hi], split at `breaks`.
double integrate_1d(const std::function<double(double)>& f, double lo, double hi, std::vector<double> breaks = {});

/// Integral of p1^omega1 p2^omega2 (true pointwise powers) over a box covering
/// every component mean +- 10 standard deviations (widened for the power).
/// 1-D and 2-D densities only.
double quad_eta(const GaussianMixtured& p1, const GaussianMixtured& p2, double omega1, double omega2);

/// Integral of p^omega (true pointwise power). 1-D and 2-D only.
double quad_power_mass(const GaussianMixtured& p, double omega);

/// Integral of p1 * p2. 1-D and 2-D only.
double quad_product_mass(const GaussianMixtured& p1, const GaussianMixtured& p2);

/// Every finite-cost partial assignment, sorted by cost, then fewer matched
/// pairs, then row_to_col lexicographically. At most 7 rows and 7 columns.
std::vector<Assignment> brute_ranked_assignments(const CostMatrix& c);

/// First element of brute_ranked_assignments. Cost is +inf when no
/// finite-cost assignment exists.
Assignment brute_assignment(const CostMatrix& c);

/// Fused hypothesis weights by explicit normalization with quadrature
/// normalizers: w(I) proportional to w1(I)^omega1 w2(I)^omega2 prod_l quad_eta.
std::map<std::vector<Label>, double> brute_gci_weights(const MdGlmbDensity& first, const MdGlmbDensity& second,
                                                       double omega1, double omega2);

}  // namespace gcilsm
