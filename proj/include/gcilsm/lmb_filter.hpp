#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gcilsm/densities.hpp"

namespace gcilsm {

/// Linear-Gaussian motion with survival. State is [px, vx, py, vy].
struct MotionModel {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd process_noise;
  double survival_prob = 0.99;
  double period = 1.0;

  /// Nearly-constant-velocity model with white-noise acceleration of standard
  /// deviation sigma_v on each axis.
  static MotionModel constant_velocity(double period, double sigma_v, double survival_prob);
};

struct Region {
  double x_min = -1000.0;
  double x_max = 1000.0;
  double y_min = -1000.0;
  double y_max = 1000.0;

  [[nodiscard]] double area() const { return (x_max - x_min) * (y_max - y_min); }
  [[nodiscard]] bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

/// Linear-Gaussian position sensor with detection probability and Poisson
/// clutter uniform over `region`.
struct SensorModel {
  Eigen::MatrixXd observation;
  Eigen::MatrixXd noise;
  double detect_prob = 0.99;
  double clutter_rate = 10.0;
  Region region;

  static SensorModel position_sensor(double sigma, double detect_prob, double clutter_rate, Region region);

  /// Clutter intensity per unit area; floored to the smallest normal double so
  /// that a clutter-free sensor still has a finite log-likelihood ratio.
  [[nodiscard]] double clutter_density() const;
};

struct Measurement {
  Eigen::VectorXd z;
  int scan = 0;
  int sensor_id = 0;
};

struct UpdateParams {
  int k_best = 100;
  /// Squared Mahalanobis innovation above which a measurement cannot be
  /// associated with a track.
  double gate = 25.0;
  /// Association hypotheses whose normalized weight falls below this are
  /// discarded.
  double hypothesis_truncation = 1e-4;
  ReductionParams reduction{};
};

struct UpdateResult {
  LmbDensity posterior;
  /// Per measurement (scan order): probability that it was assigned to some
  /// track.
  std::vector<double> assoc_prob;
};

struct BirthParams {
  /// Expected number of births per scan.
  double expected_births = 0.1;
  double max_existence = 0.5;
  Eigen::MatrixXd covariance = Eigen::MatrixXd::Identity(4, 4) * 100.0;
};

struct Estimate {
  Label label;
  Eigen::VectorXd state;
};

/// Survival-thinned Kalman prediction of every track, followed by the births.
/// Throws DomainError("duplicate label") if a birth label is already in use.
LmbDensity lmb_predict(const LmbDensity& prior, const MotionModel& motion, const LmbDensity& births);

/// Measurement update under the standard detection/clutter model.
///
/// Tracks and measurements are split into independent clusters through the
/// gate; within each cluster the k_best cheapest association hypotheses are
/// ranked by Murty's method on the negative log-likelihood ratio and
/// marginalized back to one Bernoulli per track. A track outside every gate
/// receives the closed-form missed-detection update with its density
/// untouched.
UpdateResult lmb_update(const LmbDensity& predicted, std::span<const Measurement> scan,
                        const SensorModel& sensor, const UpdateParams& params);

/// Measurement-driven births for the next scan. The existence of the birth at
/// z is proportional to the probability that z was not assigned, scaled to
/// the expected number of births and capped at max_existence. Labels are
/// (birth_scan, position of z in the scan, 1-based).
LmbDensity adaptive_birth(std::span<const Measurement> scan, std::span<const double> assoc_prob,
                          const BirthParams& params, const SensorModel& sensor, int birth_scan);

/// Fixed-position births (prior knowledge of where objects appear, not when).
/// Labels are (birth_scan, position index, 1-based).
LmbDensity prior_birth(std::span<const Eigen::Vector2d> positions, double existence,
                       const Eigen::MatrixXd& covariance, int birth_scan);

/// MAP cardinality estimate (smallest count on ties), then that many tracks of
/// highest existence with the mean of their heaviest component.
std::vector<Estimate> extract_estimates(const LmbDensity& posterior);

}  // namespace gcilsm
