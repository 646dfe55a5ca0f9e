#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "gcilsm/fusion.hpp"
#include "gcilsm/lmb_filter.hpp"
#include "gcilsm/oracle.hpp"

namespace gcilsm::sim {

enum class BirthMode { adaptive, prior };
enum class Feedback { none, fused };

/// Scans [from, to) during which a sensor cannot detect a target.
struct Occlusion {
  int target = 0;
  int from = 0;
  int to = 0;
};

struct SensorConfig {
  int id = 0;
  double sigma = 1.4;
  double detect_prob = 0.99;
  double clutter_rate = 10.0;
  Region region{};
  std::vector<Occlusion> occlusions;

  [[nodiscard]] SensorModel model() const {
    return SensorModel::position_sensor(sigma, detect_prob, clutter_rate, region);
  }
  [[nodiscard]] bool occluded(int target, int scan) const;
};

/// Target alive on scans [birth, death); `state` is its state at `birth`.
struct TargetConfig {
  int birth = 0;
  int death = 1;
  Eigen::Vector4d state = Eigen::Vector4d::Zero();
};

struct BirthConfig {
  BirthMode mode = BirthMode::adaptive;
  double expected_births = 0.1;
  double max_existence = 0.5;
  Eigen::Vector4d covariance_diag{100.0, 100.0, 100.0, 100.0};
  double prior_existence = 0.03;
  std::vector<Eigen::Vector2d> prior_positions;
};

struct FilterConfig {
  int k_best = 100;
  double gate = 25.0;
  /// Tracks below this existence are removed after each update.
  double existence_threshold = 1e-3;
};

struct FusionConfig {
  double alpha = 0.5;
  /// Same-object pairs of 4-D constant-velocity tracks from independent
  /// sensors have median cost near 1 and a tail past 5; 8 keeps them matched.
  double non_assignment_cost = 8.0;
  Feedback feedback = Feedback::none;
};

struct GmConfig {
  double truncation = 1e-4;
  double prune = 1e-5;
  double merge = 4.0;
  int max_components = 10;
};

struct ScenarioConfig {
  std::string name = "scenario";
  int duration = 60;
  double sigma_v = 5.0;
  double period = 1.0;
  double survival_prob = 0.99;
  std::vector<SensorConfig> sensors;
  std::vector<std::pair<int, int>> topology;
  std::vector<TargetConfig> targets;
  BirthConfig birth;
  FilterConfig filter;
  FusionConfig fusion;
  GmConfig gm;
  OspaParams ospa{};
  int mc_runs = 200;
  std::uint64_t seed = 1;

  [[nodiscard]] MotionModel motion() const {
    return MotionModel::constant_velocity(period, sigma_v, survival_prob);
  }
  [[nodiscard]] ReductionParams reduction() const {
    return {gm.prune, gm.merge, static_cast<std::size_t>(gm.max_components)};
  }
  [[nodiscard]] UpdateParams update_params() const {
    return {filter.k_best, filter.gate, gm.truncation, reduction()};
  }
  [[nodiscard]] BirthParams birth_params() const;
  [[nodiscard]] NetworkTopology network() const;
};

/// Parses the YAML scenario format. Unknown keys and invalid values raise
/// ConfigError naming the offending field path (e.g. "sensors[1].detect_prob").
ScenarioConfig parse_config(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// Throws ConfigError on the first violated constraint.
void validate(const ScenarioConfig& config);

/// Non-fatal findings (disconnected network, target starting outside a
/// sensor region).
std::vector<std::string> warnings(const ScenarioConfig& config);

std::string to_yaml(const ScenarioConfig& config);

/// Built-in scenarios: "scenario1" (two sensors, two targets, adaptive birth),
/// "scenario1-prior" (same geometry, prior birth, late second target seen
/// late by one sensor) and "scenario2" (three sensors in a line, five
/// targets). Throws ConfigError for other names.
ScenarioConfig preset(const std::string& name);

}  // namespace gcilsm::sim
