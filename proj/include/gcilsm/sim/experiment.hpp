#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "gcilsm/lmb_filter.hpp"
#include "gcilsm/sim/config.hpp"

namespace gcilsm::sim {

/// Noiseless constant-velocity path; states[k] is the state at scan birth + k.
struct TruthTrajectory {
  int target = 0;
  int birth = 0;
  std::vector<Eigen::Vector4d> states;

  [[nodiscard]] int death() const { return birth + static_cast<int>(states.size()); }
  [[nodiscard]] bool alive(int scan) const { return scan >= birth && scan < death(); }
  [[nodiscard]] const Eigen::Vector4d& at(int scan) const { return states[static_cast<std::size_t>(scan - birth)]; }
};

std::vector<TruthTrajectory> generate_truth(const ScenarioConfig& config);

/// Independent detections with probability P_D, Poisson clutter uniform on the
/// sensor region, returned in random order.
std::vector<Measurement> simulate_scan(std::span<const Eigen::Vector4d> truth, const SensorModel& sensor,
                                       std::mt19937_64& rng, int scan, int sensor_id);

/// Generator for one (seed, run, sensor) stream. Streams never share state.
std::mt19937_64 make_stream(std::uint64_t seed, int run, int sensor_id);

struct Methods {
  bool local = true;
  bool lsm = true;
  bool naive = true;
};

/// Parses "lsm", "naive", "local" or "all".
Methods parse_methods(const std::string& name);

struct ScanStats {
  int scan = 0;
  double ospa_mean = 0.0;
  double ospa_std = 0.0;
  double card_mean = 0.0;
  int card_truth = 0;
};

/// Per-scan Monte-Carlo statistics for one method. Fused tables average each
/// run over the network nodes before the Monte-Carlo statistics are taken.
struct ResultTable {
  std::string name;
  std::vector<ScanStats> rows;
};

struct ExperimentResult {
  std::vector<ResultTable> tables;

  [[nodiscard]] const ResultTable& table(const std::string& name) const;
};

/// Runs config.mc_runs independent runs. `threads` = 0 picks the hardware
/// concurrency. The result does not depend on the thread count.
ExperimentResult run_experiment(const ScenarioConfig& config, const Methods& methods = {}, unsigned threads = 0);

std::string to_csv(const ResultTable& table);

/// Writes <table>.csv per table and manifest.json into `dir` (created if
/// missing).
void write_results(const ExperimentResult& result, const ScenarioConfig& config, const Methods& methods,
                   const std::filesystem::path& dir);

}  // namespace gcilsm::sim
