#include "gcilsm/sim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "gcilsm/errors.hpp"
#include "gcilsm/fusion.hpp"
#include "gcilsm/oracle.hpp"
#include "gcilsm/version.hpp"

namespace gcilsm::sim {

namespace {

struct Models {
  MotionModel motion;
  std::vector<SensorModel> sensors;
  UpdateParams update;
  BirthParams birth;
  NetworkTopology network;
};

struct LocalFilter {
  LmbDensity posterior;
  LmbDensity next_births;
};

void step(LocalFilter& f, std::span<const Measurement> scan, int k, const ScenarioConfig& config, const Models& m,
          std::size_t sensor) {
  const LmbDensity births = config.birth.mode == BirthMode::prior
                                ? prior_birth(config.birth.prior_positions, config.birth.prior_existence,
                                              m.birth.covariance, k)
                                : f.next_births;
  auto updated = lmb_update(lmb_predict(f.posterior, m.motion, births), scan, m.sensors[sensor], m.update);
  std::erase_if(updated.posterior.tracks, [&](const BernoulliTrack& t) {
    return t.existence < config.filter.existence_threshold;
  });
  f.posterior = std::move(updated.posterior);
  if (config.birth.mode == BirthMode::adaptive)
    f.next_births = adaptive_birth(scan, updated.assoc_prob, m.birth, m.sensors[sensor], k + 1);
}

// Fused tracks carry the receiving node's labels; its unmatched tracks are kept.
LmbDensity with_leftovers(LmbDensity fused, const LmbDensity& own) {
  for (const auto& t : own.tracks)
    if (!fused.find(t.label)) fused.tracks.push_back(t);
  return fused;
}

std::vector<Eigen::Vector2d> positions(const LmbDensity& d) {
  std::vector<Eigen::Vector2d> out;
  for (const auto& e : extract_estimates(d)) out.emplace_back(e.state(0), e.state(2));
  return out;
}

// ospa[table][scan], card[table][scan] for one run.
struct RunTrace {
  std::vector<std::vector<double>> ospa;
  std::vector<std::vector<double>> card;
};

struct Layout {
  std::vector<std::string> names;
  std::vector<int> local;  // table index per sensor, -1 if not reported
  int lsm = -1;
  int naive = -1;
};

Layout layout_for(const ScenarioConfig& config, const Methods& methods) {
  Layout l;
  for (const auto& s : config.sensors) {
    l.local.push_back(methods.local ? static_cast<int>(l.names.size()) : -1);
    if (methods.local) l.names.push_back(fmt::format("local_s{}", s.id));
  }
  if (methods.lsm) {
    l.lsm = static_cast<int>(l.names.size());
    l.names.emplace_back("lsm");
  }
  if (methods.naive) {
    l.naive = static_cast<int>(l.names.size());
    l.names.emplace_back("naive");
  }
  return l;
}

RunTrace run_once(const ScenarioConfig& config, const Models& m, const Layout& layout,
                  const std::vector<TruthTrajectory>& truth, int run) {
  const std::size_t n_sensors = config.sensors.size();
  const auto n_scans = static_cast<std::size_t>(config.duration);
  RunTrace trace;
  trace.ospa.assign(layout.names.size(), std::vector<double>(n_scans, 0.0));
  trace.card.assign(layout.names.size(), std::vector<double>(n_scans, 0.0));

  std::vector<std::mt19937_64> streams;
  for (const auto& s : config.sensors) streams.push_back(make_stream(config.seed, run, s.id));

  const bool feedback = config.fusion.feedback == Feedback::fused;
  std::vector<LocalFilter> local(n_sensors);
  std::vector<LocalFilter> lsm_chain(feedback && layout.lsm >= 0 ? n_sensors : 0);
  std::vector<LocalFilter> naive_chain(feedback && layout.naive >= 0 ? n_sensors : 0);

  FusionParams lsm_params{config.fusion.alpha, config.fusion.non_assignment_cost, m.update.reduction, true};
  FusionParams naive_params = lsm_params;
  naive_params.match_label_spaces = false;

  auto record = [&](int table, int k, const std::vector<LmbDensity>& posteriors,
                    std::span<const Eigen::Vector2d> truth_k) {
    double o = 0.0;
    double c = 0.0;
    for (const auto& p : posteriors) {
      const auto est = positions(p);
      o += ospa(est, truth_k, config.ospa);
      c += static_cast<double>(est.size());
    }
    const auto n = static_cast<double>(posteriors.size());
    trace.ospa[static_cast<std::size_t>(table)][static_cast<std::size_t>(k)] = o / n;
    trace.card[static_cast<std::size_t>(table)][static_cast<std::size_t>(k)] = c / n;
  };

  auto fused_chain = [&](std::vector<LocalFilter>& chain, const std::vector<std::vector<Measurement>>& scans, int k,
                         const FusionParams& params) {
    std::vector<LmbDensity> post;
    for (std::size_t s = 0; s < n_sensors; ++s) {
      step(chain[s], scans[s], k, config, m, s);
      post.push_back(chain[s].posterior);
    }
    auto fused = fuse_network(post, m.network, params);
    for (std::size_t s = 0; s < n_sensors; ++s) chain[s].posterior = with_leftovers(fused[s], post[s]);
    return fused;
  };

  for (int k = 0; k < config.duration; ++k) {
    std::vector<Eigen::Vector2d> truth_k;
    for (const auto& t : truth)
      if (t.alive(k)) truth_k.emplace_back(t.at(k)(0), t.at(k)(2));

    std::vector<std::vector<Measurement>> scans(n_sensors);
    for (std::size_t s = 0; s < n_sensors; ++s) {
      std::vector<Eigen::Vector4d> visible;
      for (const auto& t : truth)
        if (t.alive(k) && !config.sensors[s].occluded(t.target, k)) visible.push_back(t.at(k));
      scans[s] = simulate_scan(visible, m.sensors[s], streams[s], k, config.sensors[s].id);
    }

    const bool need_local = !feedback || std::any_of(layout.local.begin(), layout.local.end(), [](int i) {
      return i >= 0;
    });
    std::vector<LmbDensity> local_post;
    if (need_local) {
      for (std::size_t s = 0; s < n_sensors; ++s) {
        step(local[s], scans[s], k, config, m, s);
        local_post.push_back(local[s].posterior);
        if (layout.local[s] >= 0) record(layout.local[s], k, {local_post.back()}, truth_k);
      }
    }
    if (layout.lsm >= 0)
      record(layout.lsm, k,
             feedback ? fused_chain(lsm_chain, scans, k, lsm_params) : fuse_network(local_post, m.network, lsm_params),
             truth_k);
    if (layout.naive >= 0)
      record(layout.naive, k,
             feedback ? fused_chain(naive_chain, scans, k, naive_params)
                      : fuse_network(local_post, m.network, naive_params),
             truth_k);
  }
  return trace;
}

}  // namespace

std::vector<TruthTrajectory> generate_truth(const ScenarioConfig& config) {
  const MotionModel motion = config.motion();
  std::vector<TruthTrajectory> out;
  for (std::size_t i = 0; i < config.targets.size(); ++i) {
    const auto& t = config.targets[i];
    TruthTrajectory traj{static_cast<int>(i), t.birth, {}};
    Eigen::Vector4d x = t.state;
    for (int k = t.birth; k < t.death; ++k) {
      traj.states.push_back(x);
      x = motion.transition * x;
    }
    out.push_back(std::move(traj));
  }
  return out;
}

std::vector<Measurement> simulate_scan(std::span<const Eigen::Vector4d> truth, const SensorModel& sensor,
                                       std::mt19937_64& rng, int scan, int sensor_id) {
  std::vector<Measurement> out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::MatrixXd noise_chol = sensor.noise.llt().matrixL();
  for (const auto& x : truth) {
    if (!(unit(rng) < sensor.detect_prob)) continue;
    Eigen::VectorXd e(sensor.noise.rows());
    for (Eigen::Index i = 0; i < e.size(); ++i) e(i) = normal(rng);
    out.push_back({sensor.observation * x + noise_chol * e, scan, sensor_id});
  }
  if (sensor.clutter_rate > 0.0) {
    std::poisson_distribution<int> count(sensor.clutter_rate);
    const int n = count(rng);
    const Region& r = sensor.region;
    std::uniform_real_distribution<double> ux(r.x_min, r.x_max);
    std::uniform_real_distribution<double> uy(r.y_min, r.y_max);
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd z(2);
      z(0) = ux(rng);
      z(1) = uy(rng);
      out.push_back({std::move(z), scan, sensor_id});
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

std::mt19937_64 make_stream(std::uint64_t seed, int run, int sensor_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(run), static_cast<std::uint32_t>(sensor_id), 0x5e05u};
  return std::mt19937_64(seq);
}

Methods parse_methods(const std::string& name) {
  if (name == "all") return {true, true, true};
  if (name == "lsm") return {false, true, false};
  if (name == "naive") return {false, false, true};
  if (name == "local") return {true, false, false};
  throw ConfigError(fmt::format("method: expected lsm, naive, local or all, got '{}'", name));
}

const ResultTable& ExperimentResult::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  throw DomainError(fmt::format("no result table '{}'", name));
}

ExperimentResult run_experiment(const ScenarioConfig& config, const Methods& methods, unsigned threads) {
  validate(config);
  std::vector<SensorModel> sensors;
  for (const auto& s : config.sensors) sensors.push_back(s.model());
  const Models models{config.motion(), std::move(sensors), config.update_params(), config.birth_params(),
                      config.network()};
  const Layout layout = layout_for(config, methods);
  const auto truth = generate_truth(config);

  const auto runs = static_cast<std::size_t>(config.mc_runs);
  std::vector<RunTrace> traces(runs);
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, runs));

  std::mutex mu;
  std::exception_ptr error;
  std::size_t next = 0;
  auto worker = [&] {
    for (;;) {
      std::size_t r;
      {
        std::lock_guard lock(mu);
        if (error || next >= runs) return;
        r = next++;
      }
      try {
        traces[r] = run_once(config, models, layout, truth, static_cast<int>(r));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);

  ExperimentResult result;
  const auto n = static_cast<double>(runs);
  for (std::size_t t = 0; t < layout.names.size(); ++t) {
    ResultTable table{layout.names[t], {}};
    for (int k = 0; k < config.duration; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      double sum = 0.0;
      double card = 0.0;
      for (const auto& tr : traces) {
        sum += tr.ospa[t][kk];
        card += tr.card[t][kk];
      }
      const double mean = sum / n;
      double var = 0.0;
      for (const auto& tr : traces) var += (tr.ospa[t][kk] - mean) * (tr.ospa[t][kk] - mean);
      ScanStats row;
      row.scan = k;
      row.ospa_mean = mean;
      row.ospa_std = runs > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
      row.card_mean = card / n;
      row.card_truth = static_cast<int>(std::count_if(truth.begin(), truth.end(), [&](const auto& x) {
        return x.alive(k);
      }));
      table.rows.push_back(row);
    }
    result.tables.push_back(std::move(table));
  }
  return result;
}

std::string to_csv(const ResultTable& table) {
  std::string out = "scan,ospa_mean,ospa_std,card_mean,card_truth\n";
  for (const auto& r : table.rows)
    out += fmt::format("{},{:.10g},{:.10g},{:.10g},{}\n", r.scan, r.ospa_mean, r.ospa_std, r.card_mean, r.card_truth);
  return out;
}

void write_results(const ExperimentResult& result, const ScenarioConfig& config, const Methods& methods,
                   const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const std::string& name, const std::string& text) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", (dir / name).string()));
    out << text;
  };
  nlohmann::ordered_json manifest;
  manifest["tool"] = "gcilsm";
  manifest["version"] = kVersion;
  manifest["eigen"] = fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION, EIGEN_MINOR_VERSION);
  manifest["seed"] = config.seed;
  manifest["mc_runs"] = config.mc_runs;
  nlohmann::ordered_json m;
  m["local"] = methods.local;
  m["lsm"] = methods.lsm;
  m["naive"] = methods.naive;
  manifest["methods"] = m;
  manifest["outputs"] = nlohmann::json::array();
  for (const auto& t : result.tables) {
    write(t.name + ".csv", to_csv(t));
    manifest["outputs"].push_back(t.name + ".csv");
  }
  manifest["config"] = to_yaml(config);
  write("manifest.json", manifest.dump(2) + "\n");
}

}  // namespace gcilsm::sim
