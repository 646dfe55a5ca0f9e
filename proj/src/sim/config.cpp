#include "gcilsm/sim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "gcilsm/errors.hpp"

namespace gcilsm::sim {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ConfigError(fmt::format("{}: {}", path, what));
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

void require_map(const YAML::Node& node, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!node.IsMap()) fail(path.empty() ? "<root>" : path, "expected a mapping");
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      fail(join(path, key), "unknown key");
  }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    fail(path, "invalid value");
  }
}

template <typename T>
void read(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
  if (const auto n = parent[key]) out = scalar<T>(n, join(path, key));
}

std::vector<double> numbers(const YAML::Node& node, const std::string& path, std::size_t expected) {
  if (!node.IsSequence() || node.size() != expected) fail(path, fmt::format("expected a list of {} numbers", expected));
  std::vector<double> out;
  for (std::size_t i = 0; i < node.size(); ++i) out.push_back(scalar<double>(node[i], fmt::format("{}[{}]", path, i)));
  return out;
}

void read_sensor(const YAML::Node& n, const std::string& path, SensorConfig& s) {
  require_map(n, path, {"id", "sigma", "detect_prob", "clutter_rate", "region", "occlusions"});
  read(n, "id", path, s.id);
  read(n, "sigma", path, s.sigma);
  read(n, "detect_prob", path, s.detect_prob);
  read(n, "clutter_rate", path, s.clutter_rate);
  if (const auto r = n["region"]) {
    const auto v = numbers(r, join(path, "region"), 4);
    s.region = {v[0], v[1], v[2], v[3]};
  }
  if (const auto occ = n["occlusions"]) {
    if (!occ.IsSequence()) fail(join(path, "occlusions"), "expected a list");
    for (std::size_t i = 0; i < occ.size(); ++i) {
      const auto p = fmt::format("{}.occlusions[{}]", path, i);
      require_map(occ[i], p, {"target", "from", "to"});
      Occlusion o;
      read(occ[i], "target", p, o.target);
      read(occ[i], "from", p, o.from);
      read(occ[i], "to", p, o.to);
      s.occlusions.push_back(o);
    }
  }
}

const char* birth_mode_name(BirthMode m) { return m == BirthMode::adaptive ? "adaptive" : "prior"; }
const char* feedback_name(Feedback f) { return f == Feedback::none ? "none" : "fused"; }

}  // namespace

bool SensorConfig::occluded(int target, int scan) const {
  return std::any_of(occlusions.begin(), occlusions.end(),
                     [&](const Occlusion& o) { return o.target == target && scan >= o.from && scan < o.to; });
}

BirthParams ScenarioConfig::birth_params() const {
  BirthParams p;
  p.expected_births = birth.expected_births;
  p.max_existence = birth.max_existence;
  p.covariance = birth.covariance_diag.asDiagonal();
  return p;
}

NetworkTopology ScenarioConfig::network() const {
  std::vector<int> ids;
  for (const auto& s : sensors) ids.push_back(s.id);
  return NetworkTopology(ids, topology);
}

ScenarioConfig parse_config(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("<root>: malformed YAML: {}", e.what()));
  }
  require_map(root, "", {"name", "duration", "mc_runs", "seed", "motion", "sensors", "topology", "targets", "birth",
                         "filter", "fusion", "gm", "ospa"});
  ScenarioConfig c;
  c.sensors.clear();
  read(root, "name", "", c.name);
  read(root, "duration", "", c.duration);
  read(root, "mc_runs", "", c.mc_runs);
  read(root, "seed", "", c.seed);

  if (const auto m = root["motion"]) {
    require_map(m, "motion", {"sigma_v", "period", "survival_prob"});
    read(m, "sigma_v", "motion", c.sigma_v);
    read(m, "period", "motion", c.period);
    read(m, "survival_prob", "motion", c.survival_prob);
  }
  if (const auto s = root["sensors"]) {
    if (!s.IsSequence()) fail("sensors", "expected a list");
    for (std::size_t i = 0; i < s.size(); ++i) {
      SensorConfig sc;
      sc.id = static_cast<int>(i);
      read_sensor(s[i], fmt::format("sensors[{}]", i), sc);
      c.sensors.push_back(std::move(sc));
    }
  }
  if (const auto t = root["topology"]) {
    if (!t.IsSequence()) fail("topology", "expected a list of [a, b] edges");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto p = fmt::format("topology[{}]", i);
      if (!t[i].IsSequence() || t[i].size() != 2) fail(p, "expected an edge [a, b]");
      c.topology.emplace_back(scalar<int>(t[i][0], p + "[0]"), scalar<int>(t[i][1], p + "[1]"));
    }
  }
  if (const auto t = root["targets"]) {
    if (!t.IsSequence()) fail("targets", "expected a list");
    for (std::size_t i = 0; i < t.size(); ++i) {
      const auto p = fmt::format("targets[{}]", i);
      require_map(t[i], p, {"birth", "death", "state"});
      TargetConfig tc;
      read(t[i], "birth", p, tc.birth);
      read(t[i], "death", p, tc.death);
      if (!t[i]["state"]) fail(join(p, "state"), "missing");
      const auto v = numbers(t[i]["state"], join(p, "state"), 4);
      tc.state = Eigen::Vector4d(v[0], v[1], v[2], v[3]);
      c.targets.push_back(tc);
    }
  }
  if (const auto b = root["birth"]) {
    require_map(b, "birth", {"mode", "expected_births", "max_existence", "covariance_diag", "prior_existence",
                             "prior_positions"});
    if (const auto mode = b["mode"]) {
      const auto m = scalar<std::string>(mode, "birth.mode");
      if (m == "adaptive") c.birth.mode = BirthMode::adaptive;
      else if (m == "prior") c.birth.mode = BirthMode::prior;
      else fail("birth.mode", "expected adaptive or prior");
    }
    read(b, "expected_births", "birth", c.birth.expected_births);
    read(b, "max_existence", "birth", c.birth.max_existence);
    read(b, "prior_existence", "birth", c.birth.prior_existence);
    if (const auto cd = b["covariance_diag"]) {
      const auto v = numbers(cd, "birth.covariance_diag", 4);
      c.birth.covariance_diag = Eigen::Vector4d(v[0], v[1], v[2], v[3]);
    }
    if (const auto pp = b["prior_positions"]) {
      if (!pp.IsSequence()) fail("birth.prior_positions", "expected a list of [x, y]");
      for (std::size_t i = 0; i < pp.size(); ++i) {
        const auto v = numbers(pp[i], fmt::format("birth.prior_positions[{}]", i), 2);
        c.birth.prior_positions.emplace_back(v[0], v[1]);
      }
    }
  }
  if (const auto f = root["filter"]) {
    require_map(f, "filter", {"k_best", "gate", "existence_threshold"});
    read(f, "k_best", "filter", c.filter.k_best);
    read(f, "gate", "filter", c.filter.gate);
    read(f, "existence_threshold", "filter", c.filter.existence_threshold);
  }
  if (const auto f = root["fusion"]) {
    require_map(f, "fusion", {"alpha", "non_assignment_cost", "feedback"});
    read(f, "alpha", "fusion", c.fusion.alpha);
    read(f, "non_assignment_cost", "fusion", c.fusion.non_assignment_cost);
    if (const auto fb = f["feedback"]) {
      const auto v = scalar<std::string>(fb, "fusion.feedback");
      if (v == "none") c.fusion.feedback = Feedback::none;
      else if (v == "fused") c.fusion.feedback = Feedback::fused;
      else fail("fusion.feedback", "expected none or fused");
    }
  }
  if (const auto g = root["gm"]) {
    require_map(g, "gm", {"truncation", "prune", "merge", "max_components"});
    read(g, "truncation", "gm", c.gm.truncation);
    read(g, "prune", "gm", c.gm.prune);
    read(g, "merge", "gm", c.gm.merge);
    read(g, "max_components", "gm", c.gm.max_components);
  }
  if (const auto o = root["ospa"]) {
    require_map(o, "ospa", {"order", "cutoff"});
    read(o, "order", "ospa", c.ospa.order);
    read(o, "cutoff", "ospa", c.ospa.cutoff);
  }
  validate(c);
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("<file>: cannot open {}", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const ScenarioConfig& c) {
  auto check = [](bool ok, const std::string& path, const char* what) {
    if (!ok) fail(path, what);
  };
  check(c.duration >= 1, "duration", "must be at least 1");
  check(c.mc_runs >= 1, "mc_runs", "must be at least 1");
  check(c.sigma_v >= 0.0, "motion.sigma_v", "must be non-negative");
  check(c.period > 0.0, "motion.period", "must be positive");
  check(c.survival_prob > 0.0 && c.survival_prob <= 1.0, "motion.survival_prob", "must lie in (0, 1]");
  check(!c.sensors.empty(), "sensors", "at least one sensor required");
  std::set<int> ids;
  for (std::size_t i = 0; i < c.sensors.size(); ++i) {
    const auto& s = c.sensors[i];
    const auto p = fmt::format("sensors[{}]", i);
    check(ids.insert(s.id).second, p + ".id", "duplicate sensor id");
    check(s.sigma > 0.0, p + ".sigma", "must be positive");
    check(s.detect_prob > 0.0 && s.detect_prob <= 1.0, p + ".detect_prob", "must lie in (0, 1]");
    check(s.clutter_rate >= 0.0, p + ".clutter_rate", "must be non-negative");
    check(s.region.x_max > s.region.x_min && s.region.y_max > s.region.y_min, p + ".region", "must have positive area");
    for (std::size_t k = 0; k < s.occlusions.size(); ++k) {
      const auto& o = s.occlusions[k];
      const auto op = fmt::format("{}.occlusions[{}]", p, k);
      check(o.target >= 0 && o.target < static_cast<int>(c.targets.size()), op + ".target", "unknown target");
      check(o.to > o.from, op + ".to", "must exceed from");
    }
  }
  std::set<std::pair<int, int>> edges;
  for (std::size_t i = 0; i < c.topology.size(); ++i) {
    const auto [a, b] = c.topology[i];
    const auto p = fmt::format("topology[{}]", i);
    check(ids.contains(a) && ids.contains(b), p, "edge refers to an unknown sensor id");
    check(a != b, p, "self-loop");
    check(edges.insert(std::minmax(a, b)).second, p, "duplicate edge");
  }
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const auto& t = c.targets[i];
    const auto p = fmt::format("targets[{}]", i);
    check(t.birth >= 0 && t.birth < c.duration, p + ".birth", "must lie within the duration");
    check(t.death > t.birth, p + ".death", "must exceed birth");
    check(t.death <= c.duration, p + ".death", "must not exceed the duration");
    check(t.state.allFinite(), p + ".state", "must be finite");
  }
  check(c.birth.expected_births > 0.0, "birth.expected_births", "must be positive");
  check(c.birth.max_existence > 0.0 && c.birth.max_existence <= 1.0, "birth.max_existence", "must lie in (0, 1]");
  check((c.birth.covariance_diag.array() > 0.0).all(), "birth.covariance_diag", "must be positive");
  check(c.birth.prior_existence > 0.0 && c.birth.prior_existence <= 1.0, "birth.prior_existence", "must lie in (0, 1]");
  check(c.birth.mode == BirthMode::adaptive || !c.birth.prior_positions.empty(), "birth.prior_positions",
        "prior birth needs at least one position");
  check(c.filter.k_best >= 1, "filter.k_best", "must be at least 1");
  check(c.filter.gate > 0.0, "filter.gate", "must be positive");
  check(c.filter.existence_threshold >= 0.0 && c.filter.existence_threshold < 1.0, "filter.existence_threshold",
        "must lie in [0, 1)");
  check(c.fusion.alpha > 0.0 && c.fusion.alpha < 1.0, "fusion.alpha", "must lie in (0, 1)");
  check(c.fusion.non_assignment_cost > 0.0, "fusion.non_assignment_cost", "must be positive");
  check(c.gm.truncation >= 0.0, "gm.truncation", "must be non-negative");
  check(c.gm.prune >= 0.0, "gm.prune", "must be non-negative");
  check(c.gm.merge >= 0.0, "gm.merge", "must be non-negative");
  check(c.gm.max_components >= 1, "gm.max_components", "must be at least 1");
  check(c.ospa.order >= 1.0 && std::isfinite(c.ospa.order), "ospa.order", "must be finite and at least 1");
  check(c.ospa.cutoff > 0.0 && std::isfinite(c.ospa.cutoff), "ospa.cutoff", "must be finite and positive");
}

std::vector<std::string> warnings(const ScenarioConfig& c) {
  std::vector<std::string> out;
  if (!c.network().connected()) out.emplace_back("topology: sensor network is not connected");
  for (std::size_t i = 0; i < c.targets.size(); ++i) {
    const auto& x = c.targets[i].state;
    for (const auto& s : c.sensors)
      if (!s.region.contains(x(0), x(2)))
        out.push_back(fmt::format("targets[{}].state: initial position outside the region of sensor {}", i, s.id));
  }
  return out;
}

std::string to_yaml(const ScenarioConfig& c) {
  YAML::Emitter e;
  e.SetDoublePrecision(10);
  e << YAML::BeginMap;
  e << YAML::Key << "name" << YAML::Value << c.name;
  e << YAML::Key << "duration" << YAML::Value << c.duration;
  e << YAML::Key << "mc_runs" << YAML::Value << c.mc_runs;
  e << YAML::Key << "seed" << YAML::Value << c.seed;
  e << YAML::Key << "motion" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "sigma_v" << YAML::Value << c.sigma_v;
  e << YAML::Key << "period" << YAML::Value << c.period;
  e << YAML::Key << "survival_prob" << YAML::Value << c.survival_prob;
  e << YAML::EndMap;
  e << YAML::Key << "sensors" << YAML::Value << YAML::BeginSeq;
  for (const auto& s : c.sensors) {
    e << YAML::BeginMap;
    e << YAML::Key << "id" << YAML::Value << s.id;
    e << YAML::Key << "sigma" << YAML::Value << s.sigma;
    e << YAML::Key << "detect_prob" << YAML::Value << s.detect_prob;
    e << YAML::Key << "clutter_rate" << YAML::Value << s.clutter_rate;
    e << YAML::Key << "region" << YAML::Value << YAML::Flow << YAML::BeginSeq << s.region.x_min << s.region.x_max
      << s.region.y_min << s.region.y_max << YAML::EndSeq;
    if (!s.occlusions.empty()) {
      e << YAML::Key << "occlusions" << YAML::Value << YAML::BeginSeq;
      for (const auto& o : s.occlusions)
        e << YAML::Flow << YAML::BeginMap << YAML::Key << "target" << YAML::Value << o.target << YAML::Key << "from"
          << YAML::Value << o.from << YAML::Key << "to" << YAML::Value << o.to << YAML::EndMap;
      e << YAML::EndSeq;
    }
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "topology" << YAML::Value << YAML::BeginSeq;
  for (const auto& [a, b] : c.topology) e << YAML::Flow << YAML::BeginSeq << a << b << YAML::EndSeq;
  e << YAML::EndSeq;
  e << YAML::Key << "targets" << YAML::Value << YAML::BeginSeq;
  for (const auto& t : c.targets) {
    e << YAML::Flow << YAML::BeginMap;
    e << YAML::Key << "birth" << YAML::Value << t.birth;
    e << YAML::Key << "death" << YAML::Value << t.death;
    e << YAML::Key << "state" << YAML::Value << YAML::Flow << YAML::BeginSeq << t.state(0) << t.state(1) << t.state(2)
      << t.state(3) << YAML::EndSeq;
    e << YAML::EndMap;
  }
  e << YAML::EndSeq;
  e << YAML::Key << "birth" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "mode" << YAML::Value << birth_mode_name(c.birth.mode);
  e << YAML::Key << "expected_births" << YAML::Value << c.birth.expected_births;
  e << YAML::Key << "max_existence" << YAML::Value << c.birth.max_existence;
  e << YAML::Key << "covariance_diag" << YAML::Value << YAML::Flow << YAML::BeginSeq;
  for (int i = 0; i < 4; ++i) e << c.birth.covariance_diag(i);
  e << YAML::EndSeq;
  e << YAML::Key << "prior_existence" << YAML::Value << c.birth.prior_existence;
  e << YAML::Key << "prior_positions" << YAML::Value << YAML::BeginSeq;
  for (const auto& p : c.birth.prior_positions) e << YAML::Flow << YAML::BeginSeq << p.x() << p.y() << YAML::EndSeq;
  e << YAML::EndSeq;
  e << YAML::EndMap;
  e << YAML::Key << "filter" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "k_best" << YAML::Value << c.filter.k_best;
  e << YAML::Key << "gate" << YAML::Value << c.filter.gate;
  e << YAML::Key << "existence_threshold" << YAML::Value << c.filter.existence_threshold;
  e << YAML::EndMap;
  e << YAML::Key << "fusion" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "alpha" << YAML::Value << c.fusion.alpha;
  e << YAML::Key << "non_assignment_cost" << YAML::Value << c.fusion.non_assignment_cost;
  e << YAML::Key << "feedback" << YAML::Value << feedback_name(c.fusion.feedback);
  e << YAML::EndMap;
  e << YAML::Key << "gm" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "truncation" << YAML::Value << c.gm.truncation;
  e << YAML::Key << "prune" << YAML::Value << c.gm.prune;
  e << YAML::Key << "merge" << YAML::Value << c.gm.merge;
  e << YAML::Key << "max_components" << YAML::Value << c.gm.max_components;
  e << YAML::EndMap;
  e << YAML::Key << "ospa" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "order" << YAML::Value << c.ospa.order;
  e << YAML::Key << "cutoff" << YAML::Value << c.ospa.cutoff;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

ScenarioConfig preset(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  auto sensor = [](int id) {
    SensorConfig s;
    s.id = id;
    return s;
  };
  auto target = [](int birth, int death, double px, double vx, double py, double vy) {
    return TargetConfig{birth, death, Eigen::Vector4d(px, vx, py, vy)};
  };

  if (name == "scenario1" || name == "scenario1-prior") {
    c.duration = 60;
    c.sensors = {sensor(0), sensor(1)};
    c.topology = {{0, 1}};
    if (name == "scenario1") {
      c.targets = {target(0, 60, -600.0, 15.0, -400.0, 10.0), target(0, 60, 600.0, -10.0, -500.0, 15.0)};
    } else {
      // The second target appears at scan 10; sensor 1 only sees it from
      // scan 13, so the two local filters start it at different scans.
      c.targets = {target(0, 60, -600.0, 15.0, -400.0, 10.0), target(10, 60, 600.0, -4.0, -500.0, 6.0)};
      c.sensors[1].occlusions.push_back({1, 10, 13});
      c.birth.mode = BirthMode::prior;
      c.birth.prior_positions = {{-600.0, -400.0}, {600.0, -500.0}};
    }
    return c;
  }
  if (name == "scenario2") {
    c.duration = 65;
    c.sensors = {sensor(0), sensor(1), sensor(2)};
    c.topology = {{0, 1}, {1, 2}};
    c.targets = {target(0, 55, -800.0, 12.0, -600.0, 8.0), target(0, 55, 800.0, -10.0, -700.0, 9.0),
                 target(10, 65, -700.0, 10.0, 600.0, -8.0), target(25, 65, 600.0, -12.0, 700.0, -6.0),
                 target(40, 65, 0.0, 3.0, -800.0, 14.0)};
    return c;
  }
  throw ConfigError(fmt::format("preset: unknown scenario '{}'", name));
}

}  // namespace gcilsm::sim
