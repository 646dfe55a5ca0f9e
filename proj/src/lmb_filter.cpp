#include "gcilsm/lmb_filter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "gcilsm/assignment.hpp"

namespace gcilsm {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Per-component innovation terms, shared by every measurement.
struct ComponentInnovation {
  Eigen::VectorXd predicted_z;
  Eigen::LLT<Eigen::MatrixXd> innovation_llt;
  double log_norm = 0.0;  // -0.5 (d log 2pi + log det S)
  Eigen::MatrixXd gain;
  Eigen::MatrixXd updated_cov;
};

struct TrackInnovation {
  std::vector<ComponentInnovation> comps;
};

TrackInnovation innovate(const BernoulliTrack& t, const SensorModel& s) {
  TrackInnovation out;
  const auto& h = s.observation;
  const double d = static_cast<double>(h.rows());
  for (const auto& c : t.density.components) {
    ComponentInnovation ci;
    ci.predicted_z = h * c.mean;
    Eigen::MatrixXd sm = h * c.covariance * h.transpose() + s.noise;
    sm = 0.5 * (sm + sm.transpose()).eval();
    ci.innovation_llt = detail::checked_llt(sm);
    ci.log_norm = -0.5 * (d * std::log(2.0 * std::numbers::pi) + detail::log_det(ci.innovation_llt));
    ci.gain = ci.innovation_llt.solve(h * c.covariance).transpose();
    Eigen::MatrixXd p = c.covariance - ci.gain * h * c.covariance;
    ci.updated_cov = 0.5 * (p + p.transpose());
    out.comps.push_back(std::move(ci));
  }
  return out;
}

struct Association {
  double log_likelihood = kNegInf;  // log sum_c w_c N(z; Hm_c, S_c)
  bool gated_in = false;
};

Association associate(const BernoulliTrack& t, const TrackInnovation& ti, const Eigen::VectorXd& z,
                      double gate) {
  Association a;
  std::vector<double> logs;
  logs.reserve(ti.comps.size());
  double best_maha = kInf;
  for (std::size_t c = 0; c < ti.comps.size(); ++c) {
    const auto& ci = ti.comps[c];
    const double maha = ci.innovation_llt.matrixL().solve(z - ci.predicted_z).squaredNorm();
    best_maha = std::min(best_maha, maha);
    const double w = t.density.components[c].weight;
    logs.push_back(w > 0 ? std::log(w) + ci.log_norm - 0.5 * maha : kNegInf);
  }
  a.gated_in = best_maha <= gate;
  a.log_likelihood = log_sum_exp<double>(logs);
  return a;
}

GaussianMixtured kalman_posterior(const BernoulliTrack& t, const TrackInnovation& ti,
                                  const Eigen::VectorXd& z) {
  GaussianMixtured out;
  std::vector<double> logs;
  for (std::size_t c = 0; c < ti.comps.size(); ++c) {
    const auto& ci = ti.comps[c];
    const auto& comp = t.density.components[c];
    const Eigen::VectorXd innov = z - ci.predicted_z;
    const double maha = ci.innovation_llt.matrixL().solve(innov).squaredNorm();
    logs.push_back(comp.weight > 0 ? std::log(comp.weight) + ci.log_norm - 0.5 * maha : kNegInf);
    out.components.push_back({0.0, comp.mean + ci.gain * innov, ci.updated_cov});
  }
  const double lse = log_sum_exp<double>(logs);
  for (std::size_t c = 0; c < logs.size(); ++c) out.components[c].weight = std::exp(logs[c] - lse);
  return out;
}

struct DisjointSets {
  std::vector<std::size_t> parent;
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

MotionModel MotionModel::constant_velocity(double period, double sigma_v, double survival_prob) {
  if (!(survival_prob > 0.0 && survival_prob <= 1.0)) throw DomainError("survival probability outside (0, 1]");
  Eigen::Matrix2d f_axis;
  f_axis << 1.0, period, 0.0, 1.0;
  Eigen::Matrix2d q_axis;
  const double d2 = period * period;
  q_axis << d2 * d2 / 4.0, d2 * period / 2.0, d2 * period / 2.0, d2;
  q_axis *= sigma_v * sigma_v;

  MotionModel m;
  m.transition = Eigen::MatrixXd::Zero(4, 4);
  m.process_noise = Eigen::MatrixXd::Zero(4, 4);
  m.transition.block<2, 2>(0, 0) = f_axis;
  m.transition.block<2, 2>(2, 2) = f_axis;
  m.process_noise.block<2, 2>(0, 0) = q_axis;
  m.process_noise.block<2, 2>(2, 2) = q_axis;
  m.survival_prob = survival_prob;
  m.period = period;
  return m;
}

SensorModel SensorModel::position_sensor(double sigma, double detect_prob, double clutter_rate, Region region) {
  SensorModel s;
  s.observation = Eigen::MatrixXd::Zero(2, 4);
  s.observation(0, 0) = 1.0;
  s.observation(1, 2) = 1.0;
  s.noise = Eigen::MatrixXd::Identity(2, 2) * sigma * sigma;
  s.detect_prob = detect_prob;
  s.clutter_rate = clutter_rate;
  s.region = region;
  return s;
}

double SensorModel::clutter_density() const {
  return std::max(clutter_rate / region.area(), std::numeric_limits<double>::min());
}

LmbDensity lmb_predict(const LmbDensity& prior, const MotionModel& motion, const LmbDensity& births) {
  std::set<Label> used;
  LmbDensity out;
  out.tracks.reserve(prior.size() + births.size());
  const auto& f = motion.transition;
  for (const auto& t : prior.tracks) {
    used.insert(t.label);
    BernoulliTrack p{t.label, t.existence * motion.survival_prob, t.density};
    for (auto& c : p.density.components) {
      c.mean = f * c.mean;
      Eigen::MatrixXd cov = f * c.covariance * f.transpose() + motion.process_noise;
      c.covariance = 0.5 * (cov + cov.transpose());
    }
    out.tracks.push_back(std::move(p));
  }
  for (const auto& b : births.tracks) {
    if (!used.insert(b.label).second) throw DomainError("duplicate label");
    out.tracks.push_back(b);
  }
  return out;
}

UpdateResult lmb_update(const LmbDensity& predicted, std::span<const Measurement> scan,
                        const SensorModel& sensor, const UpdateParams& params) {
  if (params.k_best < 1) throw DomainError("k_best must be at least 1");
  const std::size_t n = predicted.size();
  const std::size_t m = scan.size();
  const double pd = sensor.detect_prob;
  const double log_kappa = std::log(sensor.clutter_density());

  UpdateResult result;
  result.assoc_prob.assign(m, 0.0);
  result.posterior.tracks.reserve(n);

  // Detection log-likelihood ratios; -inf marks "cannot be associated".
  std::vector<TrackInnovation> innov(n);
  Eigen::MatrixXd log_ratio = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n),
                                                        static_cast<Eigen::Index>(m), kNegInf);
  DisjointSets sets(n + m);
  std::vector<char> track_linked(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& t = predicted.tracks[i];
    if (!(t.existence > 0.0) || !(pd > 0.0) || t.density.empty()) continue;
    innov[i] = innovate(t, sensor);
    for (std::size_t j = 0; j < m; ++j) {
      const Association a = associate(t, innov[i], scan[j].z, params.gate);
      if (!a.gated_in || !std::isfinite(a.log_likelihood)) continue;
      log_ratio(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::log(t.existence) + std::log(pd) + a.log_likelihood - log_kappa;
      sets.unite(i, n + j);
      track_linked[i] = 1;
    }
  }

  // Missed-detection existence: r (1 - pd) / (1 - r pd).
  auto missed_existence = [pd](double r) {
    const double denom = 1.0 - r * pd;
    return denom > 0.0 ? r * (1.0 - pd) / denom : 0.0;
  };

  std::vector<BernoulliTrack> updated(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (track_linked[i]) continue;
    const auto& t = predicted.tracks[i];
    updated[i] = BernoulliTrack{t.label, missed_existence(t.existence), t.density};
  }

  // Clusters of linked tracks with the measurements in their gates.
  std::vector<std::size_t> roots;
  for (std::size_t i = 0; i < n; ++i)
    if (track_linked[i]) roots.push_back(sets.find(i));
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());

  for (std::size_t root : roots) {
    std::vector<std::size_t> rows;
    std::vector<std::size_t> cols;
    for (std::size_t i = 0; i < n; ++i)
      if (track_linked[i] && sets.find(i) == root) rows.push_back(i);
    for (std::size_t j = 0; j < m; ++j)
      if (sets.find(n + j) == root) cols.push_back(j);

    const auto nr = static_cast<Eigen::Index>(rows.size());
    const auto nc = static_cast<Eigen::Index>(cols.size());
    // Columns: the cluster's measurements, then one "not detected" column per
    // track (absent or missed, weight 1 - r pd).
    Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(nr, nc + nr, kInf);
    for (Eigen::Index a = 0; a < nr; ++a) {
      const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < nc; ++b) {
        const double lr = log_ratio(i, static_cast<Eigen::Index>(cols[static_cast<std::size_t>(b)]));
        if (std::isfinite(lr)) cost(a, b) = -lr;
      }
      const double undetected = 1.0 - predicted.tracks[static_cast<std::size_t>(i)].existence * pd;
      if (undetected > 0.0) cost(a, nc + a) = -std::log(undetected);
    }

    const auto hyps = kbest_assignments(cost, params.k_best);
    if (hyps.empty()) throw NumericError("no feasible association hypothesis");

    std::vector<double> w(hyps.size());
    const double best = hyps.front().cost;
    for (std::size_t h = 0; h < hyps.size(); ++h) w[h] = std::exp(best - hyps[h].cost);
    double total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;
    for (std::size_t h = 1; h < w.size(); ++h)
      if (w[h] < params.hypothesis_truncation) w[h] = 0.0;
    total = std::accumulate(w.begin(), w.end(), 0.0);
    for (double& x : w) x /= total;

    // beta(a, b): weight of track a taking measurement b; last column = undetected.
    Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(nr, nc + 1);
    for (std::size_t h = 0; h < hyps.size(); ++h) {
      if (w[h] == 0.0) continue;
      for (Eigen::Index a = 0; a < nr; ++a) {
        const int col = hyps[h].row_to_col[static_cast<std::size_t>(a)];
        beta(a, col < nc ? col : nc) += w[h];
      }
    }

    for (Eigen::Index a = 0; a < nr; ++a) {
      const std::size_t i = rows[static_cast<std::size_t>(a)];
      const auto& t = predicted.tracks[i];
      const double miss_mass = beta(a, nc) * missed_existence(t.existence);
      double r = miss_mass;
      GaussianMixtured mix;
      if (miss_mass > 0.0)
        for (const auto& c : t.density.components) mix.components.push_back({miss_mass * c.weight, c.mean, c.covariance});
      for (Eigen::Index b = 0; b < nc; ++b) {
        const double bw = beta(a, b);
        if (bw <= 0.0) continue;
        const std::size_t j = cols[static_cast<std::size_t>(b)];
        result.assoc_prob[j] += bw;
        r += bw;
        for (auto& c : kalman_posterior(t, innov[i], scan[j].z).components) {
          c.weight *= bw;
          mix.components.push_back(std::move(c));
        }
      }
      if (r > 0.0 && !mix.empty()) {
        updated[i] = BernoulliTrack{t.label, std::min(r, 1.0), gm_reduce(normalized(std::move(mix)), params.reduction)};
      } else {
        updated[i] = BernoulliTrack{t.label, 0.0, t.density};
      }
    }
  }

  for (double& p : result.assoc_prob) p = std::clamp(p, 0.0, 1.0);
  result.posterior.tracks = std::move(updated);
  return result;
}

LmbDensity adaptive_birth(std::span<const Measurement> scan, std::span<const double> assoc_prob,
                          const BirthParams& params, const SensorModel& sensor, int birth_scan) {
  if (assoc_prob.size() != scan.size()) throw DomainError("one association probability per measurement required");
  if (!(params.max_existence > 0.0 && params.max_existence <= 1.0)) throw DomainError("max birth existence outside (0, 1]");
  if (!(params.expected_births > 0.0)) throw DomainError("expected births must be positive");

  double unassigned = 0.0;
  for (double p : assoc_prob) unassigned += 1.0 - p;
  LmbDensity out;
  if (!(unassigned > 0.0)) return out;

  const Eigen::MatrixXd h_pinv = sensor.observation.completeOrthogonalDecomposition().pseudoInverse();
  for (std::size_t j = 0; j < scan.size(); ++j) {
    const double r = std::clamp(std::min(params.max_existence, (1.0 - assoc_prob[j]) / unassigned * params.expected_births), 0.0, 1.0);
    if (!(r > 0.0)) continue;
    out.tracks.push_back(BernoulliTrack{Label{birth_scan, static_cast<int>(j) + 1}, r,
                                        GaussianMixtured::single(h_pinv * scan[j].z, params.covariance)});
  }
  return out;
}

LmbDensity prior_birth(std::span<const Eigen::Vector2d> positions, double existence,
                       const Eigen::MatrixXd& covariance, int birth_scan) {
  LmbDensity out;
  for (std::size_t i = 0; i < positions.size(); ++i) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(4);
    x(0) = positions[i].x();
    x(2) = positions[i].y();
    out.tracks.push_back(BernoulliTrack{Label{birth_scan, static_cast<int>(i) + 1}, existence,
                                        GaussianMixtured::single(std::move(x), covariance)});
  }
  return out;
}

std::vector<Estimate> extract_estimates(const LmbDensity& posterior) {
  const auto pmf = cardinality_pmf(posterior);
  std::size_t n_map = 0;
  for (std::size_t k = 1; k < pmf.size(); ++k)
    if (pmf[k] > pmf[n_map]) n_map = k;

  std::vector<const BernoulliTrack*> order;
  for (const auto& t : posterior.tracks) order.push_back(&t);
  std::stable_sort(order.begin(), order.end(), [](const auto* a, const auto* b) {
    if (a->existence != b->existence) return a->existence > b->existence;
    return a->label < b->label;
  });

  std::vector<Estimate> out;
  for (std::size_t k = 0; k < n_map && k < order.size(); ++k) {
    const auto& comps = order[k]->density.components;
    if (comps.empty()) continue;
    const auto best = std::max_element(comps.begin(), comps.end(),
                                       [](const auto& a, const auto& b) { return a.weight < b.weight; });
    out.push_back({order[k]->label, best->mean});
  }
  return out;
}

}  // namespace gcilsm
