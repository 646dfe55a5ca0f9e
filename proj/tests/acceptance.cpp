// End-to-end acceptance run. One line per criterion; exit status is the
// number of failed criteria.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/core.h>
#include <fmt/ranges.h>

#include "gcilsm/assignment.hpp"
#include "gcilsm/fusion.hpp"
#include "gcilsm/matching.hpp"
#include "gcilsm/oracle.hpp"
#include "gcilsm/sim/config.hpp"
#include "gcilsm/sim/experiment.hpp"
#include "support/generators.hpp"

namespace {

using namespace gcilsm;
using namespace gcilsm::testing;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Tracks the worst deviation of a family of checks against its tolerance.
struct Worst {
  double tol;
  double value = 0.0;

  void see(double err) { value = std::max(value, std::isnan(err) ? kInf : err); }
  [[nodiscard]] bool ok() const { return value <= tol; }
  [[nodiscard]] std::string str(const char* what) const { return fmt::format("{} {:.2e} (tol {:.0e})", what, value, tol); }
};

Outcome check_marginals() {
  Rng rng(1001);
  Worst r{1e-10};
  Worst moments{1e-9};
  int labels = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = random_mdglmb(rng, uniform_int(rng, 1, 8), 2, 3);
    for (const auto& l : d.label_space) {
      ++labels;
      const auto ref = brute_marginal(d, l);
      const auto fast = set_marginal(d, l);
      r.see(std::abs(fast.existence - ref.existence));
      if (ref.existence == 0.0) continue;
      const auto ref_gm = normalized(ref.density);
      moments.see((mixture_mean(fast.density) - mixture_mean(ref_gm)).cwiseAbs().maxCoeff());
      moments.see((mixture_covariance(fast.density) - mixture_covariance(ref_gm)).cwiseAbs().maxCoeff());
    }
  }
  return {r.ok() && moments.ok(), fmt::format("200 densities, {} labels; {}; {}", labels, r.str("r"), moments.str("moments"))};
}

CostMatrix random_cost_matrix(Rng& rng, int n1, int n2, double gamma) {
  CostMatrix c;
  c.rows = label_range(n1, 0);
  c.cols = label_range(n2, 1);
  c.entries.resize(n1, n2);
  for (Eigen::Index i = 0; i < c.entries.size(); ++i)
    c.entries(i) = uniform(rng, 0, 1) < 0.1 ? kInf : uniform(rng, 0.0, 10.0);
  c.non_assignment_cost = gamma;
  return c;
}

Outcome check_assignment() {
  Rng rng(1002);
  int first_mismatch = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto c = random_cost_matrix(rng, uniform_int(rng, 0, 6), uniform_int(rng, 0, 6), uniform(rng, 0.5, 6.0));
    const auto fast = murty_kbest(c, 1);
    const auto ref = brute_assignment(c);
    if (fast.size() != 1 || fast[0].row_to_col != ref.row_to_col || std::abs(fast[0].cost - ref.cost) > 1e-9)
      ++first_mismatch;
  }
  int list_mismatch = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const auto c = random_cost_matrix(rng, uniform_int(rng, 1, 5), uniform_int(rng, 1, 5), uniform(rng, 0.5, 6.0));
    const int k = uniform_int(rng, 1, 10);
    const auto fast = murty_kbest(c, k);
    const auto ref = brute_ranked_assignments(c);
    bool same = fast.size() == std::min<std::size_t>(static_cast<std::size_t>(k), ref.size());
    for (std::size_t i = 0; same && i < fast.size(); ++i)
      same = fast[i].row_to_col == ref[i].row_to_col && std::abs(fast[i].cost - ref[i].cost) <= 1e-9;
    if (!same) ++list_mismatch;
  }
  return {first_mismatch == 0 && list_mismatch == 0,
          fmt::format("first solution {}/1000 mismatches; K-best lists {}/300 mismatches", first_mismatch, list_mismatch)};
}

Outcome check_divergence() {
  Rng rng(1003);
  Worst quad{1e-6};
  // Nested 2-D quadrature is slow; one pair in ten is planar.
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = trial % 10 == 0 ? 2 : 1;
    const auto a = single_gaussian_track({0, 1}, uniform(rng, 0, 1), random_vector(rng, dim, 3), random_spd(rng, dim));
    const auto b = single_gaussian_track({0, 2}, uniform(rng, 0, 1), random_vector(rng, dim, 3), random_spd(rng, dim));
    const double alpha = uniform(rng, 0.1, 0.9);
    const double beta = 1.0 - alpha;
    const double k = quad_eta(a.density, b.density, alpha, beta);
    const double affinity = std::pow(1 - a.existence, alpha) * std::pow(1 - b.existence, beta) +
                            std::pow(a.existence, alpha) * std::pow(b.existence, beta) * k;
    quad.see(std::abs(renyi_cost(a, b, alpha) - std::max(0.0, -std::log(affinity) / beta)));
  }

  const auto u0 = single_gaussian_track({0, 1}, 1.0, vec1(0.0), mat1(1.0));
  const auto u2 = single_gaussian_track({0, 2}, 1.0, vec1(2.0), mat1(1.0));
  Worst worked{1e-6};
  worked.see(std::abs(renyi_cost(u0, u2, 0.5) - 1.0));

  Worst symmetry{1e-9};
  Worst self{1e-9};
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = BernoulliTrack{{0, 1}, uniform(rng, 0, 1), random_mixture(rng, 2, uniform_int(rng, 1, 3))};
    const auto b = BernoulliTrack{{0, 2}, uniform(rng, 0, 1), random_mixture(rng, 2, uniform_int(rng, 1, 3))};
    symmetry.see(std::abs(renyi_cost(a, b, 0.5) - renyi_cost(b, a, 0.5)));
    self.see(std::abs(renyi_cost(a, a, uniform(rng, 0.05, 0.95))));
  }
  return {quad.ok() && worked.ok() && symmetry.ok() && self.ok(),
          fmt::format("{}; {}; {}; {}", quad.str("quadrature"), worked.str("C=1 case"), symmetry.str("symmetry"),
                      self.str("C(t,t)"))};
}

// Mass of N(m, P)^omega computed directly.
double rho(const Eigen::MatrixXd& cov, double omega) {
  const auto d = static_cast<double>(cov.rows());
  return std::pow(omega, -d / 2) * std::pow(2 * std::numbers::pi, d * (1 - omega) / 2) *
         std::pow(cov.determinant(), (1 - omega) / 2);
}

Outcome check_exponentiation() {
  Rng rng(1004);
  Worst single{1e-9};
  for (int trial = 0; trial < 200; ++trial) {
    const auto dim = uniform_int(rng, 1, 4);
    const auto cov = random_spd(rng, dim, uniform(rng, 0.2, 5.0));
    const double omega = uniform(rng, 0.05, 1.0);
    const auto gm = GaussianMixtured::single(random_vector(rng, dim, 10), cov);
    const double mass = gm_power(gm, omega).mass();
    single.see(std::abs(mass - rho(cov, omega)) / std::max(1.0, rho(cov, omega)));
    if (dim == 1) single.see(std::abs(mass - quad_power_mass(gm, omega)) / std::max(1.0, mass));
  }

  // Components spaced at least 6 standard deviations apart along x. The
  // bound covers exponents from 1/2 up; smaller exponents widen the powered
  // components enough that the neglected overlap grows past it, which is
  // reported but not judged.
  Worst multi{0.02};
  Worst small_omega{kInf};
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index dim = trial % 10 == 0 ? 2 : 1;
    const int n = uniform_int(rng, 2, 3);
    GaussianMixtured gm;
    double x = 0.0;
    double prev_sigma = 0.0;
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double sigma = uniform(rng, 0.5, 2.0);
      if (i > 0) x += 6.0 * std::max(prev_sigma, sigma) + uniform(rng, 0.0, 3.0);
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
      mean(0) = x;
      Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(dim, dim) * sigma * sigma;
      const double w = uniform(rng, 0.2, 1.0);
      total += w;
      gm.components.push_back({w, mean, cov});
      prev_sigma = sigma;
    }
    for (auto& c : gm.components) c.weight /= total;
    const double omega = uniform(rng, 0.5, 1.0);
    const double quad = quad_power_mass(gm, omega);
    multi.see(std::abs(gm_power(gm, omega).mass() - quad) / quad);
    const double quad_third = quad_power_mass(gm, 1.0 / 3.0);
    small_omega.see(std::abs(gm_power(gm, 1.0 / 3.0).mass() - quad_third) / quad_third);
  }
  return {single.ok() && multi.ok(),
          fmt::format("{}; {}; omega=1/3 worst {:.2e} (not judged)", single.str("single component"),
                      multi.str("separated mixture, omega in [0.5, 1]"), small_omega.value)};
}

MdGlmbDensity one_label(double r, const GaussianMixtured& p) {
  MdGlmbDensity d;
  d.label_space = {{0, 1}};
  d.hypotheses.push_back({{}, 1.0 - r, {}});
  d.hypotheses.push_back({{{0, 1}}, r, {p}});
  return d;
}

Outcome check_fusion() {
  Rng rng(1005);
  const ReductionParams none{0.0, 0.0, static_cast<std::size_t>(-1)};

  Worst pair{1e-9};
  for (int trial = 0; trial < 200; ++trial) {
    const auto p1 = random_mixture(rng, 2, uniform_int(rng, 1, 2));
    const auto p2 = random_mixture(rng, 2, uniform_int(rng, 1, 2));
    const double r1 = uniform(rng, 0.01, 0.99);
    const double r2 = uniform(rng, 0.01, 0.99);
    const double w = uniform(rng, 0.1, 0.9);
    const auto a = fuse_bernoulli_pair({{0, 1}, r1, p1}, {{0, 1}, r2, p2}, w, 1 - w, none);
    const auto b = fuse_mdglmb(one_label(r1, p1), one_label(r2, p2), w, 1 - w);
    const auto* h = b.find({{0, 1}});
    pair.see(std::abs((h ? h->weight : 0.0) - a.existence));
    if (h) {
      pair.see((mixture_mean(h->densities[0]) - mixture_mean(a.density)).cwiseAbs().maxCoeff());
      pair.see((mixture_covariance(h->densities[0]) - mixture_covariance(a.density)).cwiseAbs().maxCoeff());
    }
  }

  Worst weights{1e-6};
  for (int trial = 0; trial < 30; ++trial) {
    const int n = uniform_int(rng, 1, 4);
    // Single components: the closed form is exact only there.
    const auto d1 = random_mdglmb(rng, n, 1, 1);
    auto d2 = d1;
    double s = 0.0;
    for (auto& h : d2.hypotheses) {
      h.weight = uniform(rng, 0.05, 1.0);
      s += h.weight;
      for (auto& p : h.densities) p = random_mixture(rng, 1, 1, 2.0);
    }
    for (auto& h : d2.hypotheses) h.weight /= s;
    const double w = uniform(rng, 0.2, 0.8);
    const auto ref = brute_gci_weights(d1, d2, w, 1 - w);
    const auto f = fuse_mdglmb(d1, d2, w, 1 - w);
    for (const auto& [labels, v] : ref) {
      const auto* h = f.find(labels);
      weights.see(std::abs((h ? h->weight : 0.0) - v));
    }
  }

  Worst idem{1e-9};
  for (int trial = 0; trial < 100; ++trial) {
    const auto dim = uniform_int(rng, 1, 4);
    const auto t = single_gaussian_track({0, 1}, uniform(rng, 0.0, 1.0), random_vector(rng, dim, 10), random_spd(rng, dim));
    const double w = uniform(rng, 0.05, 0.95);
    const auto f = fuse_bernoulli_pair(t, t, w, 1 - w);
    idem.see(std::abs(f.existence - t.existence));
    if (t.existence > 0.0) {
      idem.see((f.density.components[0].mean - t.density.components[0].mean).cwiseAbs().maxCoeff());
      idem.see((f.density.components[0].covariance - t.density.components[0].covariance).cwiseAbs().maxCoeff());
    }
  }
  for (int trial = 0; trial < 20; ++trial) {
    const auto d = random_mdglmb(rng, uniform_int(rng, 1, 4), 2, 1);
    const double w = uniform(rng, 0.05, 0.95);
    const auto f = fuse_mdglmb(d, d, w, 1 - w);
    for (const auto& h : d.hypotheses) {
      const auto* g = f.find(h.labels);
      idem.see(std::abs((g ? g->weight : 0.0) - h.weight));
      if (!g) continue;
      for (std::size_t k = 0; k < h.labels.size(); ++k) {
        idem.see((g->densities[k].components[0].mean - h.densities[k].components[0].mean).cwiseAbs().maxCoeff());
        idem.see((g->densities[k].components[0].covariance - h.densities[k].components[0].covariance).cwiseAbs().maxCoeff());
      }
    }
  }
  return {pair.ok() && weights.ok() && idem.ok(),
          fmt::format("{}; {}; {}", pair.str("pair vs table"), weights.str("weights vs quadrature"), idem.str("idempotence"))};
}

Outcome check_metric_axioms() {
  Rng rng(1006);
  const OspaParams params{1.0, 100.0};
  auto points = [&] {
    std::vector<Eigen::Vector2d> out(static_cast<std::size_t>(uniform_int(rng, 0, 6)));
    for (auto& p : out) p = Eigen::Vector2d(uniform(rng, -200, 200), uniform(rng, -200, 200));
    return out;
  };
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const auto x = points();
    const auto y = points();
    const auto z = points();
    const double xy = ospa(x, y, params);
    if (xy < -1e-9) ++violations;
    if (std::abs(xy - ospa(y, x, params)) > 1e-9) ++violations;
    if (std::abs(ospa(x, x, params)) > 1e-9) ++violations;
    if (xy > ospa(x, z, params) + ospa(z, y, params) + 1e-9) ++violations;
  }
  return {violations == 0, fmt::format("1000 triples, {} violations", violations)};
}

template <typename Pred>
double mean_over(const sim::ResultTable& t, int from, int to, Pred f) {
  double s = 0.0;
  int n = 0;
  for (const auto& row : t.rows)
    if (row.scan >= from && row.scan < to) {
      s += f(row);
      ++n;
    }
  return n ? s / n : std::numeric_limits<double>::quiet_NaN();
}

Outcome check_scenario_one() {
  const auto config = sim::preset("scenario1");
  const auto result = sim::run_experiment(config);
  const auto& lsm = result.table("lsm");
  const auto& naive = result.table("naive");
  int after = 0;
  int better = 0;
  for (std::size_t k = 0; k < lsm.rows.size(); ++k) {
    if (lsm.rows[k].scan <= 5) continue;
    ++after;
    if (lsm.rows[k].ospa_mean < naive.rows[k].ospa_mean) ++better;
  }
  const auto ospa = [](const sim::ScanStats& s) { return s.ospa_mean; };
  const double lsm_ss = mean_over(lsm, 6, config.duration, ospa);
  double local_ss = kInf;
  for (const auto& s : config.sensors)
    local_ss = std::min(local_ss, mean_over(result.table(fmt::format("local_s{}", s.id)), 6, config.duration, ospa));
  const double fraction = static_cast<double>(better) / after;
  return {fraction >= 0.9 && lsm_ss <= 1.1 * local_ss,
          fmt::format("{} runs; lsm below naive on {:.1f}% of scans after 5; steady OSPA lsm {:.3f}, best local {:.3f}, "
                      "naive {:.3f}",
                      config.mc_runs, 100 * fraction, lsm_ss, local_ss, mean_over(naive, 6, config.duration, ospa))};
}

Outcome check_prior_birth() {
  const auto config = sim::preset("scenario1-prior");
  const auto result = sim::run_experiment(config);
  // The late target's life, from two scans after the last sensor first sees it.
  int seen = 0;
  for (const auto& s : config.sensors)
    for (const auto& o : s.occlusions)
      if (o.from <= config.targets[static_cast<std::size_t>(o.target)].birth) seen = std::max(seen, o.to);
  const auto& late = config.targets[1];
  const int from = std::max(seen, late.birth) + 2;
  const int to = late.death;
  const double under = mean_over(result.table("naive"), from, to,
                                 [](const sim::ScanStats& s) { return s.card_truth - s.card_mean; });
  const double lsm_err = mean_over(result.table("lsm"), from, to,
                                   [](const sim::ScanStats& s) { return std::abs(s.card_mean - s.card_truth); });
  return {under >= 0.5 && lsm_err < 0.3,
          fmt::format("{} runs, scans [{}, {}); naive under-count {:.3f}; lsm |card error| {:.3f}", config.mc_runs, from,
                      to, under, lsm_err)};
}

Outcome check_scenario_two() {
  const auto config = sim::preset("scenario2");
  const auto result = sim::run_experiment(config);
  const auto& lsm = result.table("lsm");
  // Steady state: truth cardinality unchanged for the last three scans.
  double err = 0.0;
  int n = 0;
  std::vector<int> profile;
  std::vector<int> truth_profile;
  for (std::size_t k = 0; k < lsm.rows.size(); ++k) {
    const auto& row = lsm.rows[k];
    if (truth_profile.empty() || truth_profile.back() != row.card_truth) truth_profile.push_back(row.card_truth);
    if (k < 3 || lsm.rows[k - 3].card_truth != row.card_truth) continue;
    err += std::abs(row.card_mean - row.card_truth);
    ++n;
    const int rounded = static_cast<int>(std::lround(row.card_mean));
    if (profile.empty() || profile.back() != rounded) profile.push_back(rounded);
  }
  err /= n;
  const bool steps = profile == std::vector<int>{2, 3, 4, 5, 3} && truth_profile == profile;
  return {steps && err < 0.3,
          fmt::format("{} runs; steady-state profile {}; mean |card error| {:.3f} over {} scans", config.mc_runs,
                      fmt::join(profile, "->"), err, n)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

Outcome check_determinism() {
  const auto root = std::filesystem::temp_directory_path() / "gcilsm_acceptance";
  std::filesystem::remove_all(root);
  std::filesystem::create_directories(root);
  const auto config = (root / "scenario2.yaml").string();
  auto cli = [&](const std::string& args) {
    return std::system(fmt::format("{} {} >/dev/null 2>&1", GCILSM_CLI, args).c_str());
  };
  if (cli("preset scenario2 --out " + config) != 0) return {false, "preset command failed"};
  for (const auto* dir : {"first", "second"})
    if (cli(fmt::format("run --config {} --out {} --runs 20 --seed 424242", config, (root / dir).string())) != 0)
      return {false, fmt::format("run into {} failed", dir)};
  int files = 0;
  int differing = 0;
  for (const auto& entry : std::filesystem::directory_iterator(root / "first")) {
    ++files;
    if (slurp(entry.path()) != slurp(root / "second" / entry.path().filename())) ++differing;
  }
  std::filesystem::remove_all(root);
  const int expected = static_cast<int>(sim::preset("scenario2").sensors.size()) + 3;
  return {files == expected && differing == 0,
          fmt::format("two CLI runs, {} output files, {} differ", files, differing)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> check;
    double time_limit;
  };
  const std::vector<Criterion> criteria{
      {"marginal oracle equivalence", check_marginals, 10.0},
      {"assignment oracle equivalence", check_assignment, 30.0},
      {"divergence correctness", check_divergence, kInf},
      {"GM exponentiation", check_exponentiation, kInf},
      {"fusion closed forms", check_fusion, kInf},
      {"OSPA metric axioms", check_metric_axioms, kInf},
      {"scenario 1 label-space recovery", check_scenario_one, 600.0},
      {"prior-birth failure mode", check_prior_birth, 600.0},
      {"scenario 2 cardinality tracking", check_scenario_two, 600.0},
      {"determinism", check_determinism, kInf},
  };
  int failed = 0;
  int index = 0;
  for (const auto& [name, check, time_limit] : criteria) {
    ++index;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, fmt::format("threw: {}", e.what())};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > time_limit) {
      out.pass = false;
      out.detail += fmt::format("; over the {:.0f}s budget", time_limit);
    }
    fmt::print("{} {:>2} {:<32} {:7.2f}s  {}\n", out.pass ? "PASS" : "FAIL", index, name, secs, out.detail);
    std::fflush(stdout);
    if (!out.pass) ++failed;
  }
  return failed;
}
