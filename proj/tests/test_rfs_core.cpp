#include <cmath>
#include <numbers>
#include <sstream>
#include <unordered_set>

#include <gtest/gtest.h>

#include "gcilsm/densities.hpp"
#include "gcilsm/errors.hpp"
#include "gcilsm/gaussian_mixture.hpp"
#include "support/generators.hpp"
#include "support/simpson.hpp"

namespace {

using namespace gcilsm;
using namespace gcilsm::testing;

// Direct evaluation of sqrt(det(2 pi P / w) det(2 pi P)^(-w)).
double rho_direct(const Eigen::MatrixXd& p, double w) {
  const Eigen::MatrixXd two_pi_p = 2.0 * std::numbers::pi * p;
  return std::sqrt((two_pi_p / w).determinant() * std::pow(two_pi_p.determinant(), -w));
}

TEST(Label, OrderIsLexicographicOnBirthTimeThenIndex) {
  EXPECT_LT((Label{0, 5}), (Label{1, 1}));
  EXPECT_LT((Label{2, 1}), (Label{2, 3}));
  EXPECT_EQ((Label{3, 4}), (Label{3, 4}));
  std::unordered_set<Label> set{{0, 1}, {0, 1}, {1, 1}};
  EXPECT_EQ(set.size(), 2u);
  std::ostringstream os;
  os << Label{7, 2};
  EXPECT_EQ(os.str(), "(7,2)");
}

TEST(GmPower, UnitExponentIsIdentity) {
  Rng rng(11);
  const auto gm = random_mixture(rng, 3, 4);
  const auto p = gm_power(gm, 1.0);
  EXPECT_NEAR(p.mass(), 1.0, 1e-12);
  ASSERT_EQ(p.density.size(), gm.size());
  for (std::size_t i = 0; i < gm.size(); ++i) {
    EXPECT_NEAR(p.density.components[i].weight, gm.components[i].weight, 1e-12);
    EXPECT_LT((p.density.components[i].mean - gm.components[i].mean).norm(), 1e-12);
    EXPECT_LT((p.density.components[i].covariance - gm.components[i].covariance).norm(), 1e-12);
  }
}

TEST(GmPower, StandardNormalSquareRoot) {
  const auto p = gm_power(GaussianMixtured::single(vec1(0.0), mat1(1.0)), 0.5);
  const double quad = simpson([](double x) { return std::sqrt(normal_pdf(x, 0.0, 1.0)); }, -40.0, 40.0);
  EXPECT_NEAR(p.mass(), std::sqrt(4.0 * std::numbers::pi / std::sqrt(2.0 * std::numbers::pi)), 1e-12);
  EXPECT_NEAR(p.mass(), quad, 1e-9);
  EXPECT_NEAR(p.mass(), 2.2390, 5e-5);
  EXPECT_NEAR(p.density.components[0].covariance(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(p.density.components[0].mean(0), 0.0, 1e-15);
}

TEST(GmPower, SingleComponentMassIsRho) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const auto dim = uniform_int(rng, 1, 4);
    const Eigen::MatrixXd cov = random_spd(rng, dim, uniform(rng, 0.1, 20.0));
    const double w = uniform(rng, 0.05, 1.0);
    const auto p = gm_power(GaussianMixtured::single(random_vector(rng, dim, 10.0), cov), w);
    EXPECT_NEAR(p.mass(), rho_direct(cov, w), 1e-9 * rho_direct(cov, w));
  }
}

TEST(GmPower, TwoDimensionalMassMatchesQuadrature) {
  Eigen::Matrix2d cov;
  cov << 2.0, 0.6, 0.6, 1.0;
  const Eigen::Vector2d mean(1.0, -0.5);
  const double w = 0.3;
  const auto p = gm_power(GaussianMixtured::single(mean, cov), w);
  const double quad = simpson2(
      [&](double x, double y) { return std::pow(normal_pdf2({x, y}, mean, cov), w); }, -40, 40, -40, 40, 1200);
  EXPECT_NEAR(p.mass(), quad, 1e-9);
}

TEST(GmPower, SeparatedMixtureWithinTwoPercent) {
  GaussianMixtured gm({{0.5, vec1(0.0), mat1(1.0)}, {0.5, vec1(6.0), mat1(1.0)}});
  const auto p = gm_power(gm, 0.5);
  const double quad = simpson(
      [](double x) { return std::sqrt(0.5 * normal_pdf(x, 0.0, 1.0) + 0.5 * normal_pdf(x, 6.0, 1.0)); }, -40, 46);
  EXPECT_LT(std::abs(p.mass() - quad) / quad, 0.02);
}

TEST(GmPower, RejectsBadInput) {
  const auto gm = GaussianMixtured::single(vec1(0.0), mat1(1.0));
  EXPECT_THROW(gm_power(gm, 0.0), DomainError);
  EXPECT_THROW(gm_power(gm, 1.5), DomainError);
  EXPECT_THROW(gm_power(GaussianMixtured{}, 0.5), DomainError);
  EXPECT_THROW(gm_power(GaussianMixtured::single(vec1(0.0), mat1(-1.0)), 0.5), NumericError);
}

TEST(GmProduct, StandardNormalsOverlap) {
  const auto n = GaussianMixtured::single(vec1(0.0), mat1(1.0));
  const auto p = gm_product(n, n);
  const double quad = simpson([](double x) { return normal_pdf(x, 0.0, 1.0) * normal_pdf(x, 0.0, 1.0); }, -40, 40);
  EXPECT_NEAR(p.mass(), 1.0 / (2.0 * std::sqrt(std::numbers::pi)), 1e-12);
  EXPECT_NEAR(p.mass(), quad, 1e-9);
  EXPECT_NEAR(p.mass(), 0.28209, 5e-6);
  EXPECT_NEAR(p.density.components[0].covariance(0, 0), 0.5, 1e-12);
}

TEST(GmProduct, FarApartStaysInLogDomain) {
  const auto p = gm_product(GaussianMixtured::single(vec1(0.0), mat1(1.0)),
                            GaussianMixtured::single(vec1(1e6), mat1(1.0)));
  EXPECT_TRUE(std::isfinite(p.log_mass));
  EXPECT_LT(p.log_mass, std::log(1e-300));
  EXPECT_NEAR(p.log_mass, -0.5 * std::log(4.0 * std::numbers::pi) - 1e12 / 4.0, 1e-3);
}

TEST(GmProduct, NarrowTimesBroadSamplesBroad) {
  const auto p = gm_product(GaussianMixtured::single(vec1(1.5), mat1(1e-8)),
                            GaussianMixtured::single(vec1(0.0), mat1(4.0)));
  EXPECT_NEAR(p.mass(), normal_pdf(1.5, 0.0, 4.0), 1e-8);
}

TEST(GmProduct, MixtureMassMatchesQuadrature) {
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_mixture(rng, 1, uniform_int(rng, 1, 3));
    const auto b = random_mixture(rng, 1, uniform_int(rng, 1, 3));
    const auto p = gm_product(a, b);
    auto f = [](const GaussianMixtured& g, double x) {
      double v = 0.0;
      for (const auto& c : g.components) v += c.weight * normal_pdf(x, c.mean(0), c.covariance(0, 0));
      return v;
    };
    const double quad = simpson([&](double x) { return f(a, x) * f(b, x); }, -60, 60, 60000);
    EXPECT_NEAR(p.mass(), quad, 1e-9);
  }
}

TEST(GmProduct, EmptyInputThrows) {
  EXPECT_THROW(gm_product(GaussianMixtured{}, GaussianMixtured::single(vec1(0.0), mat1(1.0))), DomainError);
}

TEST(GmReduce, SingleComponentUnchanged) {
  const auto gm = GaussianMixtured::single(vec1(0.0), mat1(1.0));
  const auto r = gm_reduce(gm, {0.5, 4.0, 1});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.components[0].weight, 1.0);
  EXPECT_EQ(r.components[0].mean(0), 0.0);
}

TEST(GmReduce, DuplicatesMerge) {
  Eigen::MatrixXd cov(2, 2);
  cov << 2.0, 0.3, 0.3, 1.0;
  const Eigen::VectorXd m = Eigen::Vector2d(1.0, 2.0);
  const GaussianMixtured gm({{0.5, m, cov}, {0.5, m, cov}});
  const auto r = gm_reduce(gm, {1e-5, 4.0, 10});
  ASSERT_EQ(r.size(), 1u);
  EXPECT_NEAR(r.components[0].weight, 1.0, 1e-15);
  EXPECT_LT((r.components[0].mean - m).norm(), 1e-15);
  EXPECT_LT((r.components[0].covariance - cov).norm(), 1e-14);
}

TEST(GmReduce, CapsAtMaxComponentsAndRenormalizes) {
  GaussianMixtured gm;
  for (int i = 0; i < 11; ++i) gm.components.push_back({(i + 1) / 66.0, vec1(100.0 * i), mat1(1.0)});
  const auto r = gm_reduce(gm, {1e-5, 4.0, 10});
  ASSERT_EQ(r.size(), 10u);
  EXPECT_NEAR(total_weight(r), 1.0, 1e-12);
  EXPECT_NEAR(r.components.back().mean(0), 100.0, 1e-12);
  for (std::size_t i = 1; i < r.size(); ++i) EXPECT_GE(r.components[i - 1].weight, r.components[i].weight);
}

TEST(GmReduce, MergePreservesWeightAndMoments) {
  Rng rng(14);
  for (int trial = 0; trial < 50; ++trial) {
    const auto gm = random_mixture(rng, 2, uniform_int(rng, 2, 8), 1.0);
    const auto r = gm_reduce(gm, {0.0, 4.0, 100});
    EXPECT_NEAR(total_weight(r), total_weight(gm), 1e-9);
    EXPECT_LT((mixture_mean(r) - mixture_mean(gm)).norm(), 1e-9);
    EXPECT_LT((mixture_covariance(r) - mixture_covariance(gm)).norm(), 1e-9);
  }
}

TEST(GmReduce, AllPrunedKeepsHeaviest) {
  const GaussianMixtured gm({{0.3, vec1(0.0), mat1(1.0)}, {0.7, vec1(50.0), mat1(1.0)}});
  bool flagged = false;
  const auto r = gm_reduce(gm, {0.9, 4.0, 10}, &flagged);
  EXPECT_TRUE(flagged);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r.components[0].mean(0), 50.0);
  EXPECT_EQ(r.components[0].weight, 1.0);
}

TEST(GmReduce, Deterministic) {
  Rng rng(15);
  const auto gm = random_mixture(rng, 4, 12, 2.0);
  const auto a = gm_reduce(gm, {});
  const auto b = gm_reduce(gm, {});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a.components[i].weight, b.components[i].weight);
    EXPECT_EQ(a.components[i].mean, b.components[i].mean);
    EXPECT_EQ(a.components[i].covariance, b.components[i].covariance);
  }
}

TEST(GaussianMixture, FloatInstantiation) {
  GaussianMixture<float> gm({{1.0f, Eigen::VectorXf::Zero(2), Eigen::MatrixXf::Identity(2, 2)}});
  const auto p = gm_power(gm, 0.5f);
  // 2-D identity: sqrt(det(4 pi I) / det(2 pi I)^(1/2)) = 4 pi / sqrt(2 pi).
  EXPECT_NEAR(p.mass(), 4.0f * std::numbers::pi_v<float> / std::sqrt(2.0f * std::numbers::pi_v<float>), 1e-5f);
}

TEST(Densities, CardinalityPmfOfTwoTracks) {
  LmbDensity d;
  d.tracks.push_back(single_gaussian_track({0, 1}, 0.99, vec1(0.0), mat1(1.0)));
  d.tracks.push_back(single_gaussian_track({0, 2}, 0.01, vec1(0.0), mat1(1.0)));
  const auto pmf = cardinality_pmf(d);
  ASSERT_EQ(pmf.size(), 3u);
  // Subset enumeration: {} , {1} or {2}, {1,2}.
  EXPECT_NEAR(pmf[0], 0.01 * 0.99, 1e-15);
  EXPECT_NEAR(pmf[1], 0.99 * 0.99 + 0.01 * 0.01, 1e-15);
  EXPECT_NEAR(pmf[2], 0.99 * 0.01, 1e-15);
}

TEST(Densities, CardinalityPmfSumsToOne) {
  Rng rng(16);
  for (int trial = 0; trial < 100; ++trial) {
    LmbDensity d;
    const int n = uniform_int(rng, 0, 12);
    for (int i = 0; i < n; ++i)
      d.tracks.push_back(single_gaussian_track({0, i + 1}, uniform(rng, 0.0, 1.0), vec1(0.0), mat1(1.0)));
    const auto pmf = cardinality_pmf(d);
    double s = 0.0;
    for (double p : pmf) s += p;
    EXPECT_NEAR(s, 1.0, 1e-9);
  }
}

TEST(Densities, ToMdGlmbIsValidAndConsistent) {
  LmbDensity d;
  d.tracks.push_back(single_gaussian_track({0, 2}, 0.5, vec1(1.0), mat1(1.0)));
  d.tracks.push_back(single_gaussian_track({0, 1}, 0.9, vec1(0.0), mat1(1.0)));
  const auto g = to_mdglmb(d);
  EXPECT_NO_THROW(validate(g));
  EXPECT_EQ(g.hypotheses.size(), 4u);
  const auto* both = g.find({{0, 1}, {0, 2}});
  ASSERT_NE(both, nullptr);
  EXPECT_NEAR(both->weight, 0.45, 1e-15);
  const auto* none = g.find({});
  ASSERT_NE(none, nullptr);
  EXPECT_NEAR(none->weight, 0.05, 1e-15);
}

TEST(Densities, ValidationRejectsBrokenInput) {
  LmbDensity d;
  d.tracks.push_back(single_gaussian_track({0, 1}, 1.2, vec1(0.0), mat1(1.0)));
  EXPECT_THROW(validate(d), DomainError);
  d.tracks[0].existence = 0.5;
  d.tracks.push_back(d.tracks[0]);
  EXPECT_THROW(validate(d), DomainError);

  MdGlmbDensity g;
  g.label_space = {{0, 1}};
  g.hypotheses.push_back({{}, 0.3, {}});
  EXPECT_THROW(validate(g), DomainError);
  g.hypotheses.push_back({{{0, 1}}, 0.7, {GaussianMixtured::single(vec1(0.0), mat1(1.0))}});
  EXPECT_NO_THROW(validate(g));
  g.hypotheses.push_back({{}, 0.0, {}});
  EXPECT_THROW(validate(g), DomainError);
}

}  // namespace
