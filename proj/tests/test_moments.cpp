#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "momentlift/moments.hpp"
#include "momentlift/quadrature.hpp"
#include "test_support.hpp"

namespace ml = momentlift;
using ml::Complex;
using ml::Matrix;
using ml::Vector;
using std::numbers::pi;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

double max_rel(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  return ml::max_relative_residual(a, b);
}

bool bit_equal(const ml::MomentEstimate& a, const ml::MomentEstimate& b) {
  return a.value.real() == b.value.real() && a.value.imag() == b.value.imag() && a.std_error == b.std_error &&
         a.n_samples == b.n_samples;
}

void expect_same_ensemble(const ml::RotationEnsemble& a, const ml::RotationEnsemble& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(Matrix(a.rotation(i)), Matrix(b.rotation(i)));
}

}  // namespace

TEST(MomentQuery, Invariants) {
  EXPECT_THROW(ml::MomentQuery(std::vector<Vector>{}), ml::ValidationError);
  EXPECT_THROW(ml::MomentQuery({vec({1, 2}), vec({1, 2, 3})}), ml::DimensionError);
  const ml::MomentQuery q({vec({1, 2}), vec({3, 4})});
  EXPECT_EQ(q.order(), 2);
  EXPECT_EQ(q.dim(), 2);
  EXPECT_EQ(q.embedded(4)[1], vec({3, 4, 0, 0}));
  EXPECT_EQ(q.negated()[0], vec({-1, -2}));
}

TEST(RotationEnsemble, RejectsInvalidContents) {
  std::vector<double> reflection{1, 0, 0, -1};
  EXPECT_THROW(ml::RotationEnsemble(2, 0, reflection), ml::ValidationError);
  std::vector<double> identity{1, 0, 0, 1};
  EXPECT_THROW(ml::RotationEnsemble(2, 0, identity, std::vector<double>{0.0}), ml::ValidationError);
  EXPECT_THROW(ml::RotationEnsemble(2, 0, identity, std::vector<double>{-1.0}), ml::ValidationError);
  EXPECT_THROW(ml::RotationEnsemble(2, 0, identity, std::vector<double>{1e-310}), ml::ValidationError);
  EXPECT_THROW(ml::RotationEnsemble(2, 0, identity, std::vector<double>{1.0, 1.0}), ml::DimensionError);
  EXPECT_THROW(ml::RotationEnsemble(2, 0, std::vector<double>{1, 0, 0}), ml::DimensionError);
}

TEST(EstimateFullMoment, CenteredGaussianAtOrigin) {
  const auto obj = ml::centered_gaussian(3);
  const ml::MomentQuery q({Vector::Zero(3), Vector::Zero(3)});
  const auto est = ml::estimate_full_moment(obj, q, ml::haar_ensemble(3, 1000, 1));
  EXPECT_NEAR(est.value.real(), std::pow(2.0 * pi, 3.0), 1e-12);
  EXPECT_NEAR(est.value.real(), 248.0502, 1e-4);
  EXPECT_EQ(est.value.imag(), 0.0);
  EXPECT_EQ(est.std_error, 0.0);
  EXPECT_EQ(est.n_samples, 1000u);
}

TEST(EstimateFullMoment, CenteredGaussianIsEnsembleIndependent) {
  const auto obj = ml::centered_gaussian(3);
  ml::RngStream rng(40);
  for (int trial = 0; trial < 20; ++trial) {
    const auto q = ml::testing::random_query(2, 3, 2.0, rng);
    const double expect = std::pow(2.0 * pi, 3.0) * std::exp(-0.5 * (q[0].squaredNorm() + q[1].squaredNorm()));
    const auto est = ml::estimate_full_moment(obj, q, ml::haar_ensemble(3, 200, 40 + trial));
    EXPECT_NEAR(est.value.real(), expect, 1e-12 * std::max(1.0, expect));
    EXPECT_NEAR(est.value.imag(), 0.0, 1e-12);
    EXPECT_LE(est.std_error, 1e-12);
  }
}

TEST(EstimateFullMoment, EmptyEnsembleRejected) {
  const ml::RotationEnsemble empty(3, 0, {});
  const ml::MomentQuery q({Vector::Zero(3)});
  EXPECT_THROW(ml::estimate_full_moment(ml::centered_gaussian(3), q, empty), ml::ValidationError);
  EXPECT_THROW(ml::estimate_proj_moment(ml::centered_gaussian(3), ml::MomentQuery({Vector::Zero(2)}), 2, empty),
               ml::ValidationError);
}

TEST(EstimateFullMoment, So2MonteCarloMatchesTrapezoid) {
  const auto obj = ml::testing::two_component_mixture(2);
  const ml::MomentQuery q({vec({0.9, -0.4}), vec({-0.3, 1.2})});
  const Complex oracle = ml::quadrature_full_moment(obj, q, 4096);
  const auto est = ml::estimate_full_moment(obj, q, ml::haar_ensemble(2, 1000000, 41));
  EXPECT_LE(std::abs(est.value - oracle), 5.0 * std::sqrt(2.0) * est.std_error);
}

// SO(2) average of exp(-i <R^T omega, mu>) is J0(|omega| |mu|).
TEST(EstimateFullMoment, So2BesselClosedForm) {
  const ml::GaussianMixture obj(2, {{1.0, vec({1.2, 0.0}), 0.8}});
  const Vector w = vec({0.6, 0.8});
  const double c = 2.0 * pi * 0.64 * std::exp(-0.5 * 0.64);
  const double oracle = c * std::cyl_bessel_j(0.0, 1.2);
  const auto est = ml::estimate_full_moment(obj, ml::MomentQuery({w}), ml::haar_ensemble(2, 400000, 42));
  EXPECT_LE(std::abs(est.value - Complex(oracle, 0.0)), 5.0 * std::sqrt(2.0) * est.std_error);
}

// SO(3) average of exp(-i <R^T omega, mu>) is sin(x)/x with x = |omega| |mu|.
TEST(EstimateFullMoment, So3SincClosedForm) {
  const ml::GaussianMixture obj(3, {{1.0, vec({0.5, -1.0, 0.5}), 0.9}});
  const Vector w = vec({1.0, 0.3, -0.6});
  const double x = w.norm() * obj.mean(0).norm();
  const double c = std::pow(2.0 * pi * 0.81, 1.5) * std::exp(-0.5 * 0.81 * w.squaredNorm());
  const double oracle = c * std::sin(x) / x;
  const auto est = ml::estimate_full_moment(obj, ml::MomentQuery({w}), ml::haar_ensemble(3, 400000, 43));
  EXPECT_LE(std::abs(est.value - Complex(oracle, 0.0)), 5.0 * std::sqrt(2.0) * est.std_error);
}

TEST(EstimateProjMoment, ZeroFrequenciesGiveMassPower) {
  ml::RngStream rng(44);
  const auto obj = ml::random_mixture(4, 3, rng);
  const double mass = ml::fourier_eval(obj, Vector::Zero(4)).real();
  const ml::MomentQuery q({Vector::Zero(2), Vector::Zero(2), Vector::Zero(2)});
  const auto est = ml::estimate_proj_moment(obj, q, 2, ml::haar_ensemble(4, 500, 44));
  EXPECT_LE(std::abs(est.value - Complex(mass * mass * mass, 0.0)), 1e-12 * mass * mass * mass);
  EXPECT_EQ(est.std_error, 0.0);
}

TEST(EstimateProjMoment, ModelErrors) {
  const auto obj = ml::centered_gaussian(3);
  const auto ens = ml::haar_ensemble(3, 10, 1);
  EXPECT_THROW(ml::estimate_proj_moment(obj, ml::MomentQuery({Vector::Zero(3)}), 3, ens), ml::ModelError);
  EXPECT_THROW(ml::estimate_proj_moment(obj, ml::MomentQuery({Vector::Zero(1)}), 2, ens), ml::DimensionError);
}

TEST(EstimateProjMoment, RestrictionHoldsPerSample) {
  ml::RngStream rng(45);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + trial % 4;
    const int m = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(n - 1));
    const int d = 1 + static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(m));
    const auto obj = ml::random_mixture(n, 3, rng);
    const auto q = ml::testing::random_query(d, m, 2.0, rng);
    const auto ens = ml::haar_ensemble(n, 64, 1000 + static_cast<std::uint64_t>(trial));
    worst = std::max(worst, max_rel(ml::proj_moment_samples(obj, q, m, ens), ml::full_moment_samples(obj, q.embedded(n), ens)));
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(EstimateProjMoment, So2QuadratureEnsembleMatchesOracle) {
  const auto obj = ml::testing::two_component_mixture(2);
  const ml::MomentQuery eta({vec({1.1})});
  const auto est = ml::estimate_proj_moment(obj, eta, 1, ml::quadrature_ensemble(2, 4096));
  const Complex oracle = ml::quadrature_full_moment(obj, eta.embedded(2), 4096);
  EXPECT_LE(std::abs(est.value - oracle), 1e-8);
}

TEST(MomentSymmetries, CouplingIdentityPerSample) {
  ml::RngStream rng(46);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 3 + trial % 3;
    const int m = 2;
    const auto obj = ml::random_mixture(n, 3, rng);
    const auto eta = ml::testing::random_query(2, m, 2.0, rng);
    const auto q = ml::haar_rotation(n, rng).matrix();
    const auto ens = ml::haar_ensemble(n, 64, 2000 + static_cast<std::uint64_t>(trial));
    const auto lhs = ml::full_moment_samples(obj, eta.embedded(n).transformed(q), ens);
    const auto rhs = ml::full_moment_samples(obj, eta.embedded(n), ens.left_multiplied(q.transpose()));
    EXPECT_LE(max_rel(lhs, rhs), 1e-10);
  }
}

TEST(MomentSymmetries, SimultaneousRotationInvariance) {
  ml::RngStream rng(47);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 4;
    const int d = 1 + trial % 3;
    const auto obj = ml::random_mixture(n, 2, rng);
    const auto query = ml::testing::random_query(d, n, 2.0, rng);
    const auto u = ml::haar_rotation(n, rng).matrix();
    const auto ens = ml::haar_ensemble(n, 64, 3000 + static_cast<std::uint64_t>(trial));
    const auto lhs = ml::full_moment_samples(obj, query.transformed(u), ens);
    const auto rhs = ml::full_moment_samples(obj, query, ens.left_multiplied(u.transpose()));
    EXPECT_LE(max_rel(lhs, rhs), 1e-10);
  }
}

TEST(MomentSymmetries, PermutationIsBitExact) {
  ml::RngStream rng(48);
  const auto obj = ml::random_mixture(4, 3, rng);
  const auto ens = ml::haar_ensemble(4, 2000, 48);
  const Vector a = ml::testing::random_vector(4, 2.0, rng);
  const Vector b = ml::testing::random_vector(4, 2.0, rng);
  const Vector c = ml::testing::random_vector(4, 2.0, rng);
  const auto ref = ml::estimate_full_moment(obj, ml::MomentQuery({a, b, c}), ens);
  for (const auto& perm : std::vector<std::vector<Vector>>{{a, c, b}, {b, a, c}, {b, c, a}, {c, a, b}, {c, b, a}}) {
    EXPECT_TRUE(bit_equal(ml::estimate_full_moment(obj, ml::MomentQuery(perm), ens), ref));
  }
  const ml::MomentQuery eta({a.head(3), b.head(3)});
  const ml::MomentQuery swapped({b.head(3), a.head(3)});
  EXPECT_TRUE(bit_equal(ml::estimate_proj_moment(obj, eta, 3, ens), ml::estimate_proj_moment(obj, swapped, 3, ens)));
}

TEST(MomentSymmetries, NegationConjugatesPerSample) {
  ml::RngStream rng(49);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 2 + trial % 4;
    const auto obj = ml::random_mixture(n, 3, rng);
    const auto q = ml::testing::random_query(2, n, 2.0, rng);
    const auto ens = ml::haar_ensemble(n, 64, 4000 + static_cast<std::uint64_t>(trial));
    const auto pos = ml::full_moment_samples(obj, q, ens);
    const auto neg = ml::full_moment_samples(obj, q.negated(), ens);
    for (std::size_t i = 0; i < pos.size(); ++i) {
      EXPECT_LE(std::abs(neg[i] - std::conj(pos[i])), 1e-14 * std::max(1.0, std::abs(pos[i])));
    }
  }
}

TEST(MomentDeterminism, WorkerCountDoesNotChangeResults) {
  ml::RngStream rng(50);
  const auto obj = ml::random_mixture(4, 3, rng);
  const auto q = ml::testing::random_query(2, 4, 2.0, rng);
  const auto eta = ml::testing::random_query(2, 3, 2.0, rng);
  const auto ens = ml::haar_ensemble(4, 10007, 50);
  const auto full1 = ml::estimate_full_moment(obj, q, ens, 1);
  const auto proj1 = ml::estimate_proj_moment(obj, eta, 3, ens, 1);
  for (unsigned workers : {2u, 3u, 4u, 7u}) {
    EXPECT_TRUE(bit_equal(ml::estimate_full_moment(obj, q, ens, workers), full1));
    EXPECT_TRUE(bit_equal(ml::estimate_proj_moment(obj, eta, 3, ens, workers), proj1));
  }
  EXPECT_TRUE(bit_equal(ml::estimate_full_moment(obj, q, ml::haar_ensemble(4, 10007, 50), 1), full1));
}

TEST(SummarizeSamples, StandardErrorMatchesDirectFormula) {
  const std::vector<Complex> s{{1.0, 0.0}, {2.0, 4.0}, {4.0, -1.0}, {5.0, 1.0}};
  const auto est = ml::summarize_samples(s);
  EXPECT_DOUBLE_EQ(est.value.real(), 3.0);
  EXPECT_DOUBLE_EQ(est.value.imag(), 1.0);
  // Sample variances: re 10/3, im 14/3; SE = sqrt(max / 4).
  EXPECT_DOUBLE_EQ(est.std_error, std::sqrt(14.0 / 3.0 / 4.0));
  const auto single = ml::summarize_samples(std::vector<Complex>{{2.0, 1.0}});
  EXPECT_EQ(single.std_error, 0.0);
  EXPECT_EQ(single.n_samples, 1u);
}

TEST(SummarizeSamples, WeightedDeltaMethod) {
  const std::vector<Complex> s{{1.0, 0.0}, {3.0, 0.0}};
  const auto est = ml::summarize_samples(s, std::vector<double>{1.0, 3.0});
  EXPECT_DOUBLE_EQ(est.value.real(), 2.5);
  // sum w^2 (p - mu)^2 / (sum w)^2 = (1 * 2.25 + 9 * 0.25) / 16.
  EXPECT_DOUBLE_EQ(est.std_error, std::sqrt(4.5 / 16.0));
}

TEST(TiltedEnsemble, ZeroKappaIsHaar) {
  ml::RngStream stream(51, 0);
  const auto tilted = ml::sample_tilted_ensemble(3, 0.0, 500, stream);
  expect_same_ensemble(tilted, ml::haar_ensemble(3, 500, 51, 0));
  ASSERT_TRUE(tilted.has_weights());
  for (double w : *tilted.weights()) EXPECT_EQ(w, 1.0);
}

TEST(TiltedEnsemble, RejectsNegativeKappa) {
  ml::RngStream stream(52);
  EXPECT_THROW(ml::sample_tilted_ensemble(3, -0.5, 10, stream), ml::ValidationError);
}

TEST(TiltedEnsemble, WeightsArePositive) {
  for (double kappa : {0.5, 1.0, 3.0}) {
    ml::RngStream stream(53);
    const auto ens = ml::sample_tilted_ensemble(3, kappa, 2000, stream);
    for (std::size_t i = 0; i < ens.size(); ++i) {
      const double w = (*ens.weights())[i];
      EXPECT_GT(w, 0.0);
      EXPECT_DOUBLE_EQ(w, std::exp(-kappa * ens.rotation(i).trace()));
    }
  }
}

TEST(TiltedEnsemble, ReweightedTraceMatchesHaarMonteCarlo) {
  auto traces = [](const ml::RotationEnsemble& ens) {
    std::vector<Complex> t;
    for (std::size_t i = 0; i < ens.size(); ++i) t.emplace_back(ens.rotation(i).trace(), 0.0);
    return t;
  };
  const auto haar = ml::haar_ensemble(3, 100000, 54, 1);
  const auto oracle = ml::summarize_samples(traces(haar));
  ml::RngStream stream(54, 0);
  const auto tilted = ml::sample_tilted_ensemble(3, 1.0, 100000, stream);
  const auto weighted = ml::summarize_samples(traces(tilted), tilted.weights());
  const auto unweighted = ml::summarize_samples(traces(tilted));
  const double se = std::hypot(oracle.std_error, weighted.std_error);
  EXPECT_LE(std::abs(weighted.value - oracle.value), 5.0 * se);
  // The tilt pulls the trace upward; without weights the bias is obvious.
  EXPECT_GT(unweighted.value.real() - oracle.value.real(), 5.0 * std::hypot(oracle.std_error, unweighted.std_error));
}

TEST(ReweightedEstimate, EqualWeightsAreBitIdenticalToUnweighted) {
  ml::RngStream rng(55);
  const auto obj = ml::random_mixture(3, 3, rng);
  const auto base = ml::haar_ensemble(3, 3000, 55);
  std::vector<double> data;
  for (std::size_t i = 0; i < base.size(); ++i) data.insert(data.end(), base.rotation(i).data(), base.rotation(i).data() + 9);
  const ml::RotationEnsemble weighted(3, 55, data, std::vector<double>(base.size(), 0.37));
  const auto full_q = ml::testing::random_query(2, 3, 2.0, rng);
  const auto eta = ml::testing::random_query(2, 2, 2.0, rng);
  EXPECT_TRUE(bit_equal(ml::reweighted_estimate(obj, full_q, ml::MomentMode::full(), weighted),
                        ml::estimate_full_moment(obj, full_q, base)));
  EXPECT_TRUE(bit_equal(ml::reweighted_estimate(obj, eta, ml::MomentMode::slice(2), weighted),
                        ml::estimate_proj_moment(obj, eta, 2, base)));
}

TEST(ReweightedEstimate, RequiresWeights) {
  EXPECT_THROW(ml::reweighted_estimate(ml::centered_gaussian(3), ml::MomentQuery({Vector::Zero(3)}),
                                       ml::MomentMode::full(), ml::haar_ensemble(3, 10, 1)),
               ml::ValidationError);
}

TEST(ReweightedEstimate, TiltedMatchesHaar) {
  ml::RngStream rng(56);
  const auto obj = ml::random_mixture(3, 3, rng);
  const auto eta = ml::MomentQuery({vec({0.7, -0.2}), vec({0.1, 0.9})});
  const auto haar = ml::estimate_proj_moment(obj, eta, 2, ml::haar_ensemble(3, 100000, 56));
  ml::RngStream stream(56, 1);
  const auto tilted = ml::sample_tilted_ensemble(3, 1.0, 100000, stream);
  const auto rew = ml::reweighted_estimate(obj, eta, ml::MomentMode::slice(2), tilted);
  EXPECT_LE(std::abs(rew.value - haar.value), 5.0 * std::sqrt(2.0) * std::hypot(haar.std_error, rew.std_error));
}

TEST(ReweightedEstimate, CenteredGaussianIsExact) {
  const auto obj = ml::centered_gaussian(3);
  ml::RngStream stream(57);
  const auto tilted = ml::sample_tilted_ensemble(3, 2.0, 500, stream);
  const ml::MomentQuery q({vec({0.3, 0.4, 0.0}), vec({1.0, 0.0, 0.0})});
  const auto est = ml::reweighted_estimate(obj, q, ml::MomentMode::full(), tilted);
  const auto haar = ml::estimate_full_moment(obj, q, ml::haar_ensemble(3, 500, 57));
  EXPECT_NEAR(est.value.real(), haar.value.real(), 1e-12 * haar.value.real());
  EXPECT_EQ(est.std_error, 0.0);
}
