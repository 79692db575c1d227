#include "infotrap.hpp"

#include "fixtures.hpp"
#include "reference.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace infotrap;
using fixtures::diag_prior;
using fixtures::rows;
using fixtures::vec;

namespace {

TEST(Compositions, LexicographicAndComplete) {
  std::vector<std::vector<std::int64_t>> seen;
  detail::for_each_composition(3, 3, [&](const auto& q) { seen.push_back(q); });
  ASSERT_EQ(seen.size(), 10u);
  EXPECT_EQ(seen.front(), (std::vector<std::int64_t>{0, 0, 3}));
  EXPECT_EQ(seen.back(), (std::vector<std::int64_t>{3, 0, 0}));
  for (std::size_t i = 1; i < seen.size(); ++i) EXPECT_LT(seen[i - 1], seen[i]);
  EXPECT_DOUBLE_EQ(composition_count(3, 3), 10.0);
}

TEST(OptimalDivision, TwoObservationsSplitAcrossConfoundedPair) {
  const auto r = optimal_division(fixtures::example2(), diag_prior({1, 10}), 2);
  EXPECT_EQ(r.counts, (DivisionVector{0, 1, 1}));
  EXPECT_NEAR(r.value, 0.175, 1e-15);
  EXPECT_EQ(r.num_optima, 1u);
}

TEST(OptimalDivision, SingleStepMatchesGreedyChoice) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const Environment env(ref::random_matrix(rng, 4, 3, -3, 3));
    const GaussianPrior prior(ref::random_covariance(rng, 3));
    const auto r = optimal_division(env, prior, 1);
    const auto a = greedy_step(env, prior, DivisionVector(4));
    EXPECT_EQ(r.counts, a.increment);
  }
}

TEST(OptimalDivision, CertificateAgainstRandomCompositions) {
  const auto env = fixtures::example1();
  const auto prior = fixtures::parity_prior();
  const auto r = optimal_division(env, prior, 20);
  std::mt19937_64 rng(9);
  for (int k = 0; k < 100; ++k) {
    std::vector<std::int64_t> q(4, 0);
    for (int j = 0; j < 20; ++j) ++q[rng() % 4];
    EXPECT_LE(r.value, posterior_variance(env, prior, DivisionVector(q)) + 1e-15);
  }
  EXPECT_NEAR(r.value, ref::posterior_variance(env.coefficients(), prior.covariance(), r.counts.counts(), vec({1, 0, 0})),
              1e-14);
}

TEST(OptimalDivision, TiesAreEnumerated) {
  // Two identical sources: every split of t is optimal.
  const Environment env(rows({{1}, {1}}));
  const auto r = optimal_division(env, diag_prior({1}), 4);
  EXPECT_EQ(r.num_optima, 5u);
  ASSERT_EQ(r.all_optima.size(), 5u);
  EXPECT_EQ(r.counts, (DivisionVector{0, 4}));
}

TEST(OptimalDivision, SearchBound) {
  EXPECT_THROW(optimal_division(fixtures::example3(), diag_prior({1, 1, 1, 1}), 200), SearchBoundExceeded);
  EXPECT_THROW(optimal_division(fixtures::example2(), diag_prior({1, 1}), 0), InvalidArgument);
}

TEST(OptimalDivision, NeverWorseThanApportionedLambdaStar) {
  const auto env = fixtures::example2();
  const auto prior = diag_prior({1, 10});
  const auto lam = enumerate_minimal_spanning_sets(env).front().lambda_star;
  for (std::int64_t t = 1; t <= 25; ++t) {
    EXPECT_LE(optimal_division(env, prior, t).value, posterior_variance(env, prior, apportion(lam, t)) + 1e-15);
  }
}

TEST(OptimalTrajectory, BoundedResidualsForConfoundedPair) {
  const auto traj = optimal_trajectory(fixtures::example2(), diag_prior({1, 10}), 30);
  ASSERT_EQ(traj.steps.size(), 30u);
  for (std::int64_t t = 10; t <= 30; ++t) {
    const auto& d = traj.deviations[static_cast<std::size_t>(t - 1)];
    EXPECT_LE(d.cwiseAbs().maxCoeff(), 2.0);
    EXPECT_EQ(traj.steps[static_cast<std::size_t>(t - 1)].counts[0], 0);
  }
}

TEST(OptimalTrajectory, SingleSource) {
  const auto traj = optimal_trajectory(Environment(rows({{2, 1}})), diag_prior({1, 1}), 10,
                                       FrequencyVector{1.0});
  for (std::size_t t = 0; t < 10; ++t) EXPECT_EQ(traj.steps[t].counts[0], static_cast<std::int64_t>(t + 1));
}

TEST(OptimalTrajectory, ParityEnvironmentBrutForceValues) {
  // Frozen from the exhaustive search itself.
  const auto env = fixtures::example1();
  const auto prior = fixtures::parity_prior();
  EXPECT_EQ(optimal_division(env, prior, 40).counts, (DivisionVector{14, 12, 9, 5}));
  EXPECT_EQ(optimal_division(env, prior, 41).counts, (DivisionVector{19, 16, 5, 1}));
}

TEST(OptimalFrequencyNumeric, ConfoundedPair) {
  const auto r = optimal_frequency_numeric(fixtures::example2());
  EXPECT_LE((r.lambda.weights() - vec({0, 0.5, 0.5})).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_NEAR(r.value, 4.0 / 9.0, 1e-9);
  EXPECT_TRUE(r.unique);
  EXPECT_FALSE(r.numeric_only);
}

TEST(OptimalFrequencyNumeric, PreciseInformation) {
  const auto r = optimal_frequency_numeric(fixtures::precise_info());
  EXPECT_LE((r.lambda.weights() - vec({0, 0, 2.0 / 3.0, 1.0 / 3.0})).cwiseAbs().maxCoeff(), 1e-4);
}

TEST(OptimalFrequencyNumeric, TiedEnvironmentFlaggedNonUnique) {
  const auto r = optimal_frequency_numeric(fixtures::example1());
  EXPECT_FALSE(r.unique);
  EXPECT_NEAR(r.value, 4.0, 1e-6);
}

TEST(OptimalFrequencyNumeric, AgreesWithClosedFormOnRandomEnvironments) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const Environment env(ref::random_gaussian(rng, 5, 3));
    const auto best = enumerate_minimal_spanning_sets(env).front();
    const auto r = optimal_frequency_numeric(env);
    EXPECT_LE((r.lambda.weights() - best.lambda_star.weights()).cwiseAbs().maxCoeff(), 1e-4) << trial;
    EXPECT_NEAR(r.value, best.phi * best.phi, 1e-9 * best.phi * best.phi);
  }
}

TEST(OptimalFrequencyNumeric, WeightedObjectiveIsNumericOnly) {
  const Environment env(rows({{1, 0}, {0, 1}, {1, 1}}), {{1.0, vec({1, 0})}, {2.0, vec({0, 1})}});
  const auto r = optimal_frequency_numeric(env);
  EXPECT_TRUE(r.numeric_only);
  EXPECT_TRUE(r.lambda.on_simplex());
  // No other simplex point does better.
  std::mt19937_64 rng(2);
  for (int k = 0; k < 200; ++k) {
    EXPECT_GE(asymptotic_variance(env, ref::random_simplex(rng, 3)), r.value * (1 - 1e-9));
  }
}

TEST(OptimalFrequencyNumeric, RejectsNonSpanning) {
  EXPECT_THROW(optimal_frequency_numeric(Environment(rows({{0, 1}, {0, 2}}))), NotSpanning);
}

TEST(GreedyVsOptimal, TrapRatioGrows) {
  const auto rows_ = greedy_vs_optimal(fixtures::example2(), diag_prior({1, 10}), 30);
  EXPECT_DOUBLE_EQ(rows_.front().ratio, 1.0);
  EXPECT_GT(rows_.back().ratio, rows_[9].ratio);
  EXPECT_GT(rows_.back().ratio, 1.8);
  EXPECT_LT(rows_.back().ratio, 2.25);
}

TEST(GreedyVsOptimal, EfficientRegimeApproachesOne) {
  const auto rows_ = greedy_vs_optimal(fixtures::example2(), diag_prior({1, 6}), 200, {}, 1e3);
  EXPECT_FALSE(rows_.back().exact);
  EXPECT_NEAR(rows_.back().ratio, 1.0, 0.05);
}

}  // namespace
