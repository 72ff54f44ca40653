#include "covert/oracle.hpp"
#include "covert/verification.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>

namespace covert {
namespace {

TEST(EnumerateRuns, ProbabilitiesSumToOne) {
    RandomStream rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        Mdp mdp = testing::random_mdp(rng, 3, 2);
        if (trial % 2) mdp.absorbing[1] = true;
        const auto ensemble = oracle::enumerate_runs(mdp, testing::random_params(rng, 3, 2), 4);
        EXPECT_NEAR(ensemble.total_probability(), 1.0, 1e-12);
        for (const auto& e : ensemble.entries) {
            EXPECT_GT(e.probability, 0.0);
            EXPECT_TRUE(e.run.length() == 4 || mdp.is_absorbing(e.run.states.back()));
        }
    }
}

TEST(EnumerateRuns, RefusesOversizedProblems) {
    RandomStream rng(1);
    const Mdp mdp = testing::random_mdp(rng, 6, 4, 0.0);
    EXPECT_THROW(oracle::enumerate_runs(mdp, PolicyParams(6, 4), 12), oracle::EnumerationLimitError);
}

TEST(EnumerateObservations, ConditionalLawSumsToOne) {
    const auto toy = verification::three_state_toy();
    RandomStream rng(3);
    const covert::Run run = sample_trajectory(toy.mdp, toy.theta, 4, rng);
    double total = 0.0;
    for (const auto& y : oracle::enumerate_observations(toy.obs, run)) {
        EXPECT_EQ(y.obs.size(), 2 * run.length() + 1);
        total += y.probability;
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(BruteForceLikelihood, HandComputedExample) {
    // two states, deterministic swap, emissions reveal the state with prob 0.9
    Table t(2, 2);
    t(0, 1) = t(1, 0) = 1.0;
    Table e(2, 2);
    e(0, 0) = e(1, 1) = 0.9;
    e(0, 1) = e(1, 0) = 0.1;
    const Hmm hmm(t, e, {0.5, 0.5});
    const ObsSequence y = {0, 1, 0};
    const double expected = 0.5 * 0.9 * 0.9 * 0.9 + 0.5 * 0.1 * 0.1 * 0.1;
    EXPECT_NEAR(oracle::brute_force_likelihood(hmm, y), expected, 1e-15);
    EXPECT_EQ(oracle::brute_force_likelihood(hmm, ObsSequence{}), 1.0);
}

TEST(ExactKl, ZeroAtAnchorAndNonnegative) {
    RandomStream rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Mdp mdp = testing::random_mdp(rng, 3, 2);
        const auto a = testing::random_params(rng, 3, 2);
        const auto b = testing::random_params(rng, 3, 2);
        EXPECT_NEAR(oracle::exact_kl(mdp, a, a, 3), 0.0, 1e-15);
        EXPECT_GE(oracle::exact_kl(mdp, a, b, 3), -1e-12);
    }
}

TEST(ExactDetection, IdenticalPolicyIsNeverDetected) {
    const auto toy = verification::two_state_toy();
    PolicyParams nominal(toy.mdp.num_states, toy.mdp.num_actions);
    for (std::size_t i = 0; i < nominal.theta.size(); ++i) nominal.theta.data()[i] = std::log(toy.nominal.prob.data()[i]);
    EXPECT_NEAR(oracle::exact_detection_probability(toy.mdp, nominal, toy.obs, toy.nominal, 1e-9, toy.horizon), 0.0,
                1e-15);
}

TEST(ExactDetection, ThresholdChoiceKeepsMargin) {
    for (const auto& toy : verification::toy_suite()) {
        const auto choice = verification::choose_threshold(toy, 0.05, 0.95);
        EXPECT_GT(choice.margin, 1e-2) << toy.name;
        const double p = oracle::exact_detection_probability(toy.mdp, toy.theta, toy.obs, toy.nominal, toy.epsilon,
                                                             toy.horizon);
        EXPECT_GE(p, 0.05) << toy.name;
        EXPECT_LE(p, 0.95) << toy.name;
        for (double llr :
             oracle::reachable_log_likelihood_ratios(toy.mdp, toy.theta, toy.obs, toy.nominal, toy.horizon)) {
            EXPECT_GE(std::abs(llr - toy.epsilon), choice.margin - 1e-12);
        }
    }
}

TEST(FiniteDifference, QuadraticIsExact) {
    PolicyParams p(2, 2);
    p.theta(0, 0) = 1.0;
    p.theta(1, 1) = -2.0;
    const Table g = oracle::finite_difference_gradient(
        [](const PolicyParams& q) {
            double s = 0.0;
            for (double v : q.theta.data()) s += v * v;
            return s;
        },
        p);
    EXPECT_NEAR(g(0, 0), 2.0, 1e-8);
    EXPECT_NEAR(g(1, 1), -4.0, 1e-8);
    EXPECT_NEAR(g(0, 1), 0.0, 1e-8);
}

TEST(CoinMdp, QuarterGapEqualsBound) {
    const auto c = oracle::coin_mdp_check(0.25);
    EXPECT_NEAR(c.gap(), 0.25, 1e-15);
    EXPECT_NEAR(c.bound, 0.25, 1e-15);
    EXPECT_NEAR(c.best_markov_value, 1.0, 1e-15);
    EXPECT_NEAR(c.finite_memory_value, 1.25, 1e-15);
    EXPECT_NEAR(c.grid_alpha, 0.5, 1e-12);
    EXPECT_EQ(c.grid_beta, 1.0);
    EXPECT_NEAR(c.enumerated_markov_two_heads, 0.25, 1e-15);
    EXPECT_NEAR(c.enumerated_memory_two_heads, 0.25, 1e-15);
}

TEST(CoinMdp, GapNeverBelowBound) {
    for (double rho = 0.01; rho < 1.0; rho += 0.07) {
        const auto c = oracle::coin_mdp_check(rho, 0.01);
        EXPECT_GE(c.gap() - c.bound, -1e-12) << rho;
        EXPECT_NEAR(c.enumerated_markov_value, c.best_markov_value, 1e-12) << rho;
        EXPECT_NEAR(c.enumerated_memory_value, c.finite_memory_value, 1e-12) << rho;
    }
}

TEST(CoinMdp, RejectsRhoOutsideUnitInterval) {
    EXPECT_THROW(oracle::coin_mdp_check(0.0), std::invalid_argument);
    EXPECT_THROW(oracle::coin_mdp_check(1.0), std::invalid_argument);
}

TEST(Verification, UnknownSuiteThrows) {
    EXPECT_THROW(verification::run_suite("bogus"), std::invalid_argument);
}

TEST(Verification, TheoremSuitePasses) {
    const auto results = verification::run_suite("theorem1");
    EXPECT_EQ(results.size(), 12u);
    for (const auto& r : results) EXPECT_TRUE(r.passed) << r.name << " deviation " << r.deviation;
}

}  // namespace
}  // namespace covert
