#include "covert/hmm.hpp"
#include "covert/oracle.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>

namespace covert {
namespace {

ObsSequence random_sequence(RandomStream& rng, std::size_t length, std::size_t alphabet) {
    ObsSequence y(length);
    for (auto& o : y) o = static_cast<Symbol>(rng.uniform() * alphabet);
    return y;
}

TEST(Forward, MatchesPathEnumerationOnRandomModels) {
    RandomStream rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + trial % 4;
        const std::size_t alphabet = 1 + (trial / 4) % 3;
        const Hmm hmm = testing::random_hmm(rng, n, alphabet);
        const auto y = random_sequence(rng, 1 + trial % 7, alphabet);
        const double exact = oracle::brute_force_likelihood(hmm, y);
        const double ll = log_likelihood(hmm, y);
        if (exact == 0.0) {
            EXPECT_EQ(ll, kNegInf);
        } else {
            EXPECT_NEAR(std::exp(ll), exact, 1e-12);
            EXPECT_NEAR(ll, std::log(exact), 1e-9);
        }
    }
}

TEST(Forward, SequenceProbabilitiesSumToOne) {
    RandomStream rng(7);
    const Hmm hmm = testing::random_hmm(rng, 3, 2);
    double total = 0.0;
    for (unsigned bits = 0; bits < 32; ++bits) {
        ObsSequence y;
        for (int i = 0; i < 5; ++i) y.push_back((bits >> i) & 1u);
        total += std::exp(log_likelihood(hmm, y));
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
}

TEST(Forward, EmptySequenceHasLogLikelihoodZero) {
    RandomStream rng(1);
    const Hmm hmm = testing::random_hmm(rng, 2, 2);
    EXPECT_EQ(log_likelihood(hmm, ObsSequence{}), 0.0);
}

TEST(Forward, ImpossibleSequenceIsNegativeInfinity) {
    Table t(1, 1, 1.0);
    Table e(1, 2);
    e(0, 0) = 1.0;
    const Hmm hmm(t, e, {1.0});
    EXPECT_EQ(log_likelihood(hmm, ObsSequence{0, 1}), kNegInf);
    EXPECT_EQ(log_likelihood(hmm, ObsSequence{0, 0, 0}), 0.0);
}

TEST(Forward, RejectsSymbolOutsideAlphabet) {
    RandomStream rng(1);
    const Hmm hmm = testing::random_hmm(rng, 2, 2);
    EXPECT_THROW(log_likelihood(hmm, ObsSequence{0, 2}), std::out_of_range);
}

TEST(Forward, LongSequenceStaysFinite) {
    Table t(2, 2, 0.5);
    Table e(2, 2, 0.5);
    const Hmm fair(t, e, {0.5, 0.5});
    const ObsSequence y(5000, 1);
    EXPECT_NEAR(log_likelihood(fair, y), 5000 * std::log(0.5), 1e-8);
}

TEST(DenseConstructor, RejectsNonStochasticRows) {
    Table t(2, 2, 0.6);
    Table e(2, 1, 1.0);
    EXPECT_THROW(Hmm(t, e, {1.0, 0.0}), InvalidModel);
}

TEST(BuildHmm, AlternatesDecisionAndNatureStates) {
    RandomStream rng(12);
    const Mdp mdp = testing::random_mdp(rng, 3, 2);
    const auto params = testing::random_params(rng, 3, 2);
    const auto obs = testing::random_obs(rng, 3, 2, 2);
    const Hmm hmm = build_hmm(mdp, params, obs);
    const auto policy = softmax_policy(params);
    ASSERT_EQ(hmm.num_states(), 3u + 6u);
    for (StateId s = 0; s < 3; ++s) {
        EXPECT_EQ(hmm.initial_probability(decision_state(s)), s == mdp.initial_state ? 1.0 : 0.0);
        for (ActionId a = 0; a < 2; ++a) {
            const auto sa = nature_state(mdp, s, a);
            EXPECT_NEAR(hmm.transition_probability(decision_state(s), sa), policy.prob(s, a), 1e-15);
            for (StateId n = 0; n < 3; ++n) {
                EXPECT_NEAR(hmm.transition_probability(sa, decision_state(n)), mdp.p(s, a, n), 1e-15);
            }
            for (Symbol o = 0; o < 2; ++o) {
                EXPECT_NEAR(hmm.emission_probability(sa, o), obs.action_emission(s * 2 + a, o), 1e-15);
            }
        }
    }
    const Table dense = hmm.dense_transition();
    for (std::size_t i = 0; i < dense.rows(); ++i) {
        double total = 0.0;
        for (double v : dense.row(i)) total += v;
        EXPECT_NEAR(total, 1.0, 1e-12);
    }
}

TEST(BuildHmm, RejectsMismatchedDimensions) {
    RandomStream rng(12);
    const Mdp mdp = testing::random_mdp(rng, 3, 2);
    const auto obs = testing::random_obs(rng, 2, 2, 2);
    EXPECT_THROW(build_hmm(mdp, PolicyParams(3, 2), obs), InvalidModel);
    EXPECT_THROW(build_hmm(mdp, PolicyParams(3, 3), testing::random_obs(rng, 3, 2, 2)), InvalidModel);
}

// Without absorbing states, P(y) under the policy-induced HMM equals the sum
// over runs of P(x) P(y | x).
TEST(BuildHmm, LikelihoodMatchesRunEnumeration) {
    RandomStream rng(33);
    for (int trial = 0; trial < 10; ++trial) {
        const Mdp mdp = testing::random_mdp(rng, 2, 2);
        const auto params = testing::random_params(rng, 2, 2);
        const auto obs = testing::random_obs(rng, 2, 2, 2);
        const Hmm hmm = build_hmm(mdp, params, obs);
        std::map<ObsSequence, double> law;
        for (const auto& e : oracle::enumerate_runs(mdp, params, 2).entries) {
            for (const auto& y : oracle::enumerate_observations(obs, e.run)) law[y.obs] += e.probability * y.probability;
        }
        for (const auto& [y, p] : law) EXPECT_NEAR(std::exp(log_likelihood(hmm, y)), p, 1e-12);
    }
}

TEST(SampleObservation, HasLengthTwoTPlusOne) {
    RandomStream rng(2);
    const Mdp mdp = testing::random_mdp(rng, 3, 2);
    const auto obs = testing::random_obs(rng, 3, 2, 3);
    for (std::size_t h = 0; h < 6; ++h) {
        const covert::Run run = sample_trajectory(mdp, PolicyParams(3, 2), h, rng);
        EXPECT_EQ(sample_observation(obs, run, rng).size(), 2 * run.length() + 1);
    }
}

TEST(LogSumExp, HandlesInfinitiesAndLargeValues) {
    EXPECT_EQ(log_sum_exp(std::vector<double>{}), kNegInf);
    EXPECT_EQ(log_sum_exp(std::vector<double>{kNegInf, kNegInf}), kNegInf);
    EXPECT_NEAR(log_sum_exp(std::vector<double>{1000.0, 1000.0}), 1000.0 + std::log(2.0), 1e-12);
    EXPECT_NEAR(log_sum_exp(std::vector<double>{kNegInf, 0.0}), 0.0, 1e-15);
}

}  // namespace
}  // namespace covert
