// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include "covert/covert_pg.hpp"
#include "covert/detection.hpp"
#include "covert/experiment.hpp"
#include "covert/gridworld.hpp"
#include "covert/oracle.hpp"
#include "covert/verification.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>

using namespace covert;

namespace {

struct Verdict {
    bool passed = false;
    std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

// Forward recursion against hidden-path enumeration on random small HMMs.
Verdict forward_oracle() {
    RandomStream rng(2024);
    double worst = 0.0;
    int compared = 0;
    bool support_ok = true;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 1 + trial % 4;
        const std::size_t alphabet = 1 + (trial / 4) % 3;
        const Hmm hmm = testing::random_hmm(rng, n, alphabet);
        ObsSequence y(1 + trial % 7);
        for (auto& o : y) o = static_cast<Symbol>(rng.uniform() * alphabet);
        const double exact = oracle::brute_force_likelihood(hmm, y);
        const double ll = log_likelihood(hmm, y);
        if (exact == 0.0) {
            support_ok &= ll == kNegInf;
            continue;
        }
        worst = std::max(worst, std::abs(ll - std::log(exact)));
        ++compared;
    }
    return {support_ok && compared >= 20 && worst <= 1e-10,
            fmt("%.0f HMMs compared, max |ln error| %.2e (tol 1e-10)", compared, worst)};
}

// Exact expectations of the three estimators against central differences.
Verdict gradient_oracle() {
    const auto toy = verification::three_state_toy();
    const auto threshold = verification::choose_threshold(toy, 0.05, 0.95);
    struct Pair {
        const char* name;
        Table estimate;
        Table reference;
    };
    std::vector<Pair> pairs;
    pairs.push_back({"value", oracle::expected_value_gradient(toy.mdp, toy.theta, toy.anchor, toy.horizon),
                     oracle::finite_difference_gradient(
                         [&](const PolicyParams& p) { return oracle::exact_value(toy.mdp, p, toy.horizon); },
                         toy.theta)});
    pairs.push_back({"kl", oracle::expected_kl_gradient(toy.mdp, toy.theta, toy.anchor, toy.horizon),
                     oracle::finite_difference_gradient(
                         [&](const PolicyParams& p) { return oracle::exact_kl(toy.mdp, toy.anchor, p, toy.horizon); },
                         toy.theta)});
    pairs.push_back({"constraint",
                     oracle::expected_constraint_gradient(toy.mdp, toy.theta, toy.anchor, toy.obs, toy.nominal,
                                                          toy.epsilon, toy.horizon),
                     oracle::finite_difference_gradient(
                         [&](const PolicyParams& p) {
                             return -oracle::exact_detection_probability(toy.mdp, p, toy.obs, toy.nominal,
                                                                         toy.epsilon, toy.horizon);
                         },
                         toy.theta)});
    bool ok = true;
    std::string detail;
    for (const auto& p : pairs) {
        double worst_rel = 0.0;
        for (std::size_t i = 0; i < p.reference.size(); ++i) {
            const double ref = p.reference.data()[i];
            const double err = std::abs(p.estimate.data()[i] - ref);
            const bool entry_ok = err <= 1e-3 * std::abs(ref) || err <= 1e-6;
            ok &= entry_ok;
            if (std::abs(ref) > 1e-6) worst_rel = std::max(worst_rel, err / std::abs(ref));
        }
        detail += std::string(p.name) + fmt(" rel %.1e; ", worst_rel);
    }
    detail += fmt("epsilon %.4f, margin %.3f", toy.epsilon, threshold.margin);
    return {ok, detail};
}

Verdict coin_theorem() {
    bool ok = true;
    std::string detail;
    for (double rho : {0.04, 0.25, 0.49}) {
        const auto c = oracle::coin_mdp_check(rho);
        // gap and bound are equal analytically; allow only floating-point rounding
        ok &= c.gap() - c.bound >= -1e-12;
        ok &= std::abs(c.grid_alpha - std::sqrt(rho)) <= 1e-3 + 1e-12 && c.grid_beta == 1.0;
        detail += fmt("rho %.2f gap %.6f bound %.6f; ", rho, c.gap(), c.bound);
    }
    const auto quarter = oracle::coin_mdp_check(0.25);
    ok &= std::abs(quarter.gap() - 0.25) <= 1e-12 && std::abs(quarter.bound - 0.25) <= 1e-12;
    return {ok, detail};
}

// 20 seeded repetitions at N = 1e5 per toy instance and estimator.
Verdict monte_carlo_consistency() {
    constexpr std::size_t N = 100000;
    constexpr int reps = 20;
    bool ok = true;
    std::string detail;
    for (const auto& toy : verification::toy_suite()) {
        const double exact_det =
            oracle::exact_detection_probability(toy.mdp, toy.theta, toy.obs, toy.nominal, toy.epsilon, toy.horizon);
        const double exact_kl = oracle::exact_kl(toy.mdp, toy.anchor, toy.theta, toy.horizon);
        const Hmm hmm_theta = build_hmm(toy.mdp, toy.theta, toy.obs);
        const Hmm hmm_nominal = build_hmm(toy.mdp, toy.nominal, toy.obs);
        int det_hits = 0, kl_hits = 0;
        for (int r = 0; r < reps; ++r) {
            RandomStream rng(substream_seed(1000, static_cast<std::uint64_t>(r)));
            std::vector<ObsSequence> ys;
            ys.reserve(N);
            for (std::size_t i = 0; i < N; ++i) {
                ys.push_back(sample_observation(toy.obs, sample_trajectory(toy.mdp, toy.theta, toy.horizon, rng), rng));
            }
            const Estimate det = estimate_detection_probability(ys, hmm_theta, hmm_nominal, toy.epsilon);
            if (std::abs(det.mean - exact_det) <= 3.0 * det.std_error) ++det_hits;

            const BatchSample batch = sample_batch(toy.mdp, toy.obs, toy.anchor, N, toy.horizon, rng);
            const double kl = kl_estimate(batch, toy.theta, toy.anchor);
            std::vector<double> terms;
            terms.reserve(N);
            for (const auto& p : batch.pairs) terms.push_back(p.anchor_log_prob - run_log_probability(p.run, toy.theta));
            const Estimate spread = mean_and_standard_error(terms);
            if (std::abs(kl - exact_kl) <= 3.0 * spread.std_error) ++kl_hits;
        }
        ok &= det_hits >= 19 && kl_hits >= 19;
        detail += toy.name + fmt(": detection %.0f/20, KL %.0f/20; ", det_hits, kl_hits);
    }
    return {ok, detail};
}

Verdict mini_gridworld() {
    const Experiment ex = resolve_experiment(io::json{{"preset", "mini-5x5"}});
    bool ok = ex.grid && ex.grid->spec.rows == 5 && ex.grid->spec.cols == 5 && ex.grid->sensors.size() == 2 &&
              ex.detection.alpha == 0.2 && ex.detection.epsilon == 3.0 && ex.hyper.max_outer_iterations <= 150;
    const TrainResult r =
        run_covert_pg(ex.mdp, ex.obs, ex.nominal_policy, ex.initial_theta, ex.detection, ex.hyper, ex.seed);
    const auto summary = evaluate_policy(ex, r.theta, ex.eval_samples, ex.seed + 1000003);
    const double soft_value = policy_value(ex.mdp, softmax_policy(ex.initial_theta), ex.hyper.horizon);
    const double final_value = policy_value(ex.mdp, softmax_policy(r.theta), ex.hyper.horizon);
    const double first = r.trace.rows.front().detection;
    const double last = r.trace.rows.back().detection;
    ok &= !r.trace.rows.empty() && r.trace.rows.size() <= 150;
    ok &= summary.detection.mean <= 0.25;
    ok &= last <= 0.5 * first;
    ok &= final_value >= 0.6 * soft_value;
    return {ok, fmt("detection %.3f (trace %.3f -> %.3f); ", summary.detection.mean, first, last) +
                    fmt("value %.3f vs soft optimum %.3f; ", final_value, soft_value) +
                    fmt("%.0f iterations", static_cast<double>(r.trace.rows.size()))};
}

Verdict trainer_mechanics() {
    bool ok = true;
    RandomStream rng(77);
    for (int i = 0; i < 10000; ++i) {
        const double lambda = 50.0 * rng.uniform();
        const double next = update_lambda(lambda, rng.uniform(), 200.0 * rng.uniform() - 100.0);
        ok &= next >= 0.0;
    }
    ok &= update_lambda(0.5, 1.0, 1.0) == 0.0;
    const double d = 0.01;
    ok &= update_beta(1.0, d / 1.5, d) == 0.5 && update_beta(1.0, 1.5 * d, d) == 2.0 && update_beta(1.0, d, d) == 1.0;
    ok &= update_beta(1.0, std::nextafter(d / 1.5, 1.0), d) == 1.0;
    ok &= update_beta(1.0, std::nextafter(1.5 * d, 0.0), d) == 1.0;
    const Mdp mdp = testing::random_mdp(rng, 5, 3);
    int weights = 0;
    for (int i = 0; i < 200; ++i) {
        const auto theta = testing::random_params(rng, 5, 3, 10.0);
        ok &= importance_weight(sample_trajectory(mdp, theta, 20, rng), theta, theta) == 1.0;
        ++weights;
    }
    return {ok, fmt("projection, beta bands, %.0f unit importance weights", weights)};
}

Verdict sensor_formula() {
    const Experiment ex = resolve_experiment(io::json{{"preset", "full-10x10-b010"}});
    const auto& grid = *ex.grid;
    const Sensor& sensor = grid.sensors[1];
    const double p = sensor_state_probability(sensor, {6, 3}, grid.spec);
    bool ok = sensor.location == Cell{6, 4} && grid.spec.is_dark_green({6, 3}) && std::abs(p - 0.55) <= 1e-15;
    bool zero_outside = true;
    for (StateId s = 0; s < grid.spec.num_cells(); ++s) {
        const Cell c = grid.spec.cell_of(s);
        for (const auto& sn : grid.sensors) {
            if (!sn.covers(c)) zero_outside &= sensor_state_probability(sn, c, grid.spec) == 0.0;
        }
    }
    return {ok && zero_outside, fmt("(6,3) under sensor (6,4): %.17g", p)};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        std::function<Verdict()> run;
        double time_limit;  // seconds
    };
    const std::vector<Criterion> criteria = {
        {1, "forward-algorithm oracle equivalence", forward_oracle, 5.0},
        {2, "gradient estimators match finite differences", gradient_oracle, 60.0},
        {3, "coin MDP memory gap", coin_theorem, 5.0},
        {4, "Monte Carlo consistency", monte_carlo_consistency, 120.0},
        {5, "end-to-end mini gridworld", mini_gridworld, 900.0},
        {6, "primal-dual update mechanics", trainer_mechanics, 60.0},
        {7, "sensor formula", sensor_formula, 60.0},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (secs > c.time_limit) {
            v.passed = false;
            v.detail += fmt("; over the %.0f s budget", c.time_limit);
        }
        if (!v.passed) ++failures;
        std::printf("CRITERION %d %s  %s  [%s] (%.2f s)\n", c.id, v.passed ? "PASS" : "FAIL", c.name,
                    v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
