#include "covert/verification.hpp"

#include "covert/covert_pg.hpp"
#include "covert/detection.hpp"
#include "covert/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace covert::verification {

namespace {

Table rows(std::initializer_list<std::initializer_list<double>> values) {
    const std::size_t r = values.size();
    const std::size_t c = values.begin()->size();
    Table t(r, c);
    std::size_t i = 0;
    for (const auto& row : values) {
        std::size_t j = 0;
        for (double v : row) t(i, j++) = v;
        ++i;
    }
    return t;
}

}  // namespace

ToyInstance two_state_toy() {
    ToyInstance toy;
    toy.name = "two-state";
    Mdp mdp(2, 2);
    mdp.p(0, 0, 0) = 0.8;
    mdp.p(0, 0, 1) = 0.2;
    mdp.p(0, 1, 0) = 0.3;
    mdp.p(0, 1, 1) = 0.7;
    mdp.p(1, 0, 0) = 0.6;
    mdp.p(1, 0, 1) = 0.4;
    mdp.p(1, 1, 0) = 0.1;
    mdp.p(1, 1, 1) = 0.9;
    mdp.reward = rows({{1.0, 0.0}, {0.5, 2.0}});
    mdp.discount = 0.9;
    toy.mdp = mdp;

    toy.obs.alphabet_size = 3;
    toy.obs.symbols = {"o0", "o1", "null"};
    toy.obs.state_emission = rows({{0.7, 0.3, 0.0}, {0.2, 0.8, 0.0}});
    toy.obs.action_emission = ObsModel::null_action_emission(2, 2, 3, 2);

    toy.nominal.prob = rows({{0.8, 0.2}, {0.5, 0.5}});
    toy.theta = PolicyParams(rows({{0.3, -0.4}, {-0.2, 0.6}}));
    toy.anchor = PolicyParams(rows({{0.1, -0.2}, {0.0, 0.4}}));
    toy.horizon = 3;
    toy.epsilon = choose_threshold(toy, 0.05, 0.95).epsilon;
    return toy;
}

ToyInstance three_state_toy() {
    ToyInstance toy;
    toy.name = "three-state";
    Mdp mdp(3, 2);
    mdp.p(0, 0, 0) = 0.5;
    mdp.p(0, 0, 1) = 0.5;
    mdp.p(0, 1, 1) = 0.6;
    mdp.p(0, 1, 2) = 0.4;
    mdp.p(1, 0, 0) = 0.7;
    mdp.p(1, 0, 1) = 0.3;
    mdp.p(1, 1, 1) = 0.2;
    mdp.p(1, 1, 2) = 0.8;
    mdp.p(2, 0, 2) = 1.0;
    mdp.p(2, 1, 2) = 1.0;
    mdp.absorbing[2] = true;
    mdp.reward = rows({{0.2, -0.1}, {0.4, 1.5}, {0.0, 0.0}});
    mdp.discount = 0.95;
    toy.mdp = mdp;

    toy.obs.alphabet_size = 2;
    toy.obs.symbols = {"o0", "o1"};
    toy.obs.state_emission = rows({{0.8, 0.2}, {0.3, 0.7}, {0.5, 0.5}});
    toy.obs.action_emission = rows({{0.75, 0.25}, {0.25, 0.75}, {0.6, 0.4}, {0.1, 0.9}, {0.5, 0.5}, {0.5, 0.5}});

    toy.nominal.prob = rows({{0.9, 0.1}, {0.7, 0.3}, {0.5, 0.5}});
    toy.theta = PolicyParams(rows({{-0.5, 0.5}, {0.2, 0.4}, {0.0, 0.0}}));
    toy.anchor = PolicyParams(rows({{-0.2, 0.3}, {0.3, 0.1}, {0.0, 0.0}}));
    toy.horizon = 4;
    toy.epsilon = choose_threshold(toy, 0.05, 0.95).epsilon;
    return toy;
}

std::vector<ToyInstance> toy_suite() { return {two_state_toy(), three_state_toy()}; }

ThresholdChoice choose_threshold(const ToyInstance& toy, double low, double high) {
    // exact law of the log-likelihood ratio under M_theta
    const Hmm hmm_theta = build_hmm(toy.mdp, toy.theta, toy.obs);
    const Hmm hmm_nominal = build_hmm(toy.mdp, toy.nominal, toy.obs);
    std::map<ObsSequence, double> cache;
    std::map<double, double> law;
    for (const auto& e : oracle::enumerate_runs(toy.mdp, toy.theta, toy.horizon).entries) {
        for (const auto& y : oracle::enumerate_observations(toy.obs, e.run)) {
            auto it = cache.find(y.obs);
            if (it == cache.end()) it = cache.emplace(y.obs, log_likelihood_ratio(y.obs, hmm_theta, hmm_nominal)).first;
            law[it->second] += e.probability * y.probability;
        }
    }
    std::vector<std::pair<double, double>> points(law.begin(), law.end());
    ThresholdChoice best{0.0, -1.0};
    double above = 0.0;
    for (const auto& [v, p] : points) above += p;
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        above -= points[i].second;  // mass strictly above points[i]
        const double lo = points[i].first;
        const double hi = points[i + 1].first;
        if (!std::isfinite(lo) || !std::isfinite(hi)) continue;
        if (above < low || above > high) continue;
        const double margin = 0.5 * (hi - lo);
        if (margin > best.margin) best = {lo + margin, margin};
    }
    if (best.margin < 0.0) throw std::runtime_error("no threshold with detection in the requested range");
    return best;
}

double relative_deviation(const Table& estimate, const Table& reference, double abs_floor) {
    if (!estimate.same_shape(reference)) throw std::invalid_argument("shape mismatch");
    const double scale = reference.max_abs();
    const double err = (estimate - reference).max_abs();
    return scale < abs_floor ? err : err / scale;
}

std::vector<std::string> suite_names() { return {"oracle", "gradients", "theorem1", "all"}; }

namespace {

void oracle_checks(std::vector<CheckResult>& out) {
    for (const auto& toy : toy_suite()) {
        const std::string tag = toy.name + ": ";

        const double mass = oracle::enumerate_runs(toy.mdp, toy.theta, toy.horizon).total_probability();
        out.push_back({tag + "run ensemble sums to one", std::abs(mass - 1.0) <= 1e-12, std::abs(mass - 1.0), 1e-12});

        // forward recursion against hidden-path enumeration
        const Hmm hmm = build_hmm(toy.mdp, toy.theta, toy.obs);
        RandomStream rng(11);
        double worst = 0.0;
        for (int i = 0; i < 20; ++i) {
            const Run run = sample_trajectory(toy.mdp, toy.theta, std::min<std::size_t>(toy.horizon, 3), rng);
            const ObsSequence y = sample_observation(toy.obs, run, rng);
            const double exact = oracle::brute_force_likelihood(hmm, y);
            const double forward = std::exp(log_likelihood(hmm, y));
            worst = std::max(worst, std::abs(forward - exact) / exact);
        }
        out.push_back({tag + "forward likelihood matches path enumeration", worst <= 1e-10, worst, 1e-10});

        // Monte Carlo detection probability against exact enumeration
        const double exact_det =
            oracle::exact_detection_probability(toy.mdp, toy.theta, toy.obs, toy.nominal, toy.epsilon, toy.horizon);
        const Hmm nominal = build_hmm(toy.mdp, toy.nominal, toy.obs);
        RandomStream mc(23);
        const BatchSample batch = sample_batch(toy.mdp, toy.obs, toy.theta, 20000, toy.horizon, mc, &nominal);
        const auto ind = detection_indicators(batch, hmm, nominal, toy.epsilon);
        std::vector<double> vals(ind.begin(), ind.end());
        const Estimate det = mean_and_standard_error(vals);
        const double z = std::abs(det.mean - exact_det) / det.std_error;
        out.push_back({tag + "detection estimate within 4 standard errors", z <= 4.0, z, 4.0});

        // Monte Carlo KL under the anchor against exact enumeration
        const double exact_kl = oracle::exact_kl(toy.mdp, toy.anchor, toy.theta, toy.horizon);
        RandomStream kl_rng(29);
        const BatchSample anchor_batch = sample_batch(toy.mdp, toy.obs, toy.anchor, 20000, toy.horizon, kl_rng);
        std::vector<double> terms;
        for (const auto& pair : anchor_batch.pairs) {
            terms.push_back(pair.anchor_log_prob - run_log_probability(pair.run, toy.theta));
        }
        const Estimate kl = mean_and_standard_error(terms);
        const double zk = std::abs(kl.mean - exact_kl) / kl.std_error;
        out.push_back({tag + "KL estimate within 4 standard errors", zk <= 4.0, zk, 4.0});
    }
}

void gradient_checks(std::vector<CheckResult>& out) {
    constexpr double tol = 1e-3;
    for (const auto& toy : toy_suite()) {
        const std::string tag = toy.name + ": ";
        const PolicyParams theta = toy.theta;

        const Table value_est = oracle::expected_value_gradient(toy.mdp, theta, toy.anchor, toy.horizon);
        const Table value_fd = oracle::finite_difference_gradient(
            [&](const PolicyParams& p) { return oracle::exact_value(toy.mdp, p, toy.horizon); }, theta);
        const double dv = relative_deviation(value_est, value_fd);
        out.push_back({tag + "value gradient matches finite differences", dv <= tol, dv, tol});

        const Table kl_est = oracle::expected_kl_gradient(toy.mdp, theta, toy.anchor, toy.horizon);
        const Table kl_fd = oracle::finite_difference_gradient(
            [&](const PolicyParams& p) { return oracle::exact_kl(toy.mdp, toy.anchor, p, toy.horizon); }, theta);
        const double dk = relative_deviation(kl_est, kl_fd);
        out.push_back({tag + "KL gradient matches finite differences", dk <= tol, dk, tol});

        const Table c_est = oracle::expected_constraint_gradient(toy.mdp, theta, toy.anchor, toy.obs, toy.nominal,
                                                                 toy.epsilon, toy.horizon);
        const Table c_fd = oracle::finite_difference_gradient(
            [&](const PolicyParams& p) {
                return -oracle::exact_detection_probability(toy.mdp, p, toy.obs, toy.nominal, toy.epsilon,
                                                            toy.horizon);
            },
            theta);
        const double dc = relative_deviation(c_est, c_fd);
        out.push_back({tag + "constraint gradient matches finite differences", dc <= tol, dc, tol});
    }
}

void theorem_checks(std::vector<CheckResult>& out) {
    // gap and bound agree analytically; allow floating-point rounding only
    constexpr double rounding = 1e-12;
    for (double rho : {0.04, 0.25, 0.49}) {
        const auto c = oracle::coin_mdp_check(rho);
        const std::string tag = "rho=" + std::to_string(rho).substr(0, 4) + ": ";
        const double slack = c.gap() - c.bound;
        out.push_back({tag + "memory gap reaches the bound", slack >= -rounding, slack, rounding});
        const double grid_err = std::max(std::abs(c.grid_alpha - std::sqrt(rho)), std::abs(c.grid_beta - 1.0));
        out.push_back({tag + "grid maximizer at alpha = sqrt(rho), beta = 1", grid_err <= 1e-3 + 1e-12, grid_err, 1e-3});
        const double enum_err = std::max(std::abs(c.enumerated_markov_value - c.best_markov_value),
                                         std::abs(c.enumerated_memory_value - c.finite_memory_value));
        out.push_back({tag + "enumerated values match closed forms", enum_err <= 1e-12, enum_err, 1e-12});
        const double excess = std::max(c.enumerated_markov_two_heads, c.enumerated_memory_two_heads) - rho;
        out.push_back({tag + "both policies satisfy the two-heads constraint", excess <= rounding, excess, rounding});
    }
}

}  // namespace

std::vector<CheckResult> run_suite(const std::string& suite) {
    const auto names = suite_names();
    if (std::find(names.begin(), names.end(), suite) == names.end()) {
        throw std::invalid_argument("unknown suite: " + suite);
    }
    std::vector<CheckResult> out;
    if (suite == "oracle" || suite == "all") oracle_checks(out);
    if (suite == "gradients" || suite == "all") gradient_checks(out);
    if (suite == "theorem1" || suite == "all") theorem_checks(out);
    return out;
}

}  // namespace covert::verification
