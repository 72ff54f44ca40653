#include "covert/oracle.hpp"

#include "covert/covert_pg.hpp"
#include "covert/detection.hpp"

#include <cmath>
#include <map>

namespace covert::oracle {

double EnumeratedEnsemble::total_probability() const {
    double total = 0.0;
    for (const auto& e : entries) total += e.probability;
    return total;
}

namespace {

void extend(const Mdp& mdp, const std::vector<PolicyTable>& schedule, std::size_t horizon, Run& run,
            double prob, EnumeratedEnsemble& out) {
    const StateId s = run.states.back();
    if (run.length() == horizon || mdp.is_absorbing(s)) {
        if (out.entries.size() >= kEnumerationLimit) {
            throw EnumerationLimitError("run enumeration exceeds the entry limit");
        }
        out.entries.push_back({run, prob});
        return;
    }
    const auto& policy = schedule[std::min(run.length(), schedule.size() - 1)];
    for (ActionId a = 0; a < mdp.num_actions; ++a) {
        const double pa = policy.prob(s, a);
        if (pa == 0.0) continue;
        auto row = mdp.successors(s, a);
        for (StateId next = 0; next < mdp.num_states; ++next) {
            if (row[next] == 0.0) continue;
            run.actions.push_back(a);
            run.states.push_back(next);
            extend(mdp, schedule, horizon, run, prob * pa * row[next], out);
            run.actions.pop_back();
            run.states.pop_back();
        }
    }
}

}  // namespace

EnumeratedEnsemble enumerate_runs(const Mdp& mdp, const std::vector<PolicyTable>& schedule, std::size_t horizon) {
    require_valid(mdp);
    if (schedule.empty()) throw std::invalid_argument("empty policy schedule");
    EnumeratedEnsemble out;
    Run run;
    run.states.push_back(mdp.initial_state);
    extend(mdp, schedule, horizon, run, 1.0, out);
    return out;
}

EnumeratedEnsemble enumerate_runs(const Mdp& mdp, const PolicyTable& policy, std::size_t horizon) {
    return enumerate_runs(mdp, std::vector<PolicyTable>{policy}, horizon);
}

EnumeratedEnsemble enumerate_runs(const Mdp& mdp, const PolicyParams& params, std::size_t horizon) {
    return enumerate_runs(mdp, softmax_policy(params), horizon);
}

std::vector<WeightedObservation> enumerate_observations(const ObsModel& obs, const Run& run) {
    const std::size_t A = obs.num_actions();
    // emission rows in sequence order
    std::vector<std::span<const double>> rows;
    for (std::size_t t = 0; t < run.length(); ++t) {
        rows.push_back(obs.state_emission.row(run.states[t]));
        rows.push_back(obs.action_emission.row(run.states[t] * A + run.actions[t]));
    }
    rows.push_back(obs.state_emission.row(run.states.back()));

    std::vector<WeightedObservation> out{{{}, 1.0}};
    for (auto row : rows) {
        std::vector<WeightedObservation> next;
        for (const auto& partial : out) {
            for (Symbol o = 0; o < row.size(); ++o) {
                if (row[o] == 0.0) continue;
                WeightedObservation w = partial;
                w.obs.push_back(o);
                w.probability *= row[o];
                next.push_back(std::move(w));
            }
        }
        if (next.size() > kEnumerationLimit) throw EnumerationLimitError("observation enumeration exceeds the limit");
        out = std::move(next);
    }
    return out;
}

double brute_force_likelihood(const Hmm& hmm, std::span<const Symbol> y) {
    const std::size_t n = hmm.num_states();
    if (y.empty()) return 1.0;
    if (std::pow(static_cast<double>(n), static_cast<double>(y.size())) > 1e8) {
        throw EnumerationLimitError("hidden path enumeration exceeds the limit");
    }
    const Table transition = hmm.dense_transition();
    std::vector<std::size_t> path(y.size(), 0);
    double total = 0.0;
    while (true) {
        double p = hmm.initial_probability(path[0]) * hmm.emission_probability(path[0], y[0]);
        for (std::size_t t = 1; t < y.size() && p > 0.0; ++t) {
            p *= transition(path[t - 1], path[t]) * hmm.emission_probability(path[t], y[t]);
        }
        total += p;
        // odometer increment over paths
        std::size_t k = 0;
        while (k < path.size() && ++path[k] == n) path[k++] = 0;
        if (k == path.size()) break;
    }
    return total;
}

double trajectory_log_probability(const Mdp& mdp, const PolicyParams& params, const Run& run) {
    double lp = 0.0;
    for (std::size_t t = 0; t < run.length(); ++t) {
        lp += log_policy_probability(params, run.states[t], run.actions[t]);
        lp += std::log(mdp.p(run.states[t], run.actions[t], run.states[t + 1]));
    }
    return lp;
}

double exact_value(const Mdp& mdp, const PolicyParams& params, std::size_t horizon) {
    double v = 0.0;
    for (const auto& e : enumerate_runs(mdp, params, horizon).entries) v += e.probability * discounted_return(e.run, mdp);
    return v;
}

double exact_kl(const Mdp& mdp, const PolicyParams& anchor, const PolicyParams& theta, std::size_t horizon) {
    double kl = 0.0;
    for (const auto& e : enumerate_runs(mdp, anchor, horizon).entries) {
        kl += e.probability *
              (trajectory_log_probability(mdp, anchor, e.run) - trajectory_log_probability(mdp, theta, e.run));
    }
    return kl;
}

namespace {

void guard_observation_space(const ObsModel& obs, std::size_t horizon) {
    const double size = std::pow(static_cast<double>(obs.alphabet_size), static_cast<double>(2 * horizon + 1));
    if (size > static_cast<double>(kEnumerationLimit)) {
        throw EnumerationLimitError("observation space exceeds the enumeration limit");
    }
}

/// Caches ln P(y; M_theta) - ln P(y; M_0) per observation sequence.
class RatioCache {
public:
    RatioCache(const Hmm& theta, const Hmm& nominal) : theta_(theta), nominal_(nominal) {}

    double operator()(const ObsSequence& y) {
        auto it = cache_.find(y);
        if (it != cache_.end()) return it->second;
        const double llr = log_likelihood_ratio(y, theta_, nominal_);
        cache_.emplace(y, llr);
        return llr;
    }

    const std::map<ObsSequence, double>& entries() const { return cache_; }

private:
    const Hmm& theta_;
    const Hmm& nominal_;
    std::map<ObsSequence, double> cache_;
};

}  // namespace

double exact_detection_probability(const Mdp& mdp, const PolicyParams& params, const ObsModel& obs,
                                   const PolicyTable& nominal_policy, double epsilon, std::size_t horizon) {
    guard_observation_space(obs, horizon);
    const Hmm hmm_theta = build_hmm(mdp, params, obs);
    const Hmm hmm_nominal = build_hmm(mdp, nominal_policy, obs);
    RatioCache llr(hmm_theta, hmm_nominal);
    double total = 0.0;
    for (const auto& e : enumerate_runs(mdp, params, horizon).entries) {
        for (const auto& y : enumerate_observations(obs, e.run)) {
            if (detection_condition(llr(y.obs), epsilon)) total += e.probability * y.probability;
        }
    }
    return total;
}

std::vector<double> reachable_log_likelihood_ratios(const Mdp& mdp, const PolicyParams& params,
                                                    const ObsModel& obs, const PolicyTable& nominal_policy,
                                                    std::size_t horizon) {
    guard_observation_space(obs, horizon);
    const Hmm hmm_theta = build_hmm(mdp, params, obs);
    const Hmm hmm_nominal = build_hmm(mdp, nominal_policy, obs);
    RatioCache llr(hmm_theta, hmm_nominal);
    for (const auto& e : enumerate_runs(mdp, params, horizon).entries) {
        for (const auto& y : enumerate_observations(obs, e.run)) llr(y.obs);
    }
    std::vector<double> out;
    for (const auto& [y, v] : llr.entries()) out.push_back(v);
    return out;
}

Table finite_difference_gradient(const Objective& objective, const PolicyParams& params, double step) {
    Table grad(params.num_states(), params.num_actions());
    PolicyParams probe = params;
    for (std::size_t i = 0; i < probe.theta.size(); ++i) {
        const double original = probe.theta.data()[i];
        probe.theta.data()[i] = original + step;
        const double up = objective(probe);
        probe.theta.data()[i] = original - step;
        const double down = objective(probe);
        probe.theta.data()[i] = original;
        grad.data()[i] = (up - down) / (2.0 * step);
    }
    return grad;
}

namespace {

BatchSample singleton(const Run& run, const ObsSequence& y, const PolicyParams& anchor) {
    BatchSample batch;
    batch.pairs.push_back({run, y, run_log_probability(run, anchor)});
    return batch;
}

}  // namespace

Table expected_value_gradient(const Mdp& mdp, const PolicyParams& theta, const PolicyParams& anchor,
                              std::size_t horizon) {
    Table grad(theta.num_states(), theta.num_actions());
    for (const auto& e : enumerate_runs(mdp, anchor, horizon).entries) {
        grad.add_scaled(value_gradient(singleton(e.run, {}, anchor), theta, anchor, mdp), e.probability);
    }
    return grad;
}

Table expected_kl_gradient(const Mdp& mdp, const PolicyParams& theta, const PolicyParams& anchor,
                           std::size_t horizon) {
    Table grad(theta.num_states(), theta.num_actions());
    for (const auto& e : enumerate_runs(mdp, anchor, horizon).entries) {
        grad.add_scaled(kl_gradient(singleton(e.run, {}, anchor), theta, anchor), e.probability);
    }
    return grad;
}

Table expected_constraint_gradient(const Mdp& mdp, const PolicyParams& theta, const PolicyParams& anchor,
                                   const ObsModel& obs, const PolicyTable& nominal_policy, double epsilon,
                                   std::size_t horizon) {
    guard_observation_space(obs, horizon);
    const Hmm hmm_theta = build_hmm(mdp, theta, obs);
    const Hmm hmm_nominal = build_hmm(mdp, nominal_policy, obs);
    RatioCache llr(hmm_theta, hmm_nominal);
    Table grad(theta.num_states(), theta.num_actions());
    for (const auto& e : enumerate_runs(mdp, anchor, horizon).entries) {
        // P(y|x) 1{y in U} summed over y: the indicator enters linearly.
        double detected_mass = 0.0;
        for (const auto& y : enumerate_observations(obs, e.run)) {
            if (detection_condition(llr(y.obs), epsilon)) detected_mass += y.probability;
        }
        if (detected_mass == 0.0) continue;
        const char one = 1;
        grad.add_scaled(constraint_gradient(singleton(e.run, {}, anchor), theta, anchor, std::span(&one, 1)),
                        e.probability * detected_mass);
    }
    return grad;
}

Mdp coin_mdp() {
    enum : StateId { one = 0, two = 1 };
    enum : ActionId { heads = 0, tails = 1 };
    Mdp mdp(2, 2);
    mdp.p(one, heads, one) = 1.0;
    mdp.p(one, tails, two) = 1.0;
    mdp.p(two, heads, one) = 0.5;
    mdp.p(two, heads, two) = 0.5;
    mdp.p(two, tails, two) = 1.0;
    // expected one-step reward of R(1,H,1) = R(2,H,1) = 1
    mdp.reward(one, heads) = 1.0;
    mdp.reward(two, heads) = 0.5;
    mdp.initial_state = one;
    mdp.discount = 0.5;  // unused: the check sums rewards undiscounted
    mdp.state_names = {"1", "2"};
    mdp.action_names = {"H", "T"};
    return mdp;
}

namespace {

struct TwoStepStats {
    double value = 0.0;
    double two_heads = 0.0;
};

TwoStepStats two_step_stats(const Mdp& mdp, const std::vector<PolicyTable>& schedule) {
    TwoStepStats stats;
    for (const auto& e : enumerate_runs(mdp, schedule, 2).entries) {
        double total = 0.0;
        std::size_t heads = 0;
        for (std::size_t t = 0; t < e.run.length(); ++t) {
            total += mdp.reward(e.run.states[t], e.run.actions[t]);
            if (e.run.actions[t] == 0) ++heads;
        }
        stats.value += e.probability * total;
        if (heads >= 2) stats.two_heads += e.probability;
    }
    return stats;
}

PolicyTable coin_policy(double heads_at_one, double heads_at_two) {
    PolicyTable p{Table(2, 2)};
    p.prob(0, 0) = heads_at_one;
    p.prob(0, 1) = 1.0 - heads_at_one;
    p.prob(1, 0) = heads_at_two;
    p.prob(1, 1) = 1.0 - heads_at_two;
    return p;
}

double markov_coin_value(double a, double b) { return a * a + a + (1.0 - a) * b / 2.0; }

}  // namespace

CoinCheck coin_mdp_check(double rho, double grid_resolution) {
    if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
    if (!(grid_resolution > 0.0 && grid_resolution < 1.0)) throw std::invalid_argument("bad grid resolution");
    CoinCheck check;
    check.rho = rho;
    const double root = std::sqrt(rho);
    check.best_markov_value = markov_coin_value(root, 1.0);
    check.finite_memory_value = 1.0 + rho;
    check.bound = 0.5 * (1.0 - root);

    const auto steps = static_cast<std::size_t>(std::llround(1.0 / grid_resolution));
    check.grid_value = -1.0;
    for (std::size_t i = 0; i <= steps; ++i) {
        const double a = static_cast<double>(i) / static_cast<double>(steps);
        if (a * a > rho + 1e-12) break;  // covert constraint Pr(two heads) = a^2 <= rho, up to rounding
        for (std::size_t j = 0; j <= steps; ++j) {
            const double b = static_cast<double>(j) / static_cast<double>(steps);
            const double v = markov_coin_value(a, b);
            if (v > check.grid_value) {
                check.grid_value = v;
                check.grid_alpha = a;
                check.grid_beta = b;
            }
        }
    }

    const Mdp mdp = coin_mdp();
    const auto markov = two_step_stats(mdp, {coin_policy(root, 1.0)});
    check.enumerated_markov_value = markov.value;
    check.enumerated_markov_two_heads = markov.two_heads;
    // heads first, then heads with probability rho
    const auto memory = two_step_stats(mdp, {coin_policy(1.0, 1.0), coin_policy(rho, rho)});
    check.enumerated_memory_value = memory.value;
    check.enumerated_memory_two_heads = memory.two_heads;
    return check;
}

}  // namespace covert::oracle
