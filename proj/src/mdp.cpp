#include "covert/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace covert {

ValidationReport validate_mdp(const Mdp& mdp) {
    ValidationReport report;
    auto& v = report.violations;
    const std::size_t S = mdp.num_states;
    const std::size_t A = mdp.num_actions;
    if (S == 0) v.emplace_back("MDP has no states");
    if (A == 0) v.emplace_back("MDP has no actions");
    if (mdp.transition.size() != S * A * S) {
        v.emplace_back("transition table has wrong size");
        return report;
    }
    if (mdp.reward.rows() != S || mdp.reward.cols() != A) {
        v.emplace_back("reward table has wrong shape");
    }
    if (mdp.absorbing.size() != S) v.emplace_back("absorbing flags have wrong size");
    if (mdp.initial_state >= S) v.emplace_back("initial state out of range");
    if (!(mdp.discount > 0.0 && mdp.discount < 1.0)) {
        v.emplace_back("discount must lie strictly inside (0,1)");
    }
    for (StateId s = 0; s < S; ++s) {
        for (ActionId a = 0; a < A; ++a) {
            double sum = 0.0;
            bool negative = false;
            for (double p : mdp.successors(s, a)) {
                if (p < 0.0 || !std::isfinite(p)) negative = true;
                sum += p;
            }
            if (negative) {
                std::ostringstream os;
                os << "negative probability in row (" << s << "," << a << ")";
                v.push_back(os.str());
            }
            if (std::abs(sum - 1.0) > 1e-12) {
                std::ostringstream os;
                os << "row (" << s << "," << a << ") sums to " << sum;
                v.push_back(os.str());
            }
        }
    }
    if (mdp.reward.rows() == S && mdp.reward.cols() == A && !mdp.reward.all_finite()) {
        v.emplace_back("reward table has non-finite entries");
    }
    return report;
}

void require_valid(const Mdp& mdp) {
    auto report = validate_mdp(mdp);
    if (report.ok()) return;
    std::string msg = "invalid MDP:";
    for (const auto& s : report.violations) msg += " " + s + ";";
    throw InvalidModel(msg);
}

std::vector<double> policy_probabilities(const PolicyParams& params, StateId s) {
    auto row = params.theta.row(s);
    const double m = *std::max_element(row.begin(), row.end());
    std::vector<double> out(row.size());
    double z = 0.0;
    for (std::size_t a = 0; a < row.size(); ++a) {
        out[a] = std::exp(row[a] - m);
        z += out[a];
    }
    for (auto& p : out) p /= z;
    return out;
}

double log_policy_probability(const PolicyParams& params, StateId s, ActionId a) {
    auto row = params.theta.row(s);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double t : row) z += std::exp(t - m);
    return row[a] - m - std::log(z);
}

PolicyTable softmax_policy(const PolicyParams& params) {
    PolicyTable out{Table(params.num_states(), params.num_actions())};
    for (StateId s = 0; s < params.num_states(); ++s) {
        auto probs = policy_probabilities(params, s);
        std::copy(probs.begin(), probs.end(), out.prob.row(s).begin());
    }
    return out;
}

namespace {

template <typename ActionSampler>
Run sample_run(const Mdp& mdp, std::size_t horizon, RandomStream& rng, ActionSampler&& pick) {
    Run run;
    StateId s = mdp.initial_state;
    run.states.push_back(s);
    if (mdp.is_absorbing(s)) return run;
    for (std::size_t t = 0; t < horizon; ++t) {
        const ActionId a = pick(s);
        const StateId next = rng.categorical(mdp.successors(s, a));
        run.actions.push_back(a);
        run.states.push_back(next);
        s = next;
        if (mdp.is_absorbing(s)) break;
    }
    return run;
}

}  // namespace

Run sample_trajectory(const Mdp& mdp, const PolicyParams& params, std::size_t horizon,
                      RandomStream& rng) {
    return sample_trajectory(mdp, softmax_policy(params), horizon, rng);
}

Run sample_trajectory(const Mdp& mdp, const PolicyTable& policy, std::size_t horizon,
                      RandomStream& rng) {
    return sample_run(mdp, horizon, rng,
                      [&](StateId s) { return rng.categorical(policy.prob.row(s)); });
}

double discounted_return(const Run& run, const Mdp& mdp) {
    double total = 0.0;
    double g = 1.0;
    for (std::size_t t = 0; t < run.length(); ++t) {
        total += g * mdp.reward(run.states[t], run.actions[t]);
        g *= mdp.discount;
    }
    return total;
}

double policy_value(const Mdp& mdp, const PolicyTable& policy, std::size_t horizon) {
    const std::size_t S = mdp.num_states;
    const std::size_t A = mdp.num_actions;
    std::vector<double> value(S, 0.0), next(S, 0.0);
    for (std::size_t h = 0; h < horizon; ++h) {
        for (StateId s = 0; s < S; ++s) {
            double v = 0.0;
            for (ActionId a = 0; a < A; ++a) {
                const double pa = policy.prob(s, a);
                if (pa == 0.0) continue;
                double q = mdp.reward(s, a);
                auto row = mdp.successors(s, a);
                for (StateId n = 0; n < S; ++n) {
                    if (row[n] > 0.0 && !mdp.is_absorbing(n)) q += mdp.discount * row[n] * value[n];
                }
                v += pa * q;
            }
            next[s] = v;
        }
        std::swap(value, next);
    }
    return mdp.is_absorbing(mdp.initial_state) ? 0.0 : value[mdp.initial_state];
}

namespace {

// Q(s,a) = R(s,a) + discount * sum_s' P(s'|s,a) V(s'), absorbing V treated as 0.
void backup(const Mdp& mdp, const std::vector<double>& value, Table& q) {
    for (StateId s = 0; s < mdp.num_states; ++s) {
        for (ActionId a = 0; a < mdp.num_actions; ++a) {
            double acc = mdp.reward(s, a);
            auto row = mdp.successors(s, a);
            for (StateId n = 0; n < mdp.num_states; ++n) {
                if (row[n] > 0.0 && !mdp.is_absorbing(n)) acc += mdp.discount * row[n] * value[n];
            }
            q(s, a) = acc;
        }
    }
}

}  // namespace

PolicyParams soft_value_iteration(const Mdp& mdp, double temperature,
                                  const SoftValueOptions& options) {
    if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
    require_valid(mdp);
    const std::size_t S = mdp.num_states;
    std::vector<double> value(S, 0.0);
    Table q(S, mdp.num_actions);
    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        backup(mdp, value, q);
        double change = 0.0;
        for (StateId s = 0; s < S; ++s) {
            auto row = q.row(s);
            const double m = *std::max_element(row.begin(), row.end());
            double z = 0.0;
            for (double x : row) z += std::exp((x - m) / temperature);
            const double v = m + temperature * std::log(z);
            change = std::max(change, std::abs(v - value[s]));
            value[s] = v;
        }
        if (change < options.tolerance) {
            backup(mdp, value, q);
            q *= 1.0 / temperature;
            return PolicyParams(std::move(q));
        }
    }
    throw ConvergenceError("soft value iteration did not converge within the sweep cap");
}

std::vector<ActionId> greedy_value_iteration(const Mdp& mdp, const SoftValueOptions& options) {
    require_valid(mdp);
    const std::size_t S = mdp.num_states;
    std::vector<double> value(S, 0.0);
    Table q(S, mdp.num_actions);
    for (std::size_t sweep = 0; sweep < options.max_sweeps; ++sweep) {
        backup(mdp, value, q);
        double change = 0.0;
        for (StateId s = 0; s < S; ++s) {
            auto row = q.row(s);
            const double v = *std::max_element(row.begin(), row.end());
            change = std::max(change, std::abs(v - value[s]));
            value[s] = v;
        }
        if (change < options.tolerance) {
            backup(mdp, value, q);
            std::vector<ActionId> greedy(S);
            for (StateId s = 0; s < S; ++s) {
                auto row = q.row(s);
                greedy[s] = static_cast<ActionId>(std::max_element(row.begin(), row.end()) - row.begin());
            }
            return greedy;
        }
    }
    throw ConvergenceError("value iteration did not converge within the sweep cap");
}

}  // namespace covert
