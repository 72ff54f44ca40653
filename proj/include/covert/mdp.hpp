#pragma once

#include "covert/random.hpp"
#include "covert/table.hpp"

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace covert {

using StateId = std::size_t;
using ActionId = std::size_t;

/// Finite MDP with dense transition storage P(s'|s,a) and rewards R(s,a).
/// Entering a state flagged absorbing ends an episode.
struct Mdp {
    std::size_t num_states = 0;
    std::size_t num_actions = 0;
    /// Indexed [(s * num_actions + a) * num_states + s'].
    std::vector<double> transition;
    Table reward;  // num_states x num_actions
    StateId initial_state = 0;
    double discount = 0.95;
    std::vector<bool> absorbing;
    std::vector<std::string> state_names;   // optional, for I/O
    std::vector<std::string> action_names;  // optional, for I/O

    Mdp() = default;
    Mdp(std::size_t states, std::size_t actions)
        : num_states(states), num_actions(actions),
          transition(states * actions * states, 0.0), reward(states, actions),
          absorbing(states, false) {}

    double& p(StateId s, ActionId a, StateId next) {
        return transition[(s * num_actions + a) * num_states + next];
    }
    double p(StateId s, ActionId a, StateId next) const {
        return transition[(s * num_actions + a) * num_states + next];
    }
    std::span<const double> successors(StateId s, ActionId a) const {
        return {transition.data() + (s * num_actions + a) * num_states, num_states};
    }
    bool is_absorbing(StateId s) const { return absorbing[s]; }
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

class InvalidModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

ValidationReport validate_mdp(const Mdp& mdp);

/// Throws InvalidModel listing every violation.
void require_valid(const Mdp& mdp);

/// Softmax policy parameters theta(s, a).
struct PolicyParams {
    Table theta;

    PolicyParams() = default;
    explicit PolicyParams(Table t) : theta(std::move(t)) {}
    PolicyParams(std::size_t states, std::size_t actions) : theta(states, actions) {}

    std::size_t num_states() const { return theta.rows(); }
    std::size_t num_actions() const { return theta.cols(); }
};

/// Explicit Markov policy pi(a|s); rows are distributions.
struct PolicyTable {
    Table prob;

    std::size_t num_states() const { return prob.rows(); }
    std::size_t num_actions() const { return prob.cols(); }
};

/// pi_theta(.|s) by max-subtracted softmax.
std::vector<double> policy_probabilities(const PolicyParams& params, StateId s);

/// Log pi_theta(a|s), computed with log-sum-exp.
double log_policy_probability(const PolicyParams& params, StateId s, ActionId a);

PolicyTable softmax_policy(const PolicyParams& params);

/// A run s0 a0 s1 a1 ... sT. states.size() == actions.size() + 1.
struct Run {
    std::vector<StateId> states;
    std::vector<ActionId> actions;

    std::size_t length() const { return actions.size(); }
    friend bool operator==(const Run&, const Run&) = default;
};

/// Samples actions from softmax(theta) and successors from P. Stops after
/// `horizon` actions or on entering an absorbing state.
Run sample_trajectory(const Mdp& mdp, const PolicyParams& params, std::size_t horizon,
                      RandomStream& rng);
Run sample_trajectory(const Mdp& mdp, const PolicyTable& policy, std::size_t horizon,
                      RandomStream& rng);

/// Sum over t of discount^t R(s_t, a_t).
double discounted_return(const Run& run, const Mdp& mdp);

/// Exact expected discounted return of `policy` over at most `horizon`
/// actions, by backward induction. Absorbing successors contribute no
/// further reward.
double policy_value(const Mdp& mdp, const PolicyTable& policy, std::size_t horizon);

class ConvergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SoftValueOptions {
    double tolerance = 1e-9;
    std::size_t max_sweeps = 100000;
};

/// Entropy-regularized value iteration. Returns theta(s,a) = Q(s,a) / temperature
/// so that softmax(theta) is the soft-optimal policy.
PolicyParams soft_value_iteration(const Mdp& mdp, double temperature,
                                  const SoftValueOptions& options = {});

/// Standard (hard) value iteration; returns the greedy action per state.
std::vector<ActionId> greedy_value_iteration(const Mdp& mdp, const SoftValueOptions& options = {});

}  // namespace covert
