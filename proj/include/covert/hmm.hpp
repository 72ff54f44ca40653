#pragma once

#include "covert/mdp.hpp"
#include "covert/random.hpp"
#include "covert/table.hpp"

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace covert {

using Symbol = std::size_t;
using ObsSequence = std::vector<Symbol>;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kPosInf = std::numeric_limits<double>::infinity();

/// Observation model: Obs(o|s) for decision states and Obs(o|s,a) for
/// nature states.
struct ObsModel {
    std::size_t alphabet_size = 0;
    std::vector<std::string> symbols;  // optional names
    Table state_emission;              // num_states x alphabet_size
    Table action_emission;             // (num_states * num_actions) x alphabet_size

    std::size_t num_states() const { return state_emission.rows(); }
    std::size_t num_actions() const {
        return num_states() == 0 ? 0 : action_emission.rows() / num_states();
    }

    /// Every action emits `null_symbol` with probability one.
    static Table null_action_emission(std::size_t num_states, std::size_t num_actions,
                                      std::size_t alphabet_size, Symbol null_symbol);
};

ValidationReport validate_obs_model(const ObsModel& obs, std::size_t num_states,
                                    std::size_t num_actions);

/// HMM with state emission. Transitions are kept sparse (incoming edges per
/// target) and every probability is stored as its natural log.
class Hmm {
public:
    struct Edge {
        std::size_t from;
        double log_p;
    };

    Hmm() = default;

    /// Dense constructor; rows of `transition` and `emission` must be
    /// distributions and `initial` must sum to one.
    Hmm(const Table& transition, const Table& emission, std::vector<double> initial);

    std::size_t num_states() const { return num_states_; }
    std::size_t alphabet_size() const { return alphabet_size_; }

    double transition_probability(std::size_t from, std::size_t to) const;
    double emission_probability(std::size_t state, Symbol o) const;
    double initial_probability(std::size_t state) const;

    std::span<const Edge> incoming(std::size_t to) const;
    double log_emission(std::size_t state, Symbol o) const { return log_emission_(state, o); }
    double log_initial(std::size_t state) const { return log_initial_[state]; }

    /// Dense copy of the transition matrix (tests and small models only).
    Table dense_transition() const;

private:
    friend Hmm build_hmm(const Mdp&, const PolicyTable&, const ObsModel&);

    void finalize_edges(std::vector<std::vector<Edge>> incoming);

    std::size_t num_states_ = 0;
    std::size_t alphabet_size_ = 0;
    std::vector<double> log_initial_;
    Table log_emission_;
    std::vector<std::size_t> edge_offset_;  // num_states_ + 1
    std::vector<Edge> edges_;
};

/// Index of decision state s in a policy-induced HMM.
inline std::size_t decision_state(StateId s) { return s; }
/// Index of nature state (s, a) in a policy-induced HMM.
inline std::size_t nature_state(const Mdp& mdp, StateId s, ActionId a) {
    return mdp.num_states + s * mdp.num_actions + a;
}

/// Policy-induced HMM over S u SxA: s -> (s,a) with pi(a|s), (s,a) -> s'
/// with P(s'|s,a). Decision states emit Obs(.|s), nature states Obs(.|s,a).
Hmm build_hmm(const Mdp& mdp, const PolicyTable& policy, const ObsModel& obs);
Hmm build_hmm(const Mdp& mdp, const PolicyParams& params, const ObsModel& obs);

/// One symbol per decision state and per nature state along the run:
/// o(s0), o(s0,a0), o(s1), ..., o(sT). Length 2T + 1.
ObsSequence sample_observation(const ObsModel& obs, const Run& run, RandomStream& rng);

/// ln P(y; hmm) by the log-space forward recursion. Returns -inf when y has
/// zero probability.
double log_likelihood(const Hmm& hmm, std::span<const Symbol> y);

/// Numerically stable ln(sum exp(x_i)); -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> xs);

}  // namespace covert
