#pragma once

// Exact brute-force counterparts of the Monte Carlo machinery, for small
// instances only. Every routine refuses (throws) rather than truncating.

#include "covert/hmm.hpp"
#include "covert/mdp.hpp"
#include "covert/table.hpp"

#include <functional>
#include <stdexcept>
#include <vector>

namespace covert::oracle {

inline constexpr std::size_t kEnumerationLimit = 1'000'000;

class EnumerationLimitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct EnumeratedRun {
    Run run;
    double probability = 0.0;
};

/// All runs of at most `horizon` actions; runs stop early on entering an
/// absorbing state, so the probabilities form a distribution.
struct EnumeratedEnsemble {
    std::vector<EnumeratedRun> entries;

    double total_probability() const;
};

EnumeratedEnsemble enumerate_runs(const Mdp& mdp, const PolicyTable& policy, std::size_t horizon);
EnumeratedEnsemble enumerate_runs(const Mdp& mdp, const PolicyParams& params, std::size_t horizon);
/// Time-varying policy: step t uses schedule[min(t, size-1)].
EnumeratedEnsemble enumerate_runs(const Mdp& mdp, const std::vector<PolicyTable>& schedule,
                                  std::size_t horizon);

struct WeightedObservation {
    ObsSequence obs;
    double probability = 0.0;  // P(y | x)
};

/// Every observation sequence with positive probability given the run.
std::vector<WeightedObservation> enumerate_observations(const ObsModel& obs, const Run& run);

/// P(y; hmm) by summing over every hidden state path (|states|^|y| terms).
double brute_force_likelihood(const Hmm& hmm, std::span<const Symbol> y);

/// Full ln P(x) including transition factors.
double trajectory_log_probability(const Mdp& mdp, const PolicyParams& params, const Run& run);

double exact_value(const Mdp& mdp, const PolicyParams& params, std::size_t horizon);

/// KL(P_anchor || P_theta) over runs of at most `horizon` actions.
double exact_kl(const Mdp& mdp, const PolicyParams& anchor, const PolicyParams& theta, std::size_t horizon);

/// Pr(ln P(Y; M_theta) - ln P(Y; M_0) > epsilon; M_theta) by joint
/// enumeration of runs and observation sequences.
double exact_detection_probability(const Mdp& mdp, const PolicyParams& params, const ObsModel& obs,
                                   const PolicyTable& nominal_policy, double epsilon, std::size_t horizon);

/// Distinct log-likelihood ratios of every reachable observation sequence;
/// used to keep finite differences away from indicator jumps.
std::vector<double> reachable_log_likelihood_ratios(const Mdp& mdp, const PolicyParams& params,
                                                    const ObsModel& obs, const PolicyTable& nominal_policy,
                                                    std::size_t horizon);

using Objective = std::function<double(const PolicyParams&)>;

/// Central differences, one coordinate at a time.
Table finite_difference_gradient(const Objective& objective, const PolicyParams& params, double step = 1e-4);

/// Exact expectations, under runs drawn from `anchor`, of the sample
/// gradient estimators evaluated at `theta`.
Table expected_value_gradient(const Mdp& mdp, const PolicyParams& theta, const PolicyParams& anchor,
                              std::size_t horizon);
Table expected_kl_gradient(const Mdp& mdp, const PolicyParams& theta, const PolicyParams& anchor,
                           std::size_t horizon);
Table expected_constraint_gradient(const Mdp& mdp, const PolicyParams& theta, const PolicyParams& anchor,
                                   const ObsModel& obs, const PolicyTable& nominal_policy, double epsilon,
                                   std::size_t horizon);

/// Two-state coin MDP: actions H/T, P(1|1,H)=1, P(2|1,T)=1, P(1|2,H)=P(2|2,H)=0.5,
/// P(2|2,T)=1, unit reward for (1,H,1) and (2,H,1). States are 0-based here.
Mdp coin_mdp();

struct CoinCheck {
    double rho = 0.0;
    double best_markov_value = 0.0;    // closed form at alpha = sqrt(rho), beta = 1
    double finite_memory_value = 0.0;  // 1 + rho
    double bound = 0.0;                // (1 - sqrt(rho)) / 2
    double grid_alpha = 0.0;           // grid-search maximizer
    double grid_beta = 0.0;
    double grid_value = 0.0;
    double enumerated_markov_value = 0.0;     // MDP enumeration at the maximizer
    double enumerated_markov_two_heads = 0.0;  // Pr(two heads) at the maximizer
    double enumerated_memory_value = 0.0;
    double enumerated_memory_two_heads = 0.0;

    double gap() const { return finite_memory_value - best_markov_value; }
};

/// Throws std::invalid_argument unless 0 < rho < 1.
CoinCheck coin_mdp_check(double rho, double grid_resolution = 1e-3);

}  // namespace covert::oracle
