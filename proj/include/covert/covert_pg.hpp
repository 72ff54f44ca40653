#pragma once

#include "covert/detection.hpp"
#include "covert/hmm.hpp"
#include "covert/mdp.hpp"
#include "covert/random.hpp"
#include "covert/table.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace covert {

struct HyperParams {
    double eta = 0.005;          // primal learning rate
    double kappa = 0.01;         // dual learning rate
    double lambda_init = 10.0;
    double beta_init = 1.0;      // KL penalty coefficient
    double kl_target = 0.01;     // d
    double delta0 = 1e-3;        // stop when |change in Lagrangian| < delta0
    std::size_t batches = 20;
    std::size_t trajectories_per_batch = 40;
    std::size_t horizon = 100;
    std::size_t max_outer_iterations = 400;
    /// Upper clip on importance weights; infinity disables clipping.
    double weight_clip = 1e3;
};

/// Throws std::invalid_argument naming the first offending field.
void validate_hyper_params(const HyperParams& hyper);

/// A sampled run, its observation, and quantities cached at sampling time.
struct SamplePair {
    Run run;
    ObsSequence obs;
    double anchor_log_prob = 0.0;  // sum_t ln pi_{theta_t}(a_t|s_t)
    double nominal_log_likelihood = std::numeric_limits<double>::quiet_NaN();
};

struct BatchSample {
    std::vector<SamplePair> pairs;

    std::size_t size() const { return pairs.size(); }
    bool empty() const { return pairs.empty(); }
};

/// Draws `count` (run, observation) pairs under theta_t. When `nominal` is
/// given, ln P(y; M_0) is cached on every pair.
BatchSample sample_batch(const Mdp& mdp, const ObsModel& obs, const PolicyParams& theta_t,
                         std::size_t count, std::size_t horizon, RandomStream& rng,
                         const Hmm* nominal = nullptr);

/// Fills in ln P(y; M_0) where it is not cached yet.
void cache_nominal_likelihoods(BatchSample& batch, const Hmm& nominal);

/// Policy factor of ln P_theta(x); transition factors are omitted.
double run_log_probability(const Run& run, const PolicyParams& params);

/// Sum over t of grad_theta ln pi_theta(a_t|s_t).
Table score_function(const Run& run, const PolicyParams& params);

/// P_theta(x) / P_theta_t(x), evaluated in log space.
double importance_weight(const Run& run, const PolicyParams& theta, const PolicyParams& theta_t);

inline constexpr double kNoClip = std::numeric_limits<double>::infinity();

/// (1/N) sum_i w_i * score(x_i; theta) * R(x_i).
Table value_gradient(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& theta_t,
                     const Mdp& mdp, double weight_clip = kNoClip);

/// -(1/N) sum_i score(x_i; theta): gradient of KL(P_theta_t || P_theta).
Table kl_gradient(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& theta_t);

/// Detection indicator for every pair, with M_theta supplied by the caller.
std::vector<char> detection_indicators(const BatchSample& batch, const Hmm& hmm_theta,
                                       const Hmm& hmm_nominal, double epsilon);

/// -(1/N) sum_i 1{y_i in U} w_i score(x_i; theta): gradient of the negated
/// detection probability.
Table constraint_gradient(const BatchSample& batch, const PolicyParams& theta,
                          const PolicyParams& theta_t, const Hmm& hmm_theta, const Hmm& hmm_nominal,
                          double epsilon, double weight_clip = kNoClip);
Table constraint_gradient(const BatchSample& batch, const PolicyParams& theta,
                          const PolicyParams& theta_t, std::span<const char> indicators,
                          double weight_clip = kNoClip);

/// value_gradient + lambda * constraint_gradient - beta * kl_gradient.
Table primal_gradient(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& theta_t,
                      const Mdp& mdp, std::span<const char> indicators, double lambda, double beta,
                      double weight_clip = kNoClip);

/// (1/N) sum_i [ln P_theta_t(x_i) - ln P_theta(x_i)].
double kl_estimate(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& theta_t);

/// (1/N) sum_i w_i R(x_i).
double value_estimate(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& theta_t,
                      const Mdp& mdp, double weight_clip = kNoClip);

double lagrangian_value(double value_est, double detection_est, double kl_est, double lambda,
                        double alpha, double beta);

/// alpha - detection_est
double dual_gradient(double detection_est, double alpha);

/// max(0, lambda - kappa * grad)
double update_lambda(double lambda, double kappa, double grad);

/// Halve beta when kl <= d/1.5, double it when kl >= 1.5 d.
double update_beta(double beta, double kl_est, double d);

struct TraceRow {
    std::size_t iter = 0;
    double lagrangian = 0.0;
    double value = 0.0;
    double detection = 0.0;
    double kl = 0.0;
    double lambda = 0.0;  // after the dual update
    double beta = 0.0;    // after the penalty adaptation
};

struct TrainerTrace {
    std::vector<TraceRow> rows;
};

struct TrainResult {
    PolicyParams theta;
    TrainerTrace trace;
    double lambda = 0.0;
    double beta = 0.0;
    bool converged = false;  // stopped on |change in Lagrangian| < delta0
};

class TrainerError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using TraceCallback = std::function<void(const TraceRow&)>;

/// Primal-dual proximal policy gradient. Each outer iteration samples
/// `batches` batches under the anchor theta_t, takes one primal ascent step
/// per batch, then updates lambda and beta from all pairs of the iteration.
TrainResult run_covert_pg(const Mdp& mdp, const ObsModel& obs, const PolicyTable& nominal_policy,
                          const PolicyParams& initial_theta, const DetectionParams& detection,
                          const HyperParams& hyper, std::uint64_t seed,
                          const TraceCallback& on_iteration = {});

}  // namespace covert
