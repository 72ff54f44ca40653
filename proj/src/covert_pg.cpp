#include "covert/covert_pg.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace covert {

void validate_hyper_params(const HyperParams& h) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument(std::string(name) + " must be a positive finite number");
        }
    };
    auto positive_count = [](std::size_t v, const char* name) {
        if (v == 0) throw std::invalid_argument(std::string(name) + " must be at least 1");
    };
    positive(h.eta, "eta");
    positive(h.kappa, "kappa");
    if (!(h.lambda_init >= 0.0) || !std::isfinite(h.lambda_init)) {
        throw std::invalid_argument("lambda_init must be a nonnegative finite number");
    }
    positive(h.beta_init, "beta_init");
    positive(h.kl_target, "kl_target");
    positive(h.delta0, "delta0");
    positive_count(h.batches, "batches");
    positive_count(h.trajectories_per_batch, "trajectories_per_batch");
    positive_count(h.horizon, "horizon");
    positive_count(h.max_outer_iterations, "max_outer_iterations");
    if (!(h.weight_clip > 0.0)) throw std::invalid_argument("weight_clip must be positive");
}

namespace {

/// ln softmax(theta) for every state.
Table log_policy_table(const PolicyParams& params) {
    Table out(params.num_states(), params.num_actions());
    for (StateId s = 0; s < params.num_states(); ++s) {
        auto row = params.theta.row(s);
        const double m = *std::max_element(row.begin(), row.end());
        double z = 0.0;
        for (double t : row) z += std::exp(t - m);
        const double lz = m + std::log(z);
        for (ActionId a = 0; a < row.size(); ++a) out(s, a) = row[a] - lz;
    }
    return out;
}

double run_log_prob(const Run& run, const Table& log_policy) {
    double lp = 0.0;
    for (std::size_t t = 0; t < run.length(); ++t) lp += log_policy(run.states[t], run.actions[t]);
    return lp;
}

// grad += scale * score(run)
void accumulate_score(const Run& run, const PolicyTable& policy, double scale, Table& grad) {
    for (std::size_t t = 0; t < run.length(); ++t) {
        const StateId s = run.states[t];
        auto probs = policy.prob.row(s);
        for (ActionId a = 0; a < probs.size(); ++a) grad(s, a) -= scale * probs[a];
        grad(s, run.actions[t]) += scale;
    }
}

double clipped(double w, double clip) { return std::min(w, clip); }

// Weights w_i = exp(ln P_theta(x_i) - ln P_theta_t(x_i)) using the cached anchor log-probability.
std::vector<double> batch_weights(const BatchSample& batch, const PolicyParams& theta, double clip) {
    const Table log_policy = log_policy_table(theta);
    std::vector<double> w(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& pair = batch.pairs[i];
        w[i] = clipped(std::exp(run_log_prob(pair.run, log_policy) - pair.anchor_log_prob), clip);
    }
    return w;
}

void require_nonempty(const BatchSample& batch) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
}

}  // namespace

BatchSample sample_batch(const Mdp& mdp, const ObsModel& obs, const PolicyParams& theta_t,
                         std::size_t count, std::size_t horizon, RandomStream& rng, const Hmm* nominal) {
    const PolicyTable policy = softmax_policy(theta_t);
    const Table log_policy = log_policy_table(theta_t);
    BatchSample batch;
    batch.pairs.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        SamplePair pair;
        pair.run = sample_trajectory(mdp, policy, horizon, rng);
        pair.obs = sample_observation(obs, pair.run, rng);
        pair.anchor_log_prob = run_log_prob(pair.run, log_policy);
        batch.pairs.push_back(std::move(pair));
    }
    if (nominal != nullptr) cache_nominal_likelihoods(batch, *nominal);
    return batch;
}

void cache_nominal_likelihoods(BatchSample& batch, const Hmm& nominal) {
    for (auto& pair : batch.pairs) {
        if (std::isnan(pair.nominal_log_likelihood)) {
            pair.nominal_log_likelihood = log_likelihood(nominal, pair.obs);
        }
    }
}

double run_log_probability(const Run& run, const PolicyParams& params) {
    double lp = 0.0;
    for (std::size_t t = 0; t < run.length(); ++t) {
        lp += log_policy_probability(params, run.states[t], run.actions[t]);
    }
    return lp;
}

Table score_function(const Run& run, const PolicyParams& params) {
    Table grad(params.num_states(), params.num_actions());
    accumulate_score(run, softmax_policy(params), 1.0, grad);
    return grad;
}

double importance_weight(const Run& run, const PolicyParams& theta, const PolicyParams& theta_t) {
    return std::exp(run_log_probability(run, theta) - run_log_probability(run, theta_t));
}

Table value_gradient(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& /*theta_t*/,
                     const Mdp& mdp, double weight_clip) {
    require_nonempty(batch);
    const PolicyTable policy = softmax_policy(theta);
    const auto w = batch_weights(batch, theta, weight_clip);
    Table grad(theta.num_states(), theta.num_actions());
    const double n = static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const double ret = discounted_return(batch.pairs[i].run, mdp);
        if (ret == 0.0) continue;
        accumulate_score(batch.pairs[i].run, policy, w[i] * ret / n, grad);
    }
    return grad;
}

Table kl_gradient(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& /*theta_t*/) {
    require_nonempty(batch);
    const PolicyTable policy = softmax_policy(theta);
    Table grad(theta.num_states(), theta.num_actions());
    const double scale = -1.0 / static_cast<double>(batch.size());
    for (const auto& pair : batch.pairs) accumulate_score(pair.run, policy, scale, grad);
    return grad;
}

std::vector<char> detection_indicators(const BatchSample& batch, const Hmm& hmm_theta,
                                       const Hmm& hmm_nominal, double epsilon) {
    std::vector<char> out(batch.size(), 0);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& pair = batch.pairs[i];
        const double ll0 = std::isnan(pair.nominal_log_likelihood) ? log_likelihood(hmm_nominal, pair.obs)
                                                                   : pair.nominal_log_likelihood;
        const double llr = log_likelihood_ratio(log_likelihood(hmm_theta, pair.obs), ll0);
        out[i] = detection_condition(llr, epsilon) ? 1 : 0;
    }
    return out;
}

Table constraint_gradient(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& theta_t,
                          const Hmm& hmm_theta, const Hmm& hmm_nominal, double epsilon, double weight_clip) {
    const auto indicators = detection_indicators(batch, hmm_theta, hmm_nominal, epsilon);
    return constraint_gradient(batch, theta, theta_t, indicators, weight_clip);
}

Table constraint_gradient(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& /*theta_t*/,
                          std::span<const char> indicators, double weight_clip) {
    require_nonempty(batch);
    if (indicators.size() != batch.size()) throw std::invalid_argument("indicator count does not match batch");
    Table grad(theta.num_states(), theta.num_actions());
    if (std::none_of(indicators.begin(), indicators.end(), [](char c) { return c != 0; })) return grad;
    const PolicyTable policy = softmax_policy(theta);
    const auto w = batch_weights(batch, theta, weight_clip);
    const double n = static_cast<double>(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        if (indicators[i] == 0) continue;
        accumulate_score(batch.pairs[i].run, policy, -w[i] / n, grad);
    }
    return grad;
}

Table primal_gradient(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& theta_t,
                      const Mdp& mdp, std::span<const char> indicators, double lambda, double beta,
                      double weight_clip) {
    Table grad = value_gradient(batch, theta, theta_t, mdp, weight_clip);
    if (lambda != 0.0) grad.add_scaled(constraint_gradient(batch, theta, theta_t, indicators, weight_clip), lambda);
    if (beta != 0.0) grad.add_scaled(kl_gradient(batch, theta, theta_t), -beta);
    return grad;
}

double kl_estimate(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& /*theta_t*/) {
    require_nonempty(batch);
    const Table log_policy = log_policy_table(theta);
    double acc = 0.0;
    for (const auto& pair : batch.pairs) acc += pair.anchor_log_prob - run_log_prob(pair.run, log_policy);
    return acc / static_cast<double>(batch.size());
}

double value_estimate(const BatchSample& batch, const PolicyParams& theta, const PolicyParams& /*theta_t*/,
                      const Mdp& mdp, double weight_clip) {
    require_nonempty(batch);
    const auto w = batch_weights(batch, theta, weight_clip);
    double acc = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) acc += w[i] * discounted_return(batch.pairs[i].run, mdp);
    return acc / static_cast<double>(batch.size());
}

double lagrangian_value(double value_est, double detection_est, double kl_est, double lambda, double alpha,
                        double beta) {
    return value_est + lambda * (alpha - detection_est) - beta * kl_est;
}

double dual_gradient(double detection_est, double alpha) { return alpha - detection_est; }

double update_lambda(double lambda, double kappa, double grad) {
    const double next = lambda - kappa * grad;
    return next > 0.0 ? next : 0.0;
}

double update_beta(double beta, double kl_est, double d) {
    if (kl_est <= d / 1.5) return beta / 2.0;
    if (kl_est >= d * 1.5) return beta * 2.0;
    return beta;
}

TrainResult run_covert_pg(const Mdp& mdp, const ObsModel& obs, const PolicyTable& nominal_policy,
                          const PolicyParams& initial_theta, const DetectionParams& detection,
                          const HyperParams& hyper, std::uint64_t seed, const TraceCallback& on_iteration) {
    require_valid(mdp);
    validate_detection_params(detection);
    validate_hyper_params(hyper);
    if (initial_theta.num_states() != mdp.num_states || initial_theta.num_actions() != mdp.num_actions) {
        throw InvalidModel("initial policy dimensions do not match the MDP");
    }
    if (!initial_theta.theta.all_finite()) throw InvalidModel("initial policy has non-finite entries");

    const Hmm nominal = build_hmm(mdp, nominal_policy, obs);

    TrainResult result;
    PolicyParams anchor = initial_theta;
    double lambda = hyper.lambda_init;
    double beta = hyper.beta_init;
    double previous_lagrangian = kPosInf;

    for (std::size_t t = 0; t < hyper.max_outer_iterations; ++t) {
        PolicyParams theta = anchor;
        BatchSample all;
        all.pairs.reserve(hyper.batches * hyper.trajectories_per_batch);
        for (std::size_t b = 0; b < hyper.batches; ++b) {
            RandomStream rng(substream_seed(seed, t * hyper.batches + b));
            BatchSample batch = sample_batch(mdp, obs, anchor, hyper.trajectories_per_batch, hyper.horizon, rng,
                                             &nominal);
            // Membership in U is judged with the HMM of the current iterate.
            const Hmm hmm_theta = build_hmm(mdp, theta, obs);
            const auto indicators = detection_indicators(batch, hmm_theta, nominal, detection.epsilon);
            const Table grad = primal_gradient(batch, theta, anchor, mdp, indicators, lambda, beta, hyper.weight_clip);
            theta.theta.add_scaled(grad, hyper.eta);
            for (auto& pair : batch.pairs) all.pairs.push_back(std::move(pair));
        }
        if (!theta.theta.all_finite()) {
            std::ostringstream os;
            os << "policy parameters became non-finite at iteration " << t;
            throw TrainerError(os.str());
        }

        const Hmm hmm_theta = build_hmm(mdp, theta, obs);
        const auto indicators = detection_indicators(all, hmm_theta, nominal, detection.epsilon);
        const double detected = static_cast<double>(std::count(indicators.begin(), indicators.end(), 1));
        const double detection_est = detected / static_cast<double>(all.size());
        const double value_est = value_estimate(all, theta, anchor, mdp, hyper.weight_clip);
        const double kl_est = std::max(0.0, kl_estimate(all, theta, anchor));
        const double lagrangian = lagrangian_value(value_est, detection_est, kl_est, lambda, detection.alpha, beta);
        if (!std::isfinite(lagrangian)) {
            std::ostringstream os;
            os << "non-finite Lagrangian at iteration " << t << " (value " << value_est << ", detection "
               << detection_est << ", kl " << kl_est << ", lambda " << lambda << ")";
            throw TrainerError(os.str());
        }

        lambda = update_lambda(lambda, hyper.kappa, dual_gradient(detection_est, detection.alpha));
        beta = update_beta(beta, kl_est, hyper.kl_target);
        anchor = std::move(theta);

        TraceRow row{t, lagrangian, value_est, detection_est, kl_est, lambda, beta};
        result.trace.rows.push_back(row);
        if (on_iteration) on_iteration(row);

        const double delta = std::abs(lagrangian - previous_lagrangian);
        previous_lagrangian = lagrangian;
        if (delta < hyper.delta0) {
            result.converged = true;
            break;
        }
    }
    result.theta = std::move(anchor);
    result.lambda = lambda;
    result.beta = beta;
    return result;
}

}  // namespace covert
