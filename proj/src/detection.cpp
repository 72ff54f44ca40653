#include "covert/detection.hpp"

#include <cmath>

namespace covert {

void validate_detection_params(const DetectionParams& params) {
    if (std::isnan(params.epsilon)) throw std::invalid_argument("epsilon must be a number");
    if (!(params.epsilon < params.beta_threshold)) {
        throw std::invalid_argument("beta_threshold must exceed epsilon");
    }
    if (!(params.alpha >= 0.0 && params.alpha <= 1.0)) {
        throw std::invalid_argument("alpha must lie in [0,1]");
    }
}

double log_likelihood_ratio(double ll_theta, double ll_nominal) {
    if (ll_theta == kNegInf && ll_nominal == kNegInf) {
        throw SupportError("observation outside both supports");
    }
    if (ll_nominal == kNegInf) return kPosInf;
    if (ll_theta == kNegInf) return kNegInf;
    return ll_theta - ll_nominal;
}

double log_likelihood_ratio(std::span<const Symbol> y, const Hmm& hmm_theta, const Hmm& hmm_nominal) {
    return log_likelihood_ratio(log_likelihood(hmm_theta, y), log_likelihood(hmm_nominal, y));
}

SprtDecision sprt_decision(double llr, const DetectionParams& params) {
    if (llr <= params.epsilon) return SprtDecision::accept_null;
    if (llr >= params.beta_threshold) return SprtDecision::accept_alternative;
    return SprtDecision::continue_sampling;
}

bool is_detected(std::span<const Symbol> y, const Hmm& hmm_theta, const Hmm& hmm_nominal, double epsilon) {
    return detection_condition(log_likelihood_ratio(y, hmm_theta, hmm_nominal), epsilon);
}

Estimate estimate_detection_probability(std::span<const ObsSequence> samples, const Hmm& hmm_theta,
                                        const Hmm& hmm_nominal, double epsilon) {
    if (samples.empty()) throw std::invalid_argument("no samples to estimate from");
    std::size_t detected = 0;
    for (const auto& y : samples) {
        if (is_detected(y, hmm_theta, hmm_nominal, epsilon)) ++detected;
    }
    const double n = static_cast<double>(samples.size());
    const double p = static_cast<double>(detected) / n;
    return {p, std::sqrt(p * (1.0 - p) / n)};
}

Estimate mean_and_standard_error(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("no values");
    const double n = static_cast<double>(values.size());
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= n;
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / (n - 1.0) / n)};
}

}  // namespace covert
