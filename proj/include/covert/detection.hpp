#pragma once

#include "covert/hmm.hpp"

#include <span>
#include <stdexcept>
#include <vector>

namespace covert {

/// Thresholds of the sequential probability ratio test plus the tolerated
/// detection probability.
struct DetectionParams {
    double epsilon = 3.0;              // lower SPRT threshold / detection threshold
    double beta_threshold = kPosInf;   // upper SPRT threshold
    double alpha = 0.2;                // tolerated detection probability
};

void validate_detection_params(const DetectionParams& params);

class SupportError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// ln P(y; M_theta) - ln P(y; M_0) from precomputed log-likelihoods.
/// +inf when only M_0 rules y out, -inf when only M_theta does; throws
/// SupportError when both do.
double log_likelihood_ratio(double ll_theta, double ll_nominal);

double log_likelihood_ratio(std::span<const Symbol> y, const Hmm& hmm_theta, const Hmm& hmm_nominal);

enum class SprtDecision { accept_null, accept_alternative, continue_sampling };

/// accept_null if llr <= epsilon, accept_alternative if llr >= beta_threshold.
SprtDecision sprt_decision(double llr, const DetectionParams& params);

/// Strict: detected iff llr > epsilon.
inline bool detection_condition(double llr, double epsilon) { return llr > epsilon; }

bool is_detected(std::span<const Symbol> y, const Hmm& hmm_theta, const Hmm& hmm_nominal, double epsilon);

struct Estimate {
    double mean = 0.0;
    double std_error = 0.0;
};

/// Fraction of detected samples and its binomial standard error.
Estimate estimate_detection_probability(std::span<const ObsSequence> samples, const Hmm& hmm_theta,
                                        const Hmm& hmm_nominal, double epsilon);

/// Mean and standard error sqrt(s^2 / n), s^2 the unbiased sample variance.
Estimate mean_and_standard_error(std::span<const double> values);

}  // namespace covert
