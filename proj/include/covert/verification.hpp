#pragma once

#include "covert/hmm.hpp"
#include "covert/mdp.hpp"

#include <string>
#include <vector>

namespace covert::verification {

/// Small fully enumerable covert-planning instance.
struct ToyInstance {
    std::string name;
    Mdp mdp;
    ObsModel obs;
    PolicyTable nominal;
    PolicyParams theta;   // evaluated policy
    PolicyParams anchor;  // sampling policy for the gradient estimators
    double epsilon = 0.0;
    std::size_t horizon = 0;
};

/// Two states, two actions, state-only observations, horizon 3.
ToyInstance two_state_toy();

/// Three states, two actions, binary observations emitted at decision and
/// nature states, horizon 4.
ToyInstance three_state_toy();

std::vector<ToyInstance> toy_suite();

/// Midpoint of the widest gap between consecutive reachable log-likelihood
/// ratios whose exact detection probability lies in [low, high]. Returns the
/// chosen threshold and its distance to the nearest ratio.
struct ThresholdChoice {
    double epsilon = 0.0;
    double margin = 0.0;
};
ThresholdChoice choose_threshold(const ToyInstance& toy, double low, double high);

struct CheckResult {
    std::string name;
    bool passed = false;
    double deviation = 0.0;
    double tolerance = 0.0;
};

std::vector<std::string> suite_names();

/// Runs `oracle`, `gradients`, `theorem1` or `all`. Throws
/// std::invalid_argument for an unknown suite.
std::vector<CheckResult> run_suite(const std::string& suite);

/// Largest |estimate - reference| relative to max|reference|; falls back to
/// the absolute error when the reference is below `abs_floor`.
double relative_deviation(const Table& estimate, const Table& reference, double abs_floor = 1e-6);

}  // namespace covert::verification
