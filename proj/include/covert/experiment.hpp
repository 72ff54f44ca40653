#pragma once

#include "covert/covert_pg.hpp"
#include "covert/detection.hpp"
#include "covert/gridworld.hpp"
#include "covert/hmm.hpp"
#include "covert/io.hpp"
#include "covert/mdp.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace covert {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Names of the built-in presets.
std::vector<std::string> preset_names();

/// Full configuration document for a preset; throws ConfigError if unknown.
io::json preset_config(const std::string& name);

/// Everything needed to train or evaluate, resolved from a configuration
/// document.
struct Experiment {
    Mdp mdp;                          // agent MDP
    ObsModel obs;
    PolicyTable nominal_policy;
    PolicyParams initial_theta;
    DetectionParams detection;
    HyperParams hyper;
    std::uint64_t seed = 0;
    std::size_t eval_samples = 2000;
    std::optional<GridWorld> grid;
};

/// Resolves a configuration document. A `preset` key is expanded first and
/// the remaining keys are merged over it. Relative file paths are taken
/// relative to `base_dir`. `slip_override` replaces the grid slip parameter.
Experiment resolve_experiment(const io::json& config, const std::filesystem::path& base_dir = ".",
                              std::optional<double> slip_override = std::nullopt);

struct EvaluationSummary {
    Estimate value;
    Estimate detection;
    std::size_t samples = 0;
};

/// Monte Carlo value and detection probability of `params` against the
/// experiment's nominal model.
EvaluationSummary evaluate_policy(const Experiment& experiment, const PolicyParams& params, std::size_t samples,
                                  std::uint64_t seed);

/// CSV with header iter,lagrangian,value,detection,kl,lambda,beta.
void write_trace_csv(std::ostream& out, const TrainerTrace& trace);

/// Fixed-precision decimal formatting used by every CSV writer.
std::string format_decimal(double v);

}  // namespace covert
