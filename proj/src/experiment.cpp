#include "covert/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace covert {

namespace {

using io::json;

// Reconstruction of the 10x10 layout: sensors at (4,0), (6,4), (1,4), agent
// goal (0,0), user goal (7,0); (6,3) is dark green inside sensor 2's range.
constexpr const char* kFullGrid = R"({
  "map": [
    "A.........",
    "..........",
    "..##..X...",
    "..##......",
    ".....gg...",
    ".X..gGGg..",
    "...GG..##.",
    "U......##.",
    "...X......",
    "......S..."
  ],
  "action_cost": 0.2,
  "penalty": 2.0,
  "goal_reward": 20.0,
  "gamma": 0.95,
  "sensors": [
    {"location": [4, 0], "radius": 2, "base_probability": 0.8},
    {"location": [6, 4], "radius": 2, "base_probability": 0.8},
    {"location": [1, 4], "radius": 2, "base_probability": 0.8}
  ]
})";

constexpr const char* kMiniGrid = R"({
  "map": [
    "U...A",
    ".....",
    "..#..",
    ".....",
    "..S.."
  ],
  "slip_beta": 0.1,
  "action_cost": 0.2,
  "penalty": 2.0,
  "goal_reward": 20.0,
  "gamma": 0.95,
  "sensors": [
    {"location": [2, 4], "radius": 1, "base_probability": 0.8},
    {"location": [3, 3], "radius": 1, "base_probability": 0.8}
  ]
})";

json full_preset(double slip, double lambda_init) {
    json grid = json::parse(kFullGrid);
    grid["slip_beta"] = slip;
    return json{
        {"environment", {{"grid", grid}}},
        {"nominal", {{"temperature", 0.2}}},
        {"initial_temperature", 0.2},
        {"detection", {{"epsilon", 3.0}, {"alpha", 0.2}}},
        {"hyper",
         {{"eta", 0.005},
          {"kappa", 0.01},
          {"lambda_init", lambda_init},
          {"beta_init", 1.0},
          {"kl_target", 0.01},
          {"delta0", 1e-3},
          {"batches", 20},
          {"trajectories_per_batch", 40},
          {"horizon", 100},
          {"max_outer_iterations", 400},
          {"weight_clip", 1e3}}},
        {"seed", 1},
        {"eval_samples", 2000},
    };
}

json mini_preset() {
    return json{
        {"environment", {{"grid", json::parse(kMiniGrid)}}},
        {"nominal", {{"temperature", 0.3}}},
        {"initial_temperature", 0.3},
        {"detection", {{"epsilon", 3.0}, {"alpha", 0.2}}},
        {"hyper",
         {{"eta", 0.05},
          {"kappa", 0.5},
          {"lambda_init", 10.0},
          {"beta_init", 1.0},
          {"kl_target", 0.01},
          {"delta0", 1e-6},
          {"batches", 10},
          {"trajectories_per_batch", 40},
          {"horizon", 40},
          {"max_outer_iterations", 150},
          {"weight_clip", 1e3}}},
        {"seed", 7},
        {"eval_samples", 4000},
    };
}

const std::map<std::string, json>& presets() {
    static const std::map<std::string, json> table = {
        {"full-10x10-b005", full_preset(0.05, 40.0)},
        {"full-10x10-b010", full_preset(0.10, 10.0)},
        {"full-10x10-b015", full_preset(0.15, 10.0)},
        {"mini-5x5", mini_preset()},
    };
    return table;
}

template <typename T>
T field(const json& obj, const std::string& section, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(section + "." + key + " has the wrong type");
    }
}

std::filesystem::path resolve_path(const std::filesystem::path& base, const std::string& p) {
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

void require_file(const std::filesystem::path& p, const char* what) {
    if (!std::filesystem::exists(p)) throw ConfigError(std::string(what) + " file not found: " + p.string());
}

}  // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names;
    for (const auto& [name, doc] : presets()) names.push_back(name);
    return names;
}

json preset_config(const std::string& name) {
    auto it = presets().find(name);
    if (it == presets().end()) throw ConfigError("unknown preset '" + name + "'");
    return it->second;
}

Experiment resolve_experiment(const json& raw, const std::filesystem::path& base_dir,
                              std::optional<double> slip_override) {
    if (!raw.is_object()) throw ConfigError("configuration must be a JSON object");
    json config = raw;
    if (raw.contains("preset")) {
        config = preset_config(raw.at("preset").get<std::string>());
        json overrides = raw;
        overrides.erase("preset");
        config.merge_patch(overrides);
    }

    Experiment ex;
    const json env = config.value("environment", json::object());
    const json nominal_cfg = config.value("nominal", json::object());
    const double nominal_temperature = field(nominal_cfg, "nominal", "temperature", 1.0);
    const double initial_temperature = field(config, "config", "initial_temperature", 1.0);
    if (!(nominal_temperature > 0.0)) throw ConfigError("nominal.temperature must be positive");
    if (!(initial_temperature > 0.0)) throw ConfigError("initial_temperature must be positive");

    try {
        if (env.contains("grid") || env.contains("grid_file")) {
            json grid_doc;
            if (env.contains("grid")) {
                grid_doc = env.at("grid");
            } else {
                const auto path = resolve_path(base_dir, env.at("grid_file").get<std::string>());
                require_file(path, "grid");
                grid_doc = io::read_json_file(path);
            }
            if (slip_override) grid_doc["slip_beta"] = *slip_override;
            GridWorld world = io::gridworld_from_json(grid_doc);
            ex.mdp = build_gridworld(world.spec, GoalOwner::agent);
            ex.obs = build_sensor_obs_model(world.sensors, world.spec);
            const Mdp user = build_gridworld(world.spec, GoalOwner::user);
            ex.nominal_policy = softmax_policy(soft_value_iteration(user, nominal_temperature));
            ex.grid = std::move(world);
        } else if (env.contains("mdp_file")) {
            if (slip_override) throw ConfigError("slip override requires a grid environment");
            const auto mdp_path = resolve_path(base_dir, env.at("mdp_file").get<std::string>());
            require_file(mdp_path, "MDP");
            ex.mdp = io::mdp_from_json(io::read_json_file(mdp_path));
            if (!env.contains("obs_file")) throw ConfigError("environment.obs_file is required with mdp_file");
            const auto obs_path = resolve_path(base_dir, env.at("obs_file").get<std::string>());
            require_file(obs_path, "observation");
            ex.obs = io::obs_from_json(io::read_json_file(obs_path), ex.mdp.num_states, ex.mdp.num_actions);
            if (env.contains("nominal_policy_file")) {
                const auto p = resolve_path(base_dir, env.at("nominal_policy_file").get<std::string>());
                require_file(p, "nominal policy");
                const PolicyParams nominal = io::policy_from_json(io::read_json_file(p));
                if (nominal.num_states() != ex.mdp.num_states || nominal.num_actions() != ex.mdp.num_actions) {
                    throw ConfigError("nominal policy dimensions do not match the MDP");
                }
                ex.nominal_policy = softmax_policy(nominal);
            } else if (env.contains("nominal_mdp_file")) {
                const auto p = resolve_path(base_dir, env.at("nominal_mdp_file").get<std::string>());
                require_file(p, "nominal MDP");
                const Mdp user = io::mdp_from_json(io::read_json_file(p));
                if (user.num_states != ex.mdp.num_states || user.num_actions != ex.mdp.num_actions) {
                    throw ConfigError("nominal MDP dimensions do not match the MDP");
                }
                ex.nominal_policy = softmax_policy(soft_value_iteration(user, nominal_temperature));
            } else {
                throw ConfigError("environment needs nominal_policy_file or nominal_mdp_file");
            }
        } else {
            throw ConfigError("environment must give grid, grid_file or mdp_file");
        }
    } catch (const io::FormatError& e) {
        throw ConfigError(e.what());
    } catch (const InvalidModel& e) {
        throw ConfigError(e.what());
    } catch (const io::json::exception& e) {
        throw ConfigError(std::string("environment: ") + e.what());
    }

    ex.initial_theta = soft_value_iteration(ex.mdp, initial_temperature);

    const json det = config.value("detection", json::object());
    ex.detection.epsilon = field(det, "detection", "epsilon", 3.0);
    ex.detection.alpha = field(det, "detection", "alpha", 0.2);
    if (det.contains("beta_threshold") && !det.at("beta_threshold").is_null()) {
        ex.detection.beta_threshold = field(det, "detection", "beta_threshold", kPosInf);
    }
    try {
        validate_detection_params(ex.detection);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("detection: ") + e.what());
    }

    const json h = config.value("hyper", json::object());
    auto& hp = ex.hyper;
    hp.eta = field(h, "hyper", "eta", hp.eta);
    hp.kappa = field(h, "hyper", "kappa", hp.kappa);
    hp.lambda_init = field(h, "hyper", "lambda_init", hp.lambda_init);
    hp.beta_init = field(h, "hyper", "beta_init", hp.beta_init);
    hp.kl_target = field(h, "hyper", "kl_target", hp.kl_target);
    hp.delta0 = field(h, "hyper", "delta0", hp.delta0);
    hp.batches = field(h, "hyper", "batches", hp.batches);
    hp.trajectories_per_batch = field(h, "hyper", "trajectories_per_batch", hp.trajectories_per_batch);
    hp.horizon = field(h, "hyper", "horizon", hp.horizon);
    hp.max_outer_iterations = field(h, "hyper", "max_outer_iterations", hp.max_outer_iterations);
    hp.weight_clip = field(h, "hyper", "weight_clip", hp.weight_clip);
    try {
        validate_hyper_params(hp);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("hyper.") + e.what());
    }

    ex.seed = field<std::uint64_t>(config, "config", "seed", 0);
    ex.eval_samples = field<std::size_t>(config, "config", "eval_samples", 2000);
    if (ex.eval_samples == 0) throw ConfigError("eval_samples must be at least 1");
    return ex;
}

EvaluationSummary evaluate_policy(const Experiment& ex, const PolicyParams& params, std::size_t samples,
                                  std::uint64_t seed) {
    if (params.num_states() != ex.mdp.num_states || params.num_actions() != ex.mdp.num_actions) {
        throw InvalidModel("policy dimensions do not match the environment");
    }
    if (samples == 0) throw std::invalid_argument("need at least one sample");
    const Hmm hmm_theta = build_hmm(ex.mdp, params, ex.obs);
    const Hmm hmm_nominal = build_hmm(ex.mdp, ex.nominal_policy, ex.obs);
    const PolicyTable policy = softmax_policy(params);
    RandomStream rng(seed);
    std::vector<double> returns;
    std::vector<ObsSequence> observations;
    returns.reserve(samples);
    observations.reserve(samples);
    for (std::size_t i = 0; i < samples; ++i) {
        const Run run = sample_trajectory(ex.mdp, policy, ex.hyper.horizon, rng);
        observations.push_back(sample_observation(ex.obs, run, rng));
        returns.push_back(discounted_return(run, ex.mdp));
    }
    EvaluationSummary summary;
    summary.samples = samples;
    summary.value = mean_and_standard_error(returns);
    summary.detection = estimate_detection_probability(observations, hmm_theta, hmm_nominal, ex.detection.epsilon);
    return summary;
}

std::string format_decimal(double v) {
    if (v == 0.0) v = 0.0;  // no "-0"
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10f", v);
    return buf;
}

void write_trace_csv(std::ostream& out, const TrainerTrace& trace) {
    out << "iter,lagrangian,value,detection,kl,lambda,beta\n";
    for (const auto& r : trace.rows) {
        out << r.iter << ',' << format_decimal(r.lagrangian) << ',' << format_decimal(r.value) << ','
            << format_decimal(r.detection) << ',' << format_decimal(r.kl) << ',' << format_decimal(r.lambda) << ','
            << format_decimal(r.beta) << '\n';
    }
}

}  // namespace covert
