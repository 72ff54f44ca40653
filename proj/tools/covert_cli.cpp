// covert: train, evaluate, verify and cross-evaluate covert policies.

#include "covert/experiment.hpp"
#include "covert/io.hpp"
#include "covert/verification.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace covert;

namespace {

constexpr int kOk = 0;
constexpr int kValidationError = 1;
constexpr int kRuntimeError = 2;

struct Source {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
};

void add_source_options(CLI::App* cmd, Source& src) {
    cmd->add_option("--config", src.config_path, "Experiment configuration (JSON)");
    cmd->add_option("--preset", src.preset, "Built-in preset name");
    cmd->add_option("--seed", src.seed, "Override the configured seed");
}

Experiment load(const Source& src, std::optional<double> slip = std::nullopt) {
    io::json doc;
    fs::path base = ".";
    if (!src.config_path.empty()) {
        if (!fs::exists(src.config_path)) throw ConfigError("config file not found: " + src.config_path);
        doc = io::read_json_file(src.config_path);
        base = fs::path(src.config_path).parent_path();
        if (base.empty()) base = ".";
        if (!src.preset.empty()) doc["preset"] = src.preset;
    } else if (!src.preset.empty()) {
        doc = io::json{{"preset", src.preset}};
    } else {
        throw ConfigError("give --config or --preset");
    }
    Experiment ex = resolve_experiment(doc, base, slip);
    if (src.seed) ex.seed = *src.seed;
    return ex;
}

/// θ = ln π, so softmax(θ) reproduces the nominal policy.
PolicyParams nominal_params(const Experiment& ex) {
    PolicyParams p(ex.mdp.num_states, ex.mdp.num_actions);
    for (std::size_t i = 0; i < p.theta.size(); ++i) {
        p.theta.data()[i] = std::log(std::max(ex.nominal_policy.prob.data()[i], 1e-300));
    }
    return p;
}

PolicyParams load_policy(const std::string& path, const Experiment& ex) {
    if (path == "nominal") return nominal_params(ex);
    if (!fs::exists(path)) throw ConfigError("policy file not found: " + path);
    PolicyParams p = io::policy_from_json(io::read_json_file(path));
    if (p.num_states() != ex.mdp.num_states || p.num_actions() != ex.mdp.num_actions) {
        throw InvalidModel("policy dimensions do not match the environment");
    }
    return p;
}

fs::path prepare_out(const std::string& dir) {
    fs::path out = dir.empty() ? fs::path(".") : fs::path(dir);
    fs::create_directories(out);
    return out;
}

void print_summary(const EvaluationSummary& s) {
    std::printf("value      %.4f +- %.4f\n", s.value.mean, s.value.std_error);
    std::printf("detection  %.4f +- %.4f\n", s.detection.mean, s.detection.std_error);
    std::printf("samples    %zu\n", s.samples);
}

int cmd_train(const Source& src, const std::string& out_dir, std::optional<std::size_t> samples, std::optional<double> slip,
              bool progress) {
    const Experiment ex = load(src, slip);
    const fs::path out = prepare_out(out_dir);
    auto on_iteration = [&](const TraceRow& r) {
        if (progress && (r.iter == 1 || r.iter % 10 == 0)) {
            std::fprintf(stderr, "iter %4zu  L %9.4f  value %8.4f  detection %.4f  kl %.5f  lambda %.3f  beta %.4f\n",
                         r.iter, r.lagrangian, r.value, r.detection, r.kl, r.lambda, r.beta);
        }
    };
    const TrainResult result = run_covert_pg(ex.mdp, ex.obs, ex.nominal_policy, ex.initial_theta, ex.detection,
                                             ex.hyper, ex.seed, on_iteration);
    {
        std::ofstream trace(out / "trace.csv");
        write_trace_csv(trace, result.trace);
    }
    io::write_json_file(out / "policy.json", io::policy_to_json(result.theta, &ex.mdp));

    const EvaluationSummary s =
        evaluate_policy(ex, result.theta, samples.value_or(ex.eval_samples), ex.seed + 1000003);
    {
        std::ofstream csv(out / "summary.csv");
        csv << "iterations,converged,value,value_se,detection,detection_se,lambda,beta\n";
        csv << result.trace.rows.size() << ',' << (result.converged ? 1 : 0) << ',' << format_decimal(s.value.mean)
            << ',' << format_decimal(s.value.std_error) << ',' << format_decimal(s.detection.mean) << ','
            << format_decimal(s.detection.std_error) << ',' << format_decimal(result.lambda) << ','
            << format_decimal(result.beta) << '\n';
    }
    std::printf("iterations %zu%s\n", result.trace.rows.size(), result.converged ? " (converged)" : "");
    print_summary(s);
    std::printf("lambda     %.4f\n", result.lambda);
    std::printf("wrote %s, %s, %s\n", (out / "trace.csv").c_str(), (out / "policy.json").c_str(),
                (out / "summary.csv").c_str());
    return kOk;
}

int cmd_evaluate(const Source& src, const std::string& policy_path, const std::string& out_dir,
                 std::optional<std::size_t> samples, std::optional<double> slip) {
    const Experiment ex = load(src, slip);
    const PolicyParams params = load_policy(policy_path, ex);
    const EvaluationSummary s = evaluate_policy(ex, params, samples.value_or(ex.eval_samples), ex.seed);
    print_summary(s);
    if (!out_dir.empty()) {
        std::ofstream csv(prepare_out(out_dir) / "evaluation.csv");
        csv << "samples,value,value_se,detection,detection_se\n";
        csv << s.samples << ',' << format_decimal(s.value.mean) << ',' << format_decimal(s.value.std_error) << ','
            << format_decimal(s.detection.mean) << ',' << format_decimal(s.detection.std_error) << '\n';
    }
    return kOk;
}

int cmd_verify(const std::string& suite) {
    const auto results = verification::run_suite(suite);
    std::size_t failed = 0;
    for (const auto& r : results) {
        std::printf("%s  %s  (deviation %.3g, tolerance %.3g)\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.deviation, r.tolerance);
        if (!r.passed) ++failed;
    }
    std::printf("%zu/%zu checks passed\n", results.size() - failed, results.size());
    return failed == 0 ? kOk : kRuntimeError;
}

int cmd_cross_eval(const Source& src, const std::vector<std::string>& policies, const std::vector<double>& slips,
                   const std::string& out_dir, std::optional<std::size_t> samples) {
    if (policies.empty()) throw ConfigError("cross-eval needs at least one --policy");
    if (slips.empty()) throw ConfigError("cross-eval needs at least one --slip value");
    const fs::path out = prepare_out(out_dir);
    std::vector<std::vector<EvaluationSummary>> table(policies.size());
    for (std::size_t j = 0; j < slips.size(); ++j) {
        const Experiment ex = load(src, slips[j]);
        for (std::size_t i = 0; i < policies.size(); ++i) {
            const PolicyParams params = load_policy(policies[i], ex);
            table[i].push_back(evaluate_policy(ex, params, samples.value_or(ex.eval_samples), ex.seed + j));
        }
    }
    // policies are labeled by the path as given on the command line
    auto label = [](const std::string& p) { return p; };

    std::ofstream matrix(out / "cross_eval.csv");
    std::ofstream detail(out / "cross_eval_detail.csv");
    matrix << "policy";
    for (double b : slips) {
        char name[32];
        std::snprintf(name, sizeof name, ",slip_%g", b);
        matrix << name;
    }
    matrix << '\n';
    detail << "policy,slip,value,value_se,detection,detection_se\n";
    std::printf("%-20s", "policy \\ slip");
    for (double b : slips) std::printf("  %15.3f", b);
    std::printf("\n");
    for (std::size_t i = 0; i < policies.size(); ++i) {
        matrix << label(policies[i]);
        std::printf("%-20s", label(policies[i]).c_str());
        for (std::size_t j = 0; j < slips.size(); ++j) {
            const auto& s = table[i][j];
            matrix << ',' << format_decimal(s.detection.mean);
            detail << label(policies[i]) << ',' << format_decimal(slips[j]) << ',' << format_decimal(s.value.mean)
                   << ',' << format_decimal(s.value.std_error) << ',' << format_decimal(s.detection.mean) << ','
                   << format_decimal(s.detection.std_error) << '\n';
            std::printf("  %7.3f +- %5.3f", s.detection.mean, s.detection.std_error);
        }
        matrix << '\n';
        std::printf("\n");
    }
    std::printf("wrote %s, %s\n", (out / "cross_eval.csv").c_str(), (out / "cross_eval_detail.csv").c_str());
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Covert policy planning against a likelihood-ratio detector"};
    app.require_subcommand(1);

    Source src;
    std::string out_dir;
    std::optional<std::size_t> samples;
    std::optional<double> slip;
    std::string policy_path;
    std::vector<std::string> policies;
    std::vector<double> slips{0.05, 0.1, 0.15};
    std::string suite;
    bool quiet = false;

    auto* train = app.add_subcommand("train", "Run the primal-dual trainer");
    add_source_options(train, src);
    train->add_option("--out", out_dir, "Output directory");
    train->add_option("--samples", samples, "Evaluation samples for the final policy");
    train->add_option("--slip", slip, "Override the grid slip parameter");
    train->add_flag("--quiet", quiet, "No per-iteration progress");

    auto* evaluate = app.add_subcommand("evaluate", "Monte Carlo value and detection of a policy");
    add_source_options(evaluate, src);
    evaluate->add_option("--policy", policy_path, "Policy file, or 'nominal'")->required();
    evaluate->add_option("--samples", samples, "Number of sampled runs");
    evaluate->add_option("--slip", slip, "Override the grid slip parameter");
    evaluate->add_option("--out", out_dir, "Directory for evaluation.csv");

    auto* verify = app.add_subcommand("verify", "Run an oracle property suite");
    verify->add_option("suite", suite, "oracle, gradients, theorem1 or all")->required();

    auto* cross = app.add_subcommand("cross-eval", "Evaluate policies across slip parameters");
    add_source_options(cross, src);
    cross->add_option("--policy", policies, "Policy file (repeatable)")->required();
    cross->add_option("--slip", slips, "Slip parameters (default 0.05 0.1 0.15)")->delimiter(',');
    cross->add_option("--samples", samples, "Sampled runs per cell");
    cross->add_option("--out", out_dir, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kValidationError;
    }

    try {
        if (*train) return cmd_train(src, out_dir, samples, slip, !quiet);
        if (*evaluate) return cmd_evaluate(src, policy_path, out_dir, samples, slip);
        if (*verify) return cmd_verify(suite);
        if (*cross) return cmd_cross_eval(src, policies, slips, out_dir, samples);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kValidationError;
    } catch (const io::FormatError& e) {
        std::fprintf(stderr, "format error: %s\n", e.what());
        return kValidationError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kValidationError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "runtime failure: %s\n", e.what());
        return kRuntimeError;
    }
    return kOk;
}
