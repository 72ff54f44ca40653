#include <gtest/gtest.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace {

namespace fs = std::filesystem;

struct Outcome {
    int status = -1;
    std::string output;
};

Outcome run(const std::string& args) {
    const std::string cmd = std::string(COVERT_CLI_PATH) + " " + args + " 2>&1";
    Outcome out;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (pipe == nullptr) return out;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, pipe) != nullptr) out.output += buf;
    const int raw = pclose(pipe);
    out.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("covert_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kSmallConfig = R"({"preset": "mini-5x5", "eval_samples": 200,
  "hyper": {"batches": 2, "trajectories_per_batch": 10, "horizon": 20, "max_outer_iterations": 3}})";

TEST(Cli, VerifyUnknownSuite) {
    const auto r = run("verify bogus");
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.output.find("unknown suite"), std::string::npos) << r.output;
}

TEST(Cli, VerifyTheoremSuite) {
    const auto r = run("verify theorem1");
    EXPECT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("PASS  rho=0.04: memory gap reaches the bound"), std::string::npos);
    EXPECT_NE(r.output.find("PASS  rho=0.25"), std::string::npos);
    EXPECT_NE(r.output.find("PASS  rho=0.49"), std::string::npos);
    EXPECT_EQ(r.output.find("FAIL"), std::string::npos);
}

TEST(Cli, VerifyGradientSuite) {
    const auto r = run("verify gradients");
    EXPECT_EQ(r.status, 0) << r.output;
    for (const char* what : {"value gradient", "KL gradient", "constraint gradient"}) {
        EXPECT_NE(r.output.find(std::string("PASS  three-state: ") + what), std::string::npos) << what;
    }
}

TEST(Cli, TrainWritesTraceAndPolicyAndReplays) {
    const fs::path dir = scratch("train");
    write(dir / "config.json", kSmallConfig);
    const auto a = run("train --quiet --config " + (dir / "config.json").string() + " --out " + (dir / "a").string());
    ASSERT_EQ(a.status, 0) << a.output;
    EXPECT_NE(a.output.find("detection"), std::string::npos);
    EXPECT_NE(a.output.find("lambda"), std::string::npos);
    const auto b = run("train --quiet --config " + (dir / "config.json").string() + " --out " + (dir / "b").string());
    ASSERT_EQ(b.status, 0) << b.output;
    const std::string trace = slurp(dir / "a" / "trace.csv");
    EXPECT_EQ(trace.rfind("iter,lagrangian,value,detection,kl,lambda,beta\n", 0), 0u);
    EXPECT_EQ(trace, slurp(dir / "b" / "trace.csv"));
    EXPECT_TRUE(fs::exists(dir / "a" / "policy.json"));

    const auto e = run("evaluate --config " + (dir / "config.json").string() + " --policy " +
                       (dir / "a" / "policy.json").string() + " --samples 100 --out " + (dir / "eval").string());
    EXPECT_EQ(e.status, 0) << e.output;
    EXPECT_EQ(slurp(dir / "eval" / "evaluation.csv").rfind("samples,value,value_se,detection,detection_se\n", 0), 0u);
    fs::remove_all(dir);
}

TEST(Cli, SeedFlagChangesTrace) {
    const fs::path dir = scratch("seed");
    write(dir / "config.json", kSmallConfig);
    const std::string base = "train --quiet --config " + (dir / "config.json").string();
    ASSERT_EQ(run(base + " --seed 1 --out " + (dir / "a").string()).status, 0);
    ASSERT_EQ(run(base + " --seed 2 --out " + (dir / "b").string()).status, 0);
    EXPECT_NE(slurp(dir / "a" / "trace.csv"), slurp(dir / "b" / "trace.csv"));
    fs::remove_all(dir);
}

TEST(Cli, MalformedConfigNamesTheField) {
    const fs::path dir = scratch("bad");
    write(dir / "config.json", R"({"preset": "mini-5x5", "hyper": {"eta": -0.5}})");
    const auto r = run("train --config " + (dir / "config.json").string() + " --out " + dir.string());
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("eta"), std::string::npos) << r.output;
    write(dir / "broken.json", "{ not json");
    EXPECT_EQ(run("train --config " + (dir / "broken.json").string()).status, 1);
    EXPECT_EQ(run("train --config " + (dir / "missing.json").string()).status, 1);
    EXPECT_EQ(run("train --preset nope").status, 1);
    fs::remove_all(dir);
}

TEST(Cli, EvaluateNominalIsUndetected) {
    const auto r = run("evaluate --preset mini-5x5 --policy nominal --samples 300");
    EXPECT_EQ(r.status, 0) << r.output;
    EXPECT_NE(r.output.find("detection  0.0000 +- 0.0000"), std::string::npos) << r.output;
}

TEST(Cli, EvaluateRejectsMismatchedPolicy) {
    const fs::path dir = scratch("mismatch");
    write(dir / "policy.json", R"({"num_states": 2, "num_actions": 2, "theta": [[0, 0], [0, 0]]})");
    const auto r = run("evaluate --preset mini-5x5 --policy " + (dir / "policy.json").string());
    EXPECT_EQ(r.status, 1);
    EXPECT_NE(r.output.find("dimensions"), std::string::npos) << r.output;
    fs::remove_all(dir);
}

TEST(Cli, CrossEvalEmitsThreeByThreeTable) {
    const fs::path dir = scratch("cross");
    write(dir / "config.json", R"({"preset": "mini-5x5", "eval_samples": 50})");
    const std::string cfg = (dir / "config.json").string();
    const auto r = run("cross-eval --config " + cfg + " --policy nominal --policy nominal --policy nominal --out " +
                       dir.string());
    ASSERT_EQ(r.status, 0) << r.output;
    std::istringstream in(slurp(dir / "cross_eval.csv"));
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "policy,slip_0.05,slip_0.1,slip_0.15");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        EXPECT_EQ(std::count(line.begin(), line.end(), ','), 3) << line;
    }
    EXPECT_EQ(rows, 3);
    fs::remove_all(dir);
}

TEST(Cli, RequiresSubcommand) { EXPECT_NE(run("").status, 0); }

}  // namespace
