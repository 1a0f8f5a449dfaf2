#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

#include <nlohmann/json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("anasizer_cli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run(const std::string& args) {
    const std::string cmd = std::string(ANASIZER_CLI) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// The single run directory under `base` whose name ends in `command`.
fs::path run_dir(const fs::path& base, const std::string& command) {
    fs::path found;
    for (const auto& e : fs::directory_iterator(base)) {
        const std::string name = e.path().filename().string();
        if (name.size() >= command.size() && name.compare(name.size() - command.size(), command.size(), command) == 0) {
            EXPECT_TRUE(found.empty()) << "several " << command << " runs";
            found = e.path();
        }
    }
    return found;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const std::string kTinyTrain = "--benchmark toy --episodes 32 --eval-interval 16 --eval-goals 4 --seed 7";

}  // namespace

TEST(Cli, UsageErrorsExitTwo) {
    EXPECT_EQ(run(""), 2);
    EXPECT_EQ(run("frobnicate"), 2);
    EXPECT_EQ(run("train --no-such-flag 1"), 2);
}

TEST(Cli, ConfigErrorsExitTwo) {
    const fs::path base = fresh_dir("config");
    EXPECT_EQ(run("train --benchmark toy --gamma 2 --out " + base.string()), 2);
    EXPECT_EQ(run("train --benchmark nowhere --out " + base.string()), 2);
    EXPECT_EQ(run("train --config " + (base / "missing.json").string() + " --out " + base.string()), 2);
    std::ofstream(base / "bad.json") << "{not json";
    EXPECT_EQ(run("train --config " + (base / "bad.json").string() + " --out " + base.string()), 2);
}

TEST(Cli, UnreadableCheckpointIsAConfigError) {
    const fs::path base = fresh_dir("checkpoint");
    std::ofstream(base / "ckpt.json") << "{\"version\": 1}";
    EXPECT_EQ(run("eval-accuracy --benchmark toy --checkpoint " + (base / "ckpt.json").string() + " --out " +
                  base.string()),
              2);
}

TEST(Cli, RuntimeFailureExitsOne) {
    // The output base is a regular file, so the run directory cannot be created.
    const fs::path base = fresh_dir("runtime");
    std::ofstream(base / "file") << "x";
    EXPECT_EQ(run("fom --method random --budget 30 --out " + (base / "file").string()), 1);
}

TEST(Cli, TrainWritesCheckpointCurvesAndManifest) {
    const fs::path base = fresh_dir("train");
    ASSERT_EQ(run("train " + kTinyTrain + " --out " + base.string()), 0);
    const fs::path dir = run_dir(base, "train");
    ASSERT_FALSE(dir.empty());
    for (const char* f : {"manifest.json", "curves.csv", "checkpoint.json", "checkpoint_best.json"})
        EXPECT_TRUE(fs::exists(dir / f)) << f;
    const json m = json::parse(slurp(dir / "manifest.json"));
    EXPECT_EQ(m.at("command"), "train");
    EXPECT_EQ(m.at("seed"), 7);
    EXPECT_EQ(m.at("benchmark"), "toy");
    EXPECT_EQ(m.at("status"), "ok");
    const std::string curves = slurp(dir / "curves.csv");
    EXPECT_EQ(curves.substr(0, curves.find('\n')), "episode,mean_reward,mean_length,deploy_accuracy");
    EXPECT_EQ(std::count(curves.begin(), curves.end(), '\n'), 3);
}

TEST(Cli, ManifestConfigReproducesRun) {
    const fs::path base = fresh_dir("replay");
    ASSERT_EQ(run("train " + kTinyTrain + " --out " + (base / "a").string()), 0);
    const fs::path first = run_dir(base / "a", "train");
    std::ofstream(base / "config.json") << json::parse(slurp(first / "manifest.json")).at("config").dump();
    ASSERT_EQ(run("train --config " + (base / "config.json").string() + " --out " + (base / "b").string()), 0);
    const fs::path second = run_dir(base / "b", "train");
    EXPECT_EQ(slurp(first / "curves.csv"), slurp(second / "curves.csv"));
    EXPECT_EQ(slurp(first / "checkpoint.json"), slurp(second / "checkpoint.json"));
}

TEST(Cli, EvaluateDeployGeneralize) {
    const fs::path base = fresh_dir("deploy");
    ASSERT_EQ(run("train " + kTinyTrain + " --out " + base.string()), 0);
    const std::string ckpt = (run_dir(base, "train") / "checkpoint.json").string();

    ASSERT_EQ(run("eval-accuracy --benchmark toy --checkpoint " + ckpt + " --goals 6 --out " + base.string()), 0);
    const json acc = json::parse(slurp(run_dir(base, "eval-accuracy") / "reports" / "accuracy.json"));
    EXPECT_EQ(acc.at("goals"), 6);

    ASSERT_EQ(run("deploy --benchmark toy --checkpoint " + ckpt + " --goal G=12,B=5e6,P=2.5e-4 --out " + base.string()),
              0);
    const fs::path d = run_dir(base, "deploy");
    EXPECT_TRUE(fs::exists(d / "reports" / "deploy_0_trace.csv"));
    EXPECT_TRUE(fs::exists(d / "reports" / "deploy_0_warm_start.json"));

    ASSERT_EQ(run("generalize --benchmark toy --checkpoint " + ckpt + " --goal G=20,B=5e6,P=2.5e-4 --out " +
                  base.string()),
              0);
    EXPECT_TRUE(fs::exists(run_dir(base, "generalize") / "reports" / "generalize.json"));

    // Checkpoint trained on toy does not fit opamp2.
    EXPECT_NE(run("eval-accuracy --benchmark opamp2 --checkpoint " + ckpt + " --goals 2 --out " + base.string()), 0);
}

TEST(Cli, FomBaselineAndSummary) {
    const fs::path base = fresh_dir("fom");
    ASSERT_EQ(run("fom --method genetic --budget 300 --out " + base.string()), 0);
    const fs::path f = run_dir(base, "fom");
    const std::string curve = slurp(f / "fom_curve.csv");
    EXPECT_EQ(curve.substr(0, curve.find('\n')), "episode,mean_fom,best_fom");
    ASSERT_EQ(run("baseline --benchmark toy --method random --goals 3 --budget 50 --out " + base.string()), 0);
    ASSERT_EQ(run("summary --out " + base.string()), 0);
    const std::string summary = slurp(run_dir(base, "summary") / "summary.csv");
    EXPECT_NE(summary.find("rfpa,genetic"), std::string::npos);
    EXPECT_NE(summary.find("toy,random"), std::string::npos);
}

TEST(Cli, GradCheckPasses) { EXPECT_EQ(run("grad-check --benchmark toy --trials 3"), 0); }
