// anasizer: train, deploy and benchmark circuit-sizing agents.
//
//   anasizer train --benchmark opamp2 --variant gat-fc --seed 7
//   anasizer eval-accuracy --checkpoint runs/<run>/checkpoint.json --goals 200
//   anasizer fom --method genetic --budget 15000 --seed 3
//
// Every command writes runs/<timestamp>-<command>/ with a manifest.json whose
// "config" block can be passed back through --config to repeat the run.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "anasizer/checkpoint.hpp"
#include "anasizer/classic.hpp"
#include "anasizer/deploy.hpp"
#include "anasizer/fom.hpp"
#include "anasizer/grad_check.hpp"
#include "anasizer/ppo.hpp"
#include "anasizer/reward.hpp"
#include "anasizer/run_io.hpp"
#include "anasizer/warm_start.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace anasizer;

namespace {

/// Bad flags, bad config values, unknown benchmarks: exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flag values land here; only flags given on the command line override the config file.
struct Flags {
    std::string config_path;
    std::string out = "runs";
    std::map<std::string, std::string> set;  // config key -> raw flag text
};

const std::vector<std::pair<std::string, std::string>> kTrainFlags = {
    {"gamma", "discount factor"},
    {"lambda", "GAE lambda"},
    {"clip", "PPO clip epsilon"},
    {"epochs", "epochs per update"},
    {"minibatch", "minibatch size (transitions)"},
    {"entropy-coef", "entropy bonus coefficient"},
    {"entropy-decay", "decay entropy bonus linearly to 0 (true/false)"},
    {"value-coef", "value loss coefficient"},
    {"lr", "Adam learning rate"},
    {"max-grad-norm", "gradient norm clip per network (<=0 disables)"},
    {"rollout-episodes", "episodes per update"},
    {"eval-interval", "episodes between curve rows"},
    {"eval-goals", "held-out goals for curve accuracy"},
    {"workers", "rollout worker threads"},
};

std::string key_of(const std::string& flag) {
    std::string k = flag;
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

void add_option(CLI::App* cmd, Flags& f, const std::string& flag, const std::string& help) {
    cmd->add_option_function<std::string>(
        "--" + flag, [&f, k = key_of(flag)](const std::string& v) { f.set[k] = v; }, help);
}

void add_common(CLI::App* cmd, Flags& f, bool training) {
    cmd->add_option("--config", f.config_path, "JSON config file (flags override its keys)");
    cmd->add_option("--out", f.out, "base directory for run directories")->capture_default_str();
    add_option(cmd, f, "benchmark", "built-in name (opamp2, rfpa, toy) or netlist path");
    add_option(cmd, f, "variant", "gcn-fc, gat-fc, baseline-a, baseline-b-gcn, baseline-b-gat");
    add_option(cmd, f, "seed", "64-bit run seed");
    add_option(cmd, f, "episodes", "training episodes");
    add_option(cmd, f, "max-steps", "episode step limit");
    add_option(cmd, f, "fidelity", "fine or coarse");
    add_option(cmd, f, "goals", "number of sampled goals");
    add_option(cmd, f, "budget", "evaluator call budget");
    if (training)
        for (const auto& [flag, help] : kTrainFlags) add_option(cmd, f, flag, help);
}

json parse_scalar(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::exception&) {
        return text;  // bare strings such as gat-fc
    }
}

json load_config(const Flags& f, json defaults) {
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw ConfigError("cannot open config " + f.config_path);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("config " + f.config_path + " is not valid JSON: " + e.what());
        }
        if (!file.is_object()) throw ConfigError("config must be a JSON object");
        for (const auto& [k, v] : file.items()) defaults[k] = v;
    }
    for (const auto& [k, v] : f.set) {
        json val = parse_scalar(v);
        if (k == "benchmark" || k == "variant" || k == "fidelity" || k == "method" || k == "mode" || k == "goal" ||
            k == "checkpoint")
            val = v;
        defaults[k] = val;
    }
    return defaults;
}

template <class T>
T get(const json& cfg, const std::string& key) {
    try {
        return cfg.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config key '" + key + "': " + e.what());
    }
}

std::shared_ptr<const Benchmark> benchmark_of(const json& cfg) {
    try {
        return std::make_shared<const Benchmark>(load_benchmark(get<std::string>(cfg, "benchmark")));
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

TrainConfig train_config_of(const json& cfg, const TrainConfig& base = {}) {
    static const std::set<std::string> keys = {"episodes",  "max_steps",   "gamma",        "lambda",
                                               "clip",      "epochs",      "minibatch",    "entropy_coef",
                                               "entropy_decay", "value_coef", "lr",        "max_grad_norm",
                                               "seed",      "rollout_episodes", "fidelity", "eval_interval",
                                               "eval_goals", "workers"};
    json sub = json::object();
    for (const auto& [k, v] : cfg.items())
        if (keys.contains(k)) sub[k] = v;
    try {
        TrainConfig tc = train_config_from_json(sub, base);
        tc.validate();
        return tc;
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
}

/// Run directory with its manifest written up front.
struct Run {
    fs::path dir;
    RunManifest manifest;
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();

    Run(const std::string& base, const std::string& command, const json& cfg) {
        dir = create_run_dir(base, command);
        manifest.command = command;
        manifest.config = cfg;
        manifest.seed = cfg.value("seed", std::uint64_t{0});
        manifest.benchmark = cfg.value("benchmark", "");
        manifest.started = utc_timestamp(false);
        write_manifest(dir, manifest);
        std::cerr << "run directory: " << dir.string() << '\n';
    }

    void output(const std::string& rel, const std::string& content) {
        write_text(dir / rel, content);
        manifest.outputs.push_back(rel);
    }

    void finish(const std::string& status) {
        manifest.status = status;
        manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_manifest(dir, manifest);
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

/// One row for `summary`: method, benchmark, seed and whichever metrics apply.
void summary_row(Run& run, const std::string& method, const json& metrics) {
    json row = metrics;
    row["method"] = method;
    row["benchmark"] = run.manifest.benchmark;
    row["seed"] = run.manifest.seed;
    run.output("reports/summary_row.json", row.dump(2) + "\n");
}

Agent load_agent(const json& cfg, std::shared_ptr<const Benchmark>& bench) {
    const auto path = get<std::string>(cfg, "checkpoint");
    try {
        if (!cfg.contains("benchmark")) {
            const CheckpointInfo info = read_checkpoint_info(path);
            bench = std::make_shared<const Benchmark>(load_benchmark(info.benchmark));
        } else {
            bench = benchmark_of(cfg);
        }
        return load_checkpoint(path, bench);
    } catch (const CheckpointError& e) {
        throw ConfigError(e.what());
    }
}

CircuitEnv deploy_env(const json& cfg, const std::shared_ptr<const Benchmark>& bench) {
    const Fidelity f = parse_fidelity(cfg.value("fidelity", "fine"));
    return CircuitEnv(bench, f, mix_seed(cfg.value("seed", std::uint64_t{0}), "coarse-noise"),
                      cfg.value("max_steps", 0));
}

std::vector<SpecVector> goals_of(const json& cfg, const Benchmark& bench, const std::vector<std::string>& texts) {
    std::vector<SpecVector> out;
    try {
        for (const auto& t : texts) out.push_back(parse_spec_string(t, bench.goals));
        if (cfg.contains("goal_list"))
            for (const auto& g : cfg.at("goal_list")) out.push_back(spec_from_json(g, bench.goals));
    } catch (const std::exception& e) {
        throw ConfigError(std::string("bad goal: ") + e.what());
    }
    return out;
}

// --- commands ---------------------------------------------------------------

int cmd_train(const json& cfg, const std::string& out) {
    auto bench = benchmark_of(cfg);
    TrainConfig tc = train_config_of(cfg);
    const Variant variant = parse_variant(get<std::string>(cfg, "variant"));
    json full = cfg;
    const json tc_json = to_json(tc);
    for (const auto& [k, v] : tc_json.items()) full[k] = v;

    Run run(out, "train", full);
    Agent agent(bench, variant, tc.seed);
    const CircuitEnv env = make_training_env(bench, tc);
    std::cerr << "training " << to_string(variant) << " on " << bench->name << " (" << to_string(env.fidelity())
              << "), " << (tc.episodes > 0 ? tc.episodes : default_episodes(*bench)) << " episodes\n";
    const TrainResult res = train(agent, env, tc, [](const CurvePoint& p) {
        std::cerr << "  episode " << p.episode << "  reward " << fmt(p.mean_reward) << "  length "
                  << fmt(p.mean_length) << "  accuracy " << fmt(p.deploy_accuracy) << '\n';
    });
    run.output("curves.csv", curves_csv(res.curve));
    run.output("checkpoint.json", checkpoint_to_json(agent).dump(1) + "\n");
    run.output("checkpoint_best.json", res.best_checkpoint.dump(1) + "\n");
    run.finish("ok");
    std::cout << "best curve accuracy " << res.best_accuracy << " at episode " << res.best_episode << '\n';
    return 0;
}

int cmd_eval_accuracy(const json& cfg, const std::string& out) {
    std::shared_ptr<const Benchmark> bench;
    const Agent agent = load_agent(cfg, bench);
    const CircuitEnv env = deploy_env(cfg, bench);
    const int n = cfg.value("goals", kDefaultAccuracyGoals);
    if (n <= 0) throw ConfigError("--goals must be positive");
    const DeployMode mode = parse_deploy_mode(cfg.value("mode", "greedy"));

    Run run(out, "eval-accuracy", cfg);
    run.manifest.benchmark = bench->name;
    Rng rng = Rng::stream(cfg.value("seed", std::uint64_t{0}), "accuracy-goals");
    const AccuracyResult acc = measure_accuracy(agent, env, n, rng, mode);
    const json rep{{"goals", acc.goals},       {"successes", acc.successes}, {"accuracy", acc.accuracy},
                   {"mean_steps", acc.mean_steps}, {"success", acc.success}, {"steps", acc.steps},
                   {"fidelity", to_string(env.fidelity())}, {"mode", to_string(mode)}};
    run.output("reports/accuracy.json", rep.dump(2) + "\n");
    summary_row(run, std::string(to_string(agent.variant())),
                {{"accuracy", acc.accuracy}, {"mean_steps", acc.mean_steps}});
    run.finish("ok");
    std::cout << "accuracy " << acc.accuracy << " (" << acc.successes << "/" << acc.goals << "), mean steps "
              << acc.mean_steps << '\n';
    return 0;
}

int cmd_deploy(const json& cfg, const std::string& out, const std::vector<std::string>& goal_texts) {
    std::shared_ptr<const Benchmark> bench;
    const Agent agent = load_agent(cfg, bench);
    const CircuitEnv env = deploy_env(cfg, bench);
    std::vector<SpecVector> goals = goals_of(cfg, *bench, goal_texts);
    Rng rng = Rng::stream(cfg.value("seed", std::uint64_t{0}), "deploy-goals");
    if (goals.empty()) goals.push_back(env.sample_goal(rng));
    const DeployMode mode = parse_deploy_mode(cfg.value("mode", "greedy"));

    Run run(out, "deploy", cfg);
    run.manifest.benchmark = bench->name;
    for (std::size_t i = 0; i < goals.size(); ++i) {
        Rng actions = Rng::stream(cfg.value("seed", std::uint64_t{0}), "deploy-actions", i);
        const DeploymentReport r = deploy(agent, env, goals[i], mode, &actions);
        const std::string stem = "reports/deploy_" + std::to_string(i);
        run.output(stem + ".json", to_json(r).dump(2) + "\n");
        run.output(stem + "_trace.csv", trace_csv(r));
        run.output(stem + "_warm_start.json", warm_start_json(r, *bench).dump(2) + "\n");
        std::cout << "goal " << i << ": " << (r.success ? "met" : "not met") << " after " << r.steps << " steps\n";
    }
    run.finish("ok");
    return 0;
}

int cmd_generalize(const json& cfg, const std::string& out, const std::vector<std::string>& goal_texts) {
    std::shared_ptr<const Benchmark> bench;
    const Agent agent = load_agent(cfg, bench);
    const CircuitEnv env = deploy_env(cfg, bench);
    std::vector<SpecVector> goals = goals_of(cfg, *bench, goal_texts);
    if (goals.empty()) {
        if (bench->name != "opamp2") throw ConfigError("generalize needs --goal for benchmark " + bench->name);
        goals.push_back(parse_spec_string("G=225,B=2.6e7,PM=65,P=6e-3", bench->goals));
    }
    Run run(out, "generalize", cfg);
    run.manifest.benchmark = bench->name;
    const auto reps = generalize(agent, env, goals, parse_deploy_mode(cfg.value("mode", "greedy")));
    json all = json::array();
    for (std::size_t i = 0; i < reps.size(); ++i) {
        const auto& g = reps[i];
        all.push_back({{"report", to_json(g.report)}, {"out_of_range", g.out_of_range}, {"in_range", g.in_range}});
        run.output("reports/generalize_" + std::to_string(i) + "_trace.csv", trace_csv(g.report));
        if (g.in_range) std::cerr << "warning: goal " << i << " lies inside the training box\n";
        std::cout << "goal " << i << ": " << (g.report.success ? "met" : "not met") << " after " << g.report.steps
                  << " steps; unseen components:";
        for (const auto& n : g.out_of_range) std::cout << ' ' << n;
        std::cout << '\n';
    }
    run.output("reports/generalize.json", all.dump(2) + "\n");
    run.finish("ok");
    return 0;
}

int cmd_fom(const json& cfg, const std::string& out) {
    auto bench = benchmark_of(cfg);
    FomConfig fc;
    fc.budget = cfg.value("budget", fc.budget);
    const FomMethod method = parse_fom_method(cfg.value("method", "rl"));
    const auto seed = cfg.value("seed", std::uint64_t{0});
    TrainConfig tc = train_config_of(cfg, fom_train_config());
    const Variant variant = parse_variant(cfg.value("variant", "gat-fc"));

    Run run(out, "fom", cfg);
    FomResult r;
    try {
        r = fom_optimize(method, bench, fc, seed, variant, tc);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    run.output("fom_curve.csv", fom_curve_csv(r.curve));
    const json rep{{"method", to_string(method)}, {"best_fom", r.best_fom}, {"evaluations", r.evaluations},
                   {"best_parameters", r.best_parameters}, {"best_specs", to_json(r.best_specs)}};
    run.output("reports/fom.json", rep.dump(2) + "\n");
    summary_row(run, std::string(to_string(method)), {{"fom", r.best_fom}});
    run.finish("ok");
    std::cout << to_string(method) << " best FoM " << r.best_fom << " in " << r.evaluations << " evaluations\n";
    return 0;
}

int cmd_baseline(const json& cfg, const std::string& out) {
    auto bench = benchmark_of(cfg);
    const ClassicMethod method = parse_classic_method(cfg.value("method", "genetic"));
    const long budget = cfg.value("budget", 5000L);
    const int n = cfg.value("goals", 100);
    const auto seed = cfg.value("seed", std::uint64_t{0});
    if (budget <= 0 || n <= 0) throw ConfigError("--budget and --goals must be positive");
    const CircuitEnv env = deploy_env(cfg, bench);

    Run run(out, "baseline", cfg);
    Rng goal_rng = Rng::stream(seed, "baseline-goals");
    int successes = 0;
    double calls = 0.0;
    json per_goal = json::array();
    for (int i = 0; i < n; ++i) {
        const SpecVector goal = env.sample_goal(goal_rng);
        Rng rng = Rng::stream(seed, "baseline-search", static_cast<std::uint64_t>(i));
        const ClassicReport r = classic_optimize(method, env, goal, budget, rng);
        successes += r.success;
        if (r.success) calls += static_cast<double>(r.evaluations);
        per_goal.push_back({{"goal", to_json(goal)}, {"success", r.success}, {"evaluations", r.evaluations},
                            {"best_reward", r.best_score}, {"best_parameters", r.best_parameters}});
    }
    const double acc = static_cast<double>(successes) / n;
    const double mean_calls = successes ? calls / successes : 0.0;
    run.output("reports/baseline.json", json{{"method", to_string(method)}, {"budget", budget}, {"accuracy", acc},
                                             {"mean_evaluations", mean_calls}, {"goals", per_goal}}
                                            .dump(2) + "\n");
    summary_row(run, std::string(to_string(method)), {{"accuracy", acc}, {"mean_evaluations", mean_calls}});
    run.finish("ok");
    std::cout << to_string(method) << ": " << successes << "/" << n << " goals met, mean evaluations "
              << mean_calls << '\n';
    return 0;
}

int cmd_grad_check(const json& cfg) {
    const int trials = cfg.value("trials", 100);
    const auto seed = cfg.value("seed", std::uint64_t{0});
    auto bench = std::make_shared<const Benchmark>(load_benchmark(cfg.value("benchmark", "opamp2")));
    auto results = check_ops(trials, seed);
    for (auto& r : check_networks(bench, trials, seed)) results.push_back(r);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.passed() ? "ok   " : "FAIL ") << r.name << "  max rel error " << r.max_rel_error << '\n';
        ok = ok && r.passed();
    }
    return ok ? 0 : 1;
}

int cmd_summary(const json& cfg, const std::string& out) {
    const fs::path base = cfg.value("runs", out);
    struct Acc {
        std::vector<double> accuracy, steps, fom;
    };
    std::map<std::pair<std::string, std::string>, Acc> groups;
    if (fs::exists(base))
        for (const auto& entry : fs::directory_iterator(base)) {
            const fs::path row = entry.path() / "reports" / "summary_row.json";
            if (!fs::exists(row)) continue;
            std::ifstream in(row);
            const json j = json::parse(in);
            Acc& a = groups[{j.value("benchmark", ""), j.value("method", "")}];
            if (j.contains("accuracy")) a.accuracy.push_back(j["accuracy"].get<double>());
            if (j.contains("mean_steps")) a.steps.push_back(j["mean_steps"].get<double>());
            if (j.contains("fom")) a.fom.push_back(j["fom"].get<double>());
        }
    auto stats = [](std::vector<double> v) -> std::string {
        if (v.empty()) return ",";
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        std::sort(v.begin(), v.end());
        const std::size_t h = v.size() / 2;
        const double median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
        return fmt(mean) + "," + fmt(median);
    };
    std::ostringstream csv;
    csv << "benchmark,method,runs,accuracy_mean,accuracy_median,steps_mean,steps_median,fom_mean,fom_median\n";
    for (const auto& [key, a] : groups) {
        const std::size_t runs = std::max({a.accuracy.size(), a.steps.size(), a.fom.size()});
        csv << key.first << ',' << key.second << ',' << runs << ',' << stats(a.accuracy) << ',' << stats(a.steps)
            << ',' << stats(a.fom) << '\n';
    }
    std::cout << csv.str();
    if (cfg.value("write", true)) {
        Run run(base.string(), "summary", cfg);
        run.output("summary.csv", csv.str());
        run.finish("ok");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Graph-network reinforcement learning for analog circuit sizing"};
    app.require_subcommand(1);
    Flags f;
    std::vector<std::string> goal_texts;

    auto* train = app.add_subcommand("train", "train an agent; writes curves.csv and checkpoints");
    add_common(train, f, true);

    auto* deploy_cmd = app.add_subcommand("deploy", "run a trained policy on goals; writes traces and warm-start files");
    auto* eval = app.add_subcommand("eval-accuracy", "deployment accuracy over sampled goals");
    auto* gen = app.add_subcommand("generalize", "deploy on goals outside the training box");
    for (auto* c : {deploy_cmd, eval, gen}) {
        add_common(c, f, false);
        add_option(c, f, "checkpoint", "checkpoint file");
        add_option(c, f, "mode", "greedy or sampled");
    }
    for (auto* c : {deploy_cmd, gen}) c->add_option("--goal", goal_texts, "goal such as G=350,B=1.8e7,PM=57,P=1e-3");

    auto* fom = app.add_subcommand("fom", "maximize the RF PA figure of merit");
    add_common(fom, f, true);
    add_option(fom, f, "method", "rl, genetic, annealing or random");

    auto* base = app.add_subcommand("baseline", "classic optimizers on sampled goals");
    add_common(base, f, false);
    add_option(base, f, "method", "genetic, annealing or random");

    auto* grad = app.add_subcommand("grad-check", "finite-difference checks of every op and network");
    add_common(grad, f, false);
    add_option(grad, f, "trials", "random trials per check");

    auto* summary = app.add_subcommand("summary", "aggregate summary rows of earlier runs as CSV");
    add_common(summary, f, false);
    add_option(summary, f, "runs", "directory holding run directories (default: --out)");
    add_option(summary, f, "write", "also write summary.csv into a new run directory (true/false)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (train->parsed()) {
            json d{{"benchmark", "opamp2"}, {"variant", "gat-fc"}, {"seed", 0}};
            return cmd_train(load_config(f, d), f.out);
        }
        if (eval->parsed()) return cmd_eval_accuracy(load_config(f, {{"seed", 0}}), f.out);
        if (deploy_cmd->parsed()) return cmd_deploy(load_config(f, {{"seed", 0}}), f.out, goal_texts);
        if (gen->parsed()) return cmd_generalize(load_config(f, {{"seed", 0}}), f.out, goal_texts);
        if (fom->parsed()) return cmd_fom(load_config(f, {{"benchmark", "rfpa"}, {"seed", 0}}), f.out);
        if (base->parsed())
            return cmd_baseline(load_config(f, {{"benchmark", "opamp2"}, {"seed", 0}}), f.out);
        if (grad->parsed()) return cmd_grad_check(load_config(f, {{"seed", 0}}));
        if (summary->parsed()) return cmd_summary(load_config(f, json::object()), f.out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
