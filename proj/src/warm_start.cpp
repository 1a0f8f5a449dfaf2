#include "anasizer/warm_start.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace anasizer {

nlohmann::json warm_start_json(const DeploymentReport& r, const Benchmark& bench) {
    const Topology& t = *bench.topology;
    std::vector<std::string> labels;
    for (std::size_t k = 0; k < t.num_params(); ++k) labels.push_back(t.param_label(k));

    auto named = [&](const std::vector<double>& p) {
        nlohmann::json o = nlohmann::json::object();
        for (std::size_t k = 0; k < p.size(); ++k) o[labels[k]] = p[k];
        return o;
    };

    // Best state: highest reward among the steps taken, or the start if none.
    std::size_t best = 0;
    for (std::size_t i = 0; i < r.rewards.size(); ++i)
        if (best == 0 || r.rewards[i] > r.rewards[best - 1]) best = i + 1;

    nlohmann::json steps = nlohmann::json::array();
    for (std::size_t i = 0; i < r.parameters.size(); ++i) {
        nlohmann::json s{{"step", i}, {"parameters", named(r.parameters[i])}, {"specs", to_json(r.trace[i])}};
        if (i > 0) s["reward"] = r.rewards[i - 1];
        steps.push_back(std::move(s));
    }
    return {{"benchmark", bench.name},
            {"goal", to_json(r.goal)},
            {"success", r.success},
            {"steps", steps},
            {"best", {{"step", best}, {"parameters", named(r.parameters[best])}, {"specs", to_json(r.trace[best])}}}};
}

void export_warm_start(const DeploymentReport& r, const Benchmark& bench, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write warm-start file " + path.string());
    out << warm_start_json(r, bench).dump(2) << '\n';
    if (!out) throw std::runtime_error("failed writing warm-start file " + path.string());
}

CircuitGraph import_warm_start(const std::filesystem::path& path, const Benchmark& bench) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open warm-start file " + path.string());
    const nlohmann::json j = nlohmann::json::parse(in);
    if (j.at("benchmark").get<std::string>() != bench.name)
        throw std::invalid_argument("warm-start file is for '" + j.at("benchmark").get<std::string>() + "'");
    const auto& p = j.at("best").at("parameters");
    const Topology& t = *bench.topology;
    std::vector<double> v(t.num_params());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = p.at(t.param_label(k)).get<double>();
    return bench.initial().with_parameters(v);
}

}  // namespace anasizer
