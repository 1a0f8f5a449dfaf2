#include "anasizer/benchmark.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace anasizer {

namespace {

nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw NetlistError("cannot open " + p.string());
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw NetlistError("malformed JSON in " + p.string() + ": " + e.what());
    }
}

}  // namespace

std::filesystem::path default_data_dir() { return ANASIZER_DATA_DIR; }

Benchmark load_benchmark(const nlohmann::json& netlist, const nlohmann::json& model) {
    Benchmark b;
    CircuitGraph g = load_netlist(netlist);
    b.name = g.name();
    b.topology = g.topology_ptr();
    try {
        std::vector<SpecDef> defs;
        for (const auto& s : netlist.at("spec_space")) {
            defs.push_back({s.at("name").get<std::string>(), parse_direction(s.at("direction").get<std::string>()),
                            s.at("low").get<double>(), s.at("high").get<double>(), s.value("log", false)});
        }
        b.goals = GoalSpace(std::move(defs));
        b.max_steps = netlist.value("max_steps", 50);
        if (b.max_steps <= 0) throw NetlistError("max_steps must be positive");
        if (netlist.contains("scales")) {
            const auto& s = netlist.at("scales");
            if (s.contains("voltage")) b.normalization.voltage_scale = s.at("voltage").get<double>();
            for (const auto& [kind, v] : s.items())
                if (kind != "voltage") b.normalization.fixed_scale[parse_kind(kind)] = v.get<double>();
        }
        b.model = parse_model(model);
    } catch (const nlohmann::json::exception& e) {
        throw NetlistError(std::string("malformed benchmark: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw NetlistError(std::string("invalid benchmark: ") + e.what());
    }

    // Evaluator output must line up with the goal layout.
    const Simulator sim(b.model, Fidelity::Fine, 0);
    const SpecVector s0 = sim.evaluate(b.initial());
    if (!s0.same_layout(b.goals.make(std::vector<double>(b.goals.size(), 1.0))))
        throw NetlistError(b.name + ": spec_space does not match the evaluator outputs");
    return b;
}

Benchmark load_benchmark(const std::string& name_or_path) {
    std::filesystem::path p(name_or_path);
    if (!std::filesystem::exists(p) || std::filesystem::is_directory(p)) p = default_data_dir() / (name_or_path + ".json");
    if (!std::filesystem::exists(p)) throw NetlistError("unknown benchmark '" + name_or_path + "'");
    const nlohmann::json netlist = read_json(p);
    if (!netlist.contains("model")) throw NetlistError(p.string() + ": missing \"model\" entry");
    const nlohmann::json model = read_json(p.parent_path() / netlist.at("model").get<std::string>());
    return load_benchmark(netlist, model);
}

}  // namespace anasizer
