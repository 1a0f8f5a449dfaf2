#include "anasizer/checkpoint.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

namespace anasizer {

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix matrix_from(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto data = j.at("data").get<std::vector<double>>();
    if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw CheckpointError("checkpoint tensor has inconsistent shape");
    Matrix m(rows, cols);
    std::copy(data.begin(), data.end(), m.data());
    return m;
}

json network_json(const Network& net) {
    json layers = json::array();
    for (std::size_t i = 0; i < net.params().size(); ++i) {
        json l = matrix_json(net.params()[i]);
        l["name"] = net.names()[i];
        layers.push_back(std::move(l));
    }
    return layers;
}

void restore_network(Network& net, const json& layers, const char* what) {
    if (!layers.is_array() || layers.size() != net.params().size())
        throw CheckpointError(std::string("checkpoint ") + what + " layer count does not match descriptor");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& l = layers[i];
        if (l.at("name").get<std::string>() != net.names()[i])
            throw CheckpointError(std::string("checkpoint ") + what + " layer " + std::to_string(i) + " is '" +
                                  l.at("name").get<std::string>() + "', expected '" + net.names()[i] + "'");
        Matrix m = matrix_from(l);
        if (m.rows() != net.params()[i].rows() || m.cols() != net.params()[i].cols())
            throw CheckpointError(std::string("checkpoint ") + what + " layer '" + net.names()[i] + "' has wrong shape");
        net.params()[i] = std::move(m);
    }
}

json read_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw CheckpointError("corrupt checkpoint " + path.string() + ": " + e.what());
    }
}

void check_version(const json& j) {
    if (!j.is_object() || !j.contains("version")) throw CheckpointError("checkpoint has no version field");
    const int v = j.at("version").get<int>();
    if (v != kCheckpointVersion)
        throw CheckpointError("checkpoint version " + std::to_string(v) + " is not supported (expected " +
                              std::to_string(kCheckpointVersion) + ")");
}

}  // namespace

json checkpoint_to_json(const Agent& agent) {
    const Adam& opt = agent.optimizer();
    json m = json::array(), v = json::array();
    for (const auto& x : opt.first_moments()) m.push_back(matrix_json(x));
    for (const auto& x : opt.second_moments()) v.push_back(matrix_json(x));
    return {{"version", kCheckpointVersion},
            {"variant", std::string(to_string(agent.variant()))},
            {"benchmark", agent.benchmark().name},
            {"descriptor", to_json(agent.arch())},
            {"policy", network_json(agent.policy())},
            {"value", network_json(agent.value())},
            {"optimizer", {{"lr", opt.config().lr}, {"t", opt.steps()}, {"m", m}, {"v", v}}}};
}

Agent agent_from_json(const json& j, std::shared_ptr<const Benchmark> bench) {
    check_version(j);
    try {
        const auto name = j.at("benchmark").get<std::string>();
        const ArchDescriptor arch = descriptor_from_json(j.at("descriptor"));
        if (name != bench->name || arch.num_params != static_cast<int>(bench->num_params()))
            throw BenchmarkMismatch("checkpoint was trained on '" + name + "' (M=" + std::to_string(arch.num_params) +
                                    "), environment is '" + bench->name + "' (M=" +
                                    std::to_string(bench->num_params()) + ")");
        Agent agent(std::move(bench), parse_variant(j.at("variant").get<std::string>()), 0, arch);
        if (!(agent.arch() == arch)) throw CheckpointError("checkpoint descriptor does not match benchmark encoder");
        restore_network(agent.policy(), j.at("policy"), "policy");
        restore_network(agent.value(), j.at("value"), "value");

        const auto& o = j.at("optimizer");
        std::vector<Matrix> m, v;
        for (const auto& x : o.at("m")) m.push_back(matrix_from(x));
        for (const auto& x : o.at("v")) v.push_back(matrix_from(x));
        agent.optimizer().set_lr(o.at("lr").get<double>());
        agent.optimizer().restore(o.at("t").get<long>(), std::move(m), std::move(v));
        agent.refresh();
        return agent;
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
}

void save_checkpoint(const Agent& agent, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out << checkpoint_to_json(agent).dump(1) << '\n';
    if (!out) throw std::runtime_error("failed writing checkpoint " + path.string());
}

Agent load_checkpoint(const std::filesystem::path& path, std::shared_ptr<const Benchmark> bench) {
    return agent_from_json(read_json(path), std::move(bench));
}

CheckpointInfo read_checkpoint_info(const std::filesystem::path& path) {
    const json j = read_json(path);
    check_version(j);
    try {
        return {j.at("benchmark").get<std::string>(), parse_variant(j.at("variant").get<std::string>()),
                descriptor_from_json(j.at("descriptor"))};
    } catch (const json::exception& e) {
        throw CheckpointError(std::string("corrupt checkpoint: ") + e.what());
    }
}

}  // namespace anasizer
