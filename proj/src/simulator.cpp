#include "anasizer/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

namespace anasizer {

std::string_view to_string(Fidelity f) { return f == Fidelity::Coarse ? "coarse" : "fine"; }

Fidelity parse_fidelity(std::string_view s) {
    if (s == "coarse") return Fidelity::Coarse;
    if (s == "fine") return Fidelity::Fine;
    throw std::invalid_argument("unknown fidelity '" + std::string(s) + "'");
}

namespace {

struct Sized {
    double w;
    double f;
};

Sized transistor(const CircuitGraph& g, std::string_view id) {
    const auto idx = g.topology().find(id);
    if (!idx || !is_transistor(g.topology().node(*idx).kind))
        throw ShapeError(g.name() + ": expected transistor '" + std::string(id) + "'");
    return {g.value(*idx, 0), g.value(*idx, 1)};
}

double passive(const CircuitGraph& g, std::string_view id, DeviceKind kind) {
    const auto idx = g.topology().find(id);
    if (!idx || g.topology().node(*idx).kind != kind)
        throw ShapeError(g.name() + ": expected " + std::string(to_string(kind)) + " '" + std::string(id) + "'");
    return g.value(*idx, 0);
}

template <class T>
void read(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

SpecVector evaluate_opamp(const CircuitGraph& g, const OpAmpConstants& c) {
    using std::numbers::pi;
    std::array<Sized, 7> m{};
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = transistor(g, "M" + std::to_string(i + 1));
    const double cc = passive(g, "CC", DeviceKind::Capacitor) * c.cc_unit;

    const auto wf = [&](int i) { return m[static_cast<std::size_t>(i - 1)].w * m[static_cast<std::size_t>(i - 1)].f; };

    const double i_tail = c.i_ref * wf(5) / c.w_ref;
    const double i2 = i_tail * wf(6) / wf(4);
    const double gm1 = std::sqrt(2.0 * c.un_cox * (wf(1) / c.l_eff) * (0.5 * i_tail));
    const double gm6 = std::sqrt(2.0 * c.up_cox * (wf(6) / c.l_eff) * i2);
    const auto par = [](double a, double b) { return a * b / (a + b); };
    const double ro_half = 1.0 / (c.lambda * 0.5 * i_tail);  // M2, M4
    const double ro_out = 1.0 / (c.lambda * i2);              // M6, M7

    const double gain = gm1 * par(ro_half, ro_half) * gm6 * par(ro_out, ro_out);
    const double gbw = gm1 / (2.0 * pi * cc);
    const double f_p2 = gm6 / (2.0 * pi * c.c_load);
    const double f_z = gm6 / (2.0 * pi * cc);
    const double deg = 180.0 / pi;
    // Unstable settings report a tiny positive margin so every spec stays positive.
    const double pm = std::max(90.0 - deg * std::atan(gbw / f_p2) - deg * std::atan(gbw / f_z), c.pm_floor);
    const double power = c.vdd * (i_tail + i2);

    return SpecVector({{"G", gain, Direction::Maximize},
                       {"B", gbw, Direction::Maximize},
                       {"PM", pm, Direction::Maximize},
                       {"P", power, Direction::Minimize}});
}

SpecVector evaluate_rfpa(const CircuitGraph& g, Fidelity f, const RfPaConstants& c,
                         std::span<const double> coarse_eps) {
    std::array<double, 7> d{};
    for (std::size_t k = 0; k < d.size(); ++k) {
        const Sized t = transistor(g, "T" + std::to_string(k + 1));
        const double wn = (t.w - c.w_min) / c.w_span;
        const double fn = (t.f - c.f_min) / c.f_span;
        d[k] = wn * (0.5 + 0.5 * fn);
    }
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double spread = 0.0;
    for (double v : d) spread += (v - mean) * (v - mean);
    spread /= static_cast<double>(d.size());

    double p_out = std::max(c.p_floor, c.p_base + c.p_gain * mean - c.p_spread * spread);
    double eff = std::clamp(c.e_peak - c.e_curv * (mean - c.e_center) * (mean - c.e_center) - c.e_spread * spread,
                            c.e_floor, c.e_peak);
    if (f == Fidelity::Coarse) {
        if (coarse_eps.size() != 2) throw std::invalid_argument("evaluate_rfpa: coarse fidelity needs 2 error terms");
        eff *= 1.0 + coarse_eps[0];
        p_out *= 1.0 + coarse_eps[1];
    }
    return SpecVector({{"E", eff, Direction::Maximize}, {"P", p_out, Direction::Maximize}});
}

SpecVector evaluate_toy(const CircuitGraph& g, const ToyConstants& c) {
    using std::numbers::pi;
    const Sized m = transistor(g, "M1");
    const double rd = passive(g, "RD", DeviceKind::Resistor) * c.r_unit;
    const double id = 0.5 * c.un_cox * (m.w * m.f / c.l_eff) * c.v_ov * c.v_ov;
    const double gm = 2.0 * id / c.v_ov;
    const double ro = 1.0 / (c.lambda * id);
    const double rout = rd * ro / (rd + ro);
    return SpecVector({{"G", gm * rout, Direction::Maximize},
                       {"B", 1.0 / (2.0 * pi * rout * c.c_load), Direction::Maximize},
                       {"P", c.vdd * id, Direction::Minimize}});
}

ModelSpec parse_model(const nlohmann::json& j) {
    ModelSpec m;
    m.evaluator = j.at("evaluator").get<std::string>();
    const nlohmann::json k = j.value("constants", nlohmann::json::object());
    if (m.evaluator == "opamp2") {
        OpAmpConstants c;
        read(k, "un_cox", c.un_cox);
        read(k, "up_cox", c.up_cox);
        read(k, "vth", c.vth);
        read(k, "lambda", c.lambda);
        read(k, "l_eff", c.l_eff);
        read(k, "vdd", c.vdd);
        read(k, "c_load", c.c_load);
        read(k, "i_ref", c.i_ref);
        read(k, "w_ref", c.w_ref);
        read(k, "cc_unit", c.cc_unit);
        read(k, "pm_floor", c.pm_floor);
        m.constants = c;
    } else if (m.evaluator == "rfpa") {
        RfPaConstants c;
        read(k, "w_min", c.w_min);
        read(k, "w_span", c.w_span);
        read(k, "f_min", c.f_min);
        read(k, "f_span", c.f_span);
        read(k, "p_base", c.p_base);
        read(k, "p_gain", c.p_gain);
        read(k, "p_spread", c.p_spread);
        read(k, "p_floor", c.p_floor);
        read(k, "e_peak", c.e_peak);
        read(k, "e_curv", c.e_curv);
        read(k, "e_center", c.e_center);
        read(k, "e_spread", c.e_spread);
        read(k, "e_floor", c.e_floor);
        read(k, "coarse_error", c.coarse_error);
        m.constants = c;
    } else if (m.evaluator == "toy") {
        ToyConstants c;
        read(k, "un_cox", c.un_cox);
        read(k, "lambda", c.lambda);
        read(k, "l_eff", c.l_eff);
        read(k, "v_ov", c.v_ov);
        read(k, "vdd", c.vdd);
        read(k, "c_load", c.c_load);
        read(k, "r_unit", c.r_unit);
        m.constants = c;
    } else {
        throw std::invalid_argument("unknown evaluator '" + m.evaluator + "'");
    }
    if (j.contains("static_features")) {
        for (const auto& [kind, v] : j.at("static_features").items())
            m.static_features[parse_kind(kind)] = {v.at(0).get<double>(), v.at(1).get<double>()};
    }
    return m;
}

Simulator::Simulator(ModelSpec model, Fidelity fidelity, std::uint64_t noise_seed)
    : model_(std::move(model)), fidelity_(fidelity) {
    if (fidelity_ == Fidelity::Coarse) {
        const auto* pa = std::get_if<RfPaConstants>(&model_.constants);
        if (!pa) throw std::invalid_argument("coarse fidelity is only available for the RF PA model");
        Rng rng = Rng::stream(noise_seed, "coarse-noise");
        for (int i = 0; i < 2; ++i) coarse_eps_.push_back(rng.uniform(-pa->coarse_error, pa->coarse_error));
    }
}

SpecVector Simulator::evaluate(const CircuitGraph& g) const {
    return std::visit(
        [&](const auto& c) -> SpecVector {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, OpAmpConstants>)
                return evaluate_opamp(g, c);
            else if constexpr (std::is_same_v<T, RfPaConstants>)
                return evaluate_rfpa(g, fidelity_, c, coarse_eps_);
            else
                return evaluate_toy(g, c);
        },
        model_.constants);
}

}  // namespace anasizer
