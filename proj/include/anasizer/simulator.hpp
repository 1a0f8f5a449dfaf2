#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "anasizer/circuit.hpp"
#include "anasizer/specs.hpp"

namespace anasizer {

enum class Fidelity { Coarse, Fine };

std::string_view to_string(Fidelity f);
Fidelity parse_fidelity(std::string_view s);

class ShapeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Square-law two-stage Miller Op-Amp. SI units unless noted.
struct OpAmpConstants {
    double un_cox = 200e-6;   // A/V^2
    double up_cox = 100e-6;   // A/V^2
    double vth = 0.4;         // V
    double lambda = 0.1;      // 1/V
    double l_eff = 0.5;       // um
    double vdd = 1.2;         // V
    double c_load = 1e-12;    // F
    double i_ref = 2e-6;      // A
    double w_ref = 10.0;      // um; I_tail = I_ref * W5*F5 / w_ref
    double cc_unit = 1e-12;   // netlist capacitance unit (pF)
    double pm_floor = 0.01;   // degrees
};

/// Closed-form GaN PA stand-in; outputs E in %, P in W.
struct RfPaConstants {
    double w_min = 16.0, w_span = 84.0;
    double f_min = 1.0, f_span = 15.0;
    double p_base = 0.5, p_gain = 3.5, p_spread = 2.0, p_floor = 0.05;
    double e_peak = 75.0, e_curv = 140.0, e_center = 0.55, e_spread = 40.0, e_floor = 5.0;
    double coarse_error = 0.1;  // half-width of the per-instance relative error
};

/// Resistor-loaded common-source stage with a fixed overdrive.
struct ToyConstants {
    double un_cox = 200e-6;
    double lambda = 0.1;
    double l_eff = 0.5;
    double v_ov = 0.2;
    double vdd = 1.2;
    double c_load = 1e-12;
    double r_unit = 1e3;  // netlist resistance unit (kOhm)
};

using ModelConstants = std::variant<OpAmpConstants, RfPaConstants, ToyConstants>;

/// Companion model file of a benchmark netlist.
struct ModelSpec {
    std::string evaluator;  // "opamp2" | "rfpa" | "toy"
    ModelConstants constants;
    /// Static per-kind technology features [Vth, mobility class] (partial-graph baseline).
    std::map<DeviceKind, std::array<double, 2>> static_features;
};

ModelSpec parse_model(const nlohmann::json& j);

SpecVector evaluate_opamp(const CircuitGraph& g, const OpAmpConstants& c = {});
/// `coarse_eps` holds one relative error per output spec (E, P); ignored for Fine.
SpecVector evaluate_rfpa(const CircuitGraph& g, Fidelity f, const RfPaConstants& c = {},
                         std::span<const double> coarse_eps = {});
SpecVector evaluate_toy(const CircuitGraph& g, const ToyConstants& c = {});

/// Evaluator bound to one model and fidelity. Owns its coarse-noise draw, so two
/// instances with the same seed agree bit for bit.
class Simulator {
public:
    Simulator(ModelSpec model, Fidelity fidelity, std::uint64_t noise_seed);

    SpecVector evaluate(const CircuitGraph& g) const;
    Fidelity fidelity() const { return fidelity_; }
    const ModelSpec& model() const { return model_; }
    bool supports_coarse() const { return std::holds_alternative<RfPaConstants>(model_.constants); }
    const std::vector<double>& coarse_error() const { return coarse_eps_; }

private:
    ModelSpec model_;
    Fidelity fidelity_;
    std::vector<double> coarse_eps_;
};

}  // namespace anasizer
