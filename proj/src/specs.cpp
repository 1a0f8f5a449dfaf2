#include "anasizer/specs.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace anasizer {

std::string_view to_string(Direction d) { return d == Direction::Maximize ? "max" : "min"; }

Direction parse_direction(std::string_view s) {
    if (s == "max") return Direction::Maximize;
    if (s == "min") return Direction::Minimize;
    throw std::invalid_argument("unknown spec direction '" + std::string(s) + "'");
}

std::optional<std::size_t> SpecVector::find(std::string_view name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    return std::nullopt;
}

double SpecVector::at(std::string_view name) const {
    auto i = find(name);
    if (!i) throw std::out_of_range("no spec named '" + std::string(name) + "'");
    return entries_[*i].value;
}

SpecVector SpecVector::with_values(std::span<const double> values) const {
    if (values.size() != entries_.size()) throw std::invalid_argument("SpecVector::with_values: size mismatch");
    SpecVector out = *this;
    for (std::size_t i = 0; i < values.size(); ++i) out.entries_[i].value = values[i];
    return out;
}

std::vector<double> SpecVector::values() const {
    std::vector<double> v;
    v.reserve(entries_.size());
    for (const auto& e : entries_) v.push_back(e.value);
    return v;
}

bool SpecVector::same_layout(const SpecVector& other) const {
    if (other.size() != size()) return false;
    for (std::size_t i = 0; i < size(); ++i)
        if (entries_[i].name != other.entries_[i].name || entries_[i].direction != other.entries_[i].direction)
            return false;
    return true;
}

GoalSpace::GoalSpace(std::vector<SpecDef> specs) : specs_(std::move(specs)) {
    for (const auto& s : specs_) {
        if (!(s.low <= s.high)) throw std::invalid_argument("spec '" + s.name + "': low > high");
        if (s.log_scale && s.low <= 0.0) throw std::invalid_argument("spec '" + s.name + "': log scale needs low > 0");
    }
}

SpecVector GoalSpace::make(std::span<const double> values) const {
    if (values.size() != specs_.size()) throw std::invalid_argument("GoalSpace::make: size mismatch");
    std::vector<SpecEntry> e;
    e.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) e.push_back({specs_[i].name, values[i], specs_[i].direction});
    return SpecVector(std::move(e));
}

std::vector<bool> GoalSpace::out_of_range(const SpecVector& goal) const {
    std::vector<bool> flags(specs_.size(), false);
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        const double v = goal.at(specs_[i].name);
        flags[i] = v < specs_[i].low || v > specs_[i].high;
    }
    return flags;
}

bool GoalSpace::contains(const SpecVector& goal) const {
    for (bool f : out_of_range(goal))
        if (f) return false;
    return true;
}

SpecVector sample_goal(const GoalSpace& space, Rng& rng) {
    std::vector<double> v;
    v.reserve(space.size());
    for (const auto& s : space.specs()) {
        if (s.log_scale)
            v.push_back(std::pow(10.0, rng.uniform(std::log10(s.low), std::log10(s.high))));
        else
            v.push_back(rng.uniform(s.low, s.high));
    }
    return space.make(v);
}

nlohmann::json to_json(const SpecVector& s) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& e : s.entries()) j[e.name] = e.value;
    return j;
}

SpecVector spec_from_json(const nlohmann::json& j, const GoalSpace& layout) {
    std::vector<double> v;
    for (const auto& s : layout.specs()) {
        if (!j.contains(s.name)) throw std::invalid_argument("goal is missing spec '" + s.name + "'");
        v.push_back(j.at(s.name).get<double>());
    }
    return layout.make(v);
}

SpecVector parse_spec_string(std::string_view text, const GoalSpace& layout) {
    nlohmann::json j = nlohmann::json::object();
    std::stringstream ss{std::string(text)};
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("expected NAME=VALUE, got '" + item + "'");
        try {
            j[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::logic_error&) {
            throw std::invalid_argument("bad number in '" + item + "'");
        }
    }
    return spec_from_json(j, layout);
}

}  // namespace anasizer
