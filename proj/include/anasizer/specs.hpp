#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "anasizer/rng.hpp"

namespace anasizer {

enum class Direction { Maximize, Minimize };

std::string_view to_string(Direction d);
Direction parse_direction(std::string_view s);

struct SpecEntry {
    std::string name;
    double value = 0.0;
    Direction direction = Direction::Maximize;
    friend bool operator==(const SpecEntry&, const SpecEntry&) = default;
};

/// Ordered, named circuit specifications (e.g. G, B, PM, P).
class SpecVector {
public:
    SpecVector() = default;
    explicit SpecVector(std::vector<SpecEntry> entries) : entries_(std::move(entries)) {}

    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    const SpecEntry& operator[](std::size_t i) const { return entries_[i]; }
    double value(std::size_t i) const { return entries_[i].value; }
    const std::string& name(std::size_t i) const { return entries_[i].name; }
    Direction direction(std::size_t i) const { return entries_[i].direction; }

    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws std::out_of_range for an unknown name.
    double at(std::string_view name) const;

    SpecVector with_values(std::span<const double> values) const;
    std::vector<double> values() const;

    /// Same names in the same order with the same directions.
    bool same_layout(const SpecVector& other) const;

    const std::vector<SpecEntry>& entries() const { return entries_; }

    friend bool operator==(const SpecVector&, const SpecVector&) = default;

private:
    std::vector<SpecEntry> entries_;
};

/// One axis of the goal sampling box.
struct SpecDef {
    std::string name;
    Direction direction = Direction::Maximize;
    double low = 0.0;
    double high = 0.0;
    bool log_scale = false;
};

class GoalSpace {
public:
    GoalSpace() = default;
    explicit GoalSpace(std::vector<SpecDef> specs);

    std::size_t size() const { return specs_.size(); }
    const SpecDef& operator[](std::size_t i) const { return specs_[i]; }
    const std::vector<SpecDef>& specs() const { return specs_; }

    /// Builds a SpecVector with this space's layout.
    SpecVector make(std::span<const double> values) const;
    bool contains(const SpecVector& goal) const;
    /// Per-component flag: true where the component lies outside [low, high].
    std::vector<bool> out_of_range(const SpecVector& goal) const;

private:
    std::vector<SpecDef> specs_;
};

/// Draws each spec independently: uniform, or log-uniform for log-scaled axes.
SpecVector sample_goal(const GoalSpace& space, Rng& rng);

nlohmann::json to_json(const SpecVector& s);
/// Parses {"G": 350, ...} against a layout.
SpecVector spec_from_json(const nlohmann::json& j, const GoalSpace& layout);
/// Parses "G=350,B=1.8e7,..." against a layout; missing names throw.
SpecVector parse_spec_string(std::string_view text, const GoalSpace& layout);

}  // namespace anasizer
