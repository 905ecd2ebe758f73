#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "moqd/crystal.hpp"
#include "moqd/pareto.hpp"

namespace moqd {

/// Per-descriptor closed interval [lo, hi].
struct FeatureBounds {
    std::array<double, 2> lo{};
    std::array<double, 2> hi{};

    friend bool operator==(const FeatureBounds&, const FeatureBounds&) = default;
};

/// Two structure descriptors, clamped into their bounds.
struct FeatureVector {
    std::array<double, 2> values{};
    bool clamped = false;

    /// Clamps `raw` into `bounds`, recording whether anything moved.
    static FeatureVector clamp(std::array<double, 2> raw, const FeatureBounds& bounds);

    friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

enum class VariationOperator : std::uint8_t { Initialization, Strain, Permutation };

[[nodiscard]] std::string_view to_string(VariationOperator op);
[[nodiscard]] VariationOperator parse_operator(std::string_view text);

struct Provenance {
    std::uint64_t id = 0;
    std::uint64_t iteration = 0;
    /// -1 for initial-population members.
    std::int64_t parent_id = -1;
    VariationOperator op = VariationOperator::Initialization;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// Unit stored in every archive. objectives[0] = -energy, objectives[1] = magnetism.
struct EvaluatedSolution {
    CrystalGenotype genotype;
    ObjectiveVector objectives;
    FeatureVector features;
    double force_norm = 0.0;
    Provenance provenance;

    friend bool operator==(const EvaluatedSolution&, const EvaluatedSolution&) = default;
};

inline const ObjectiveVector& objectives_of(const EvaluatedSolution& s) noexcept { return s.objectives; }

} // namespace moqd
