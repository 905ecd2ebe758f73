#pragma once

/// @file illumination.hpp
/// Per-cell best magnetism under a minimum-stability threshold interpolated
/// between the archive's lowest and highest stability.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "moqd/archive.hpp"

namespace moqd {

struct IlluminationTable {
    std::vector<double> levels;
    /// threshold(level) = f1_min + level * (f1_max - f1_min).
    std::vector<double> thresholds;
    /// best[level][cell]: highest f2 among solutions of that cell with f1 >= threshold.
    std::vector<std::vector<std::optional<double>>> best;

    [[nodiscard]] std::size_t populated(std::size_t level) const;
};

/// Throws std::invalid_argument on an empty archive or a level outside [0, 1].
[[nodiscard]] IlluminationTable illuminate(const MomeArchive& archive, std::span<const double> levels);

/// Levels reported by default: everything, half way, and the three strict ones.
[[nodiscard]] const std::vector<double>& default_illumination_levels();

/// Tab-separated rows `cell centroid_0 centroid_1 best_magnetism` for one
/// level; the last column is empty when no solution qualifies.
void write_illumination_level(std::ostream& out, const IlluminationTable& table, std::size_t level,
                              const CvtTessellation& tessellation);

} // namespace moqd
