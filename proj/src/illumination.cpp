#include "moqd/illumination.hpp"

#include <algorithm>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "moqd/crystal.hpp"

namespace moqd {

std::size_t IlluminationTable::populated(std::size_t level) const
{
    const auto& row = best.at(level);
    return static_cast<std::size_t>(std::count_if(row.begin(), row.end(), [](const auto& v) { return v.has_value(); }));
}

IlluminationTable illuminate(const MomeArchive& archive, std::span<const double> levels)
{
    if (archive.empty())
        throw std::invalid_argument("illuminate: archive is empty");
    for (double l : levels)
        if (!(l >= 0.0 && l <= 1.0))
            throw std::invalid_argument("illuminate: levels must lie in [0, 1]");

    double f1_min = std::numeric_limits<double>::infinity();
    double f1_max = -std::numeric_limits<double>::infinity();
    archive.for_each([&](std::size_t, const EvaluatedSolution& s) {
        f1_min = std::min(f1_min, s.objectives[0]);
        f1_max = std::max(f1_max, s.objectives[0]);
    });

    IlluminationTable table;
    table.levels.assign(levels.begin(), levels.end());
    for (double l : levels) {
        // level 1 must admit exactly the maximum, so avoid rounding past it
        const double t = l >= 1.0 ? f1_max : std::min(f1_max, f1_min + l * (f1_max - f1_min));
        table.thresholds.push_back(t);
        std::vector<std::optional<double>> row(archive.num_cells());
        archive.for_each([&](std::size_t cell, const EvaluatedSolution& s) {
            if (s.objectives[0] >= t && (!row[cell] || s.objectives[1] > *row[cell]))
                row[cell] = s.objectives[1];
        });
        table.best.push_back(std::move(row));
    }
    return table;
}

const std::vector<double>& default_illumination_levels()
{
    static const std::vector<double> levels{0.0, 0.5, 0.85, 0.9, 0.95};
    return levels;
}

void write_illumination_level(std::ostream& out, const IlluminationTable& table, std::size_t level,
                              const CvtTessellation& tessellation)
{
    const auto& row = table.best.at(level);
    out << "# level " << format_double(table.levels[level]) << "\n";
    out << "# threshold " << format_double(table.thresholds[level]) << "\n";
    out << "cell\tcentroid_0\tcentroid_1\tbest_magnetism\n";
    for (std::size_t c = 0; c < row.size(); ++c) {
        const auto& centroid = tessellation.centroids().at(c);
        out << c << '\t' << format_double(centroid[0]) << '\t' << format_double(centroid[1]) << '\t';
        if (row[c])
            out << format_double(*row[c]);
        out << '\n';
    }
}

} // namespace moqd
