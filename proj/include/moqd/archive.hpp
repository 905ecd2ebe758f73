#pragma once

/// @file archive.hpp
/// CVT tessellation of the feature space and the archives built on it.

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "moqd/pareto.hpp"
#include "moqd/solution.hpp"

namespace moqd {

using Point2 = std::array<double, 2>;

class MapElitesArchive;

/// Centroids live in feature units; nearest-centroid queries measure Euclidean
/// distance after scaling each descriptor by its bound width, so both
/// descriptors weigh equally regardless of units.
class CvtTessellation {
public:
    CvtTessellation(std::vector<Point2> centroids, FeatureBounds bounds, std::uint64_t seed);

    [[nodiscard]] std::size_t size() const noexcept { return centroids_.size(); }
    [[nodiscard]] const std::vector<Point2>& centroids() const noexcept { return centroids_; }
    [[nodiscard]] const FeatureBounds& bounds() const noexcept { return bounds_; }
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

    /// Nearest centroid, lowest index on ties.
    [[nodiscard]] std::size_t nearest(const Point2& feature) const;

    [[nodiscard]] Point2 normalize(const Point2& feature) const;

private:
    std::vector<Point2> centroids_;
    std::vector<Point2> unit_;
    /// Indices of unit_ ordered by first coordinate, for pruned search.
    std::vector<std::size_t> by_x_;
    FeatureBounds bounds_;
    std::uint64_t seed_;
};

/// Lloyd's k-means on `n_samples` uniform points in `bounds`, started from a
/// seeded random subset; stops when no centroid moves more than 1e-6 (in
/// normalized units) or after 200 sweeps.
[[nodiscard]] CvtTessellation build_cvt(std::size_t cells, const FeatureBounds& bounds, std::size_t n_samples,
                                        std::uint64_t seed);

/// Process-wide memoized build_cvt; tessellations are immutable and shared.
[[nodiscard]] std::shared_ptr<const CvtTessellation> shared_cvt(std::size_t cells, const FeatureBounds& bounds,
                                                                std::size_t n_samples, std::uint64_t seed);

[[nodiscard]] std::size_t assign_cell(const FeatureVector& f, const CvtTessellation& t);

/// One bounded Pareto front per CVT cell.
class MomeArchive {
public:
    MomeArchive(std::shared_ptr<const CvtTessellation> tessellation, std::size_t front_size);

    /// Offers `s` to the front of the cell its features map to.
    InsertOutcome insert(EvaluatedSolution s);

    [[nodiscard]] const CvtTessellation& tessellation() const noexcept { return *tessellation_; }
    [[nodiscard]] std::shared_ptr<const CvtTessellation> shared_tessellation() const noexcept { return tessellation_; }
    [[nodiscard]] std::size_t num_cells() const noexcept { return cells_.size(); }
    [[nodiscard]] std::size_t front_size() const noexcept { return front_size_; }
    [[nodiscard]] const ParetoFront<EvaluatedSolution>& cell(std::size_t i) const { return cells_.at(i); }

    [[nodiscard]] std::size_t size() const;
    [[nodiscard]] std::size_t occupied() const;
    [[nodiscard]] std::vector<std::size_t> occupied_cells() const;
    [[nodiscard]] bool empty() const { return size() == 0; }

    template <typename F>
    void for_each(F&& f) const
    {
        for (std::size_t c = 0; c < cells_.size(); ++c)
            cells_[c].for_each([&](const EvaluatedSolution& s) { f(c, s); });
    }

private:
    friend std::size_t passive_sync(MomeArchive& passive, const MapElitesArchive& source);

    std::shared_ptr<const CvtTessellation> tessellation_;
    std::size_t front_size_;
    std::vector<ParetoFront<EvaluatedSolution>> cells_;
    /// Objective vectors already offered through passive_sync.
    std::set<std::vector<double>> offered_;
};

enum class ScalarRule : std::uint8_t { Stability, Magnetism, Sum };

[[nodiscard]] double scalar_fitness(const ObjectiveVector& objectives, ScalarRule rule);

/// At most one solution per cell, replaced only by a strictly fitter one.
class MapElitesArchive {
public:
    MapElitesArchive(std::shared_ptr<const CvtTessellation> tessellation, ScalarRule rule);

    InsertOutcome insert(EvaluatedSolution s);

    [[nodiscard]] const CvtTessellation& tessellation() const noexcept { return *tessellation_; }
    [[nodiscard]] ScalarRule rule() const noexcept { return rule_; }
    [[nodiscard]] std::size_t num_cells() const noexcept { return cells_.size(); }
    [[nodiscard]] const std::optional<EvaluatedSolution>& cell(std::size_t i) const { return cells_.at(i); }
    [[nodiscard]] std::size_t size() const noexcept { return stored_; }
    [[nodiscard]] std::vector<std::size_t> occupied_cells() const;

    /// Sum of scalar fitness over occupied cells.
    [[nodiscard]] double qd_score() const;

    template <typename F>
    void for_each(F&& f) const
    {
        for (std::size_t c = 0; c < cells_.size(); ++c)
            if (cells_[c])
                f(c, *cells_[c]);
    }

private:
    std::shared_ptr<const CvtTessellation> tessellation_;
    ScalarRule rule_;
    std::vector<std::optional<EvaluatedSolution>> cells_;
    std::size_t stored_ = 0;
};

/// Offers every solution of `source` to `passive`; returns how many were stored.
/// An objective vector offered once is not offered again, which makes an
/// immediate repeat a no-op even when crowding eviction dropped it.
std::size_t passive_sync(MomeArchive& passive, const MapElitesArchive& source);

// ---------------------------------------------------------------------------
// Snapshot export

struct SnapshotRow {
    std::string run_id;
    std::uint64_t iteration = 0;
    std::size_t cell = 0;
    Point2 centroid{};
    EvaluatedSolution solution;
};

struct Snapshot {
    std::string kind; // "mome" or "map_elites"
    std::string run_id;
    std::uint64_t iteration = 0;
    std::size_t front_size = 0;
    std::shared_ptr<const CvtTessellation> tessellation;
    std::vector<SnapshotRow> rows;
};

void write_snapshot(std::ostream& out, const MomeArchive& archive, const std::string& run_id, std::uint64_t iteration);
void write_snapshot(std::ostream& out, const MapElitesArchive& archive, const std::string& run_id,
                    std::uint64_t iteration);

/// Throws std::runtime_error on malformed input.
[[nodiscard]] Snapshot read_snapshot(std::istream& in);

/// Rebuilds a MOME archive from a "mome" snapshot.
[[nodiscard]] MomeArchive restore_archive(const Snapshot& snapshot);

} // namespace moqd
