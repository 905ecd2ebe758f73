#pragma once

/// @file engine.hpp
/// Seeded optimization loop for MOME-X and the MAP-Elites baselines, plus the
/// suite runner and the on-disk run layout.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "moqd/archive.hpp"
#include "moqd/config.hpp"
#include "moqd/metrics.hpp"
#include "moqd/random.hpp"

namespace moqd {

/// Selection weights for one front: crowding distances with infinite entries
/// replaced by twice the largest finite one; uniform when no finite positive
/// distance exists.
[[nodiscard]] std::vector<double> selection_weights(std::span<const double> crowding);

/// MOME-X selection: uniform non-empty cell, then crowding-weighted member;
/// `n` draws with replacement. Throws std::invalid_argument on an empty archive.
[[nodiscard]] std::vector<const EvaluatedSolution*> select_batch(const MomeArchive& archive, std::size_t n, Rng& rng);

/// MAP-Elites selection: uniform occupied cell, with replacement.
[[nodiscard]] std::vector<const EvaluatedSolution*> select_batch(const MapElitesArchive& archive, std::size_t n,
                                                                  Rng& rng);

/// State handed to an observer after every iteration (iteration 0 is the
/// initial population).
struct IterationView {
    std::uint64_t iteration = 0;
    std::size_t evaluations = 0;
    /// Operational archive for MOME-X, passive archive for baselines.
    const MomeArchive* archive = nullptr;
    const MapElitesArchive* me_archive = nullptr;
    /// Solutions that passed filtering this iteration, in insertion order.
    std::span<const EvaluatedSolution> accepted;
    const MetricsRow* metrics = nullptr;
};

struct RunRecord {
    RunConfig config;
    std::vector<MetricsRow> metrics;
    /// MOME-X archive, or the passive archive of a baseline.
    std::optional<MomeArchive> archive;
    std::optional<MapElitesArchive> me_archive;
    std::size_t evaluations = 0;
    std::uint64_t iterations = 0;
    /// Offspring removed by the force / reference-point filter.
    std::size_t filtered = 0;

    [[nodiscard]] std::string run_id() const { return config.run_id(); }
};

using Observer = std::function<void(const IterationView&)>;

/// Runs one configuration to its evaluation budget. Deterministic per config.
[[nodiscard]] RunRecord run(const RunConfig& config, const Observer& observer = {});

// ---------------------------------------------------------------------------
// Files

void write_metrics(std::ostream& out, std::span<const MetricsRow> rows);
/// Throws std::runtime_error on malformed input.
[[nodiscard]] std::vector<MetricsRow> read_metrics(std::istream& in);

/// Writes config.json, metrics.tsv, archive.tsv and (baselines) me_archive.tsv.
void write_run(const std::filesystem::path& dir, const RunRecord& record);

struct SuiteOptions {
    bool force = false;
    /// Runs executed concurrently.
    std::size_t jobs = 1;
    /// Progress lines go here when non-null.
    std::ostream* log = nullptr;
};

struct SuiteResult {
    std::string run_id;
    bool ok = false;
    std::string error;
    std::optional<MetricsRow> final_metrics;
    double seconds = 0.0;
};

/// Runs every config and writes each under `out_dir / run_id`. A failing run is
/// recorded and the rest continue. Throws std::runtime_error before running
/// anything if a run directory already exists and `force` is off.
std::vector<SuiteResult> run_suite(const std::vector<RunConfig>& configs, const std::filesystem::path& out_dir,
                                   const SuiteOptions& options = {});

/// One configuration per (algorithm, seed) pair, seeds first..first+count-1.
[[nodiscard]] std::vector<RunConfig> suite_configs(const RunConfig& base, std::span<const Algorithm> algorithms,
                                                   std::uint64_t first_seed, std::size_t count);

struct LoadedRun {
    RunConfig config;
    std::vector<MetricsRow> metrics;
    std::filesystem::path dir;
};

/// Every run directory (one holding config.json and metrics.tsv) under `root`,
/// sorted by run id.
[[nodiscard]] std::vector<LoadedRun> load_run_directory(const std::filesystem::path& root);

/// Final metric rows grouped by algorithm name and seed.
[[nodiscard]] std::map<std::string, SeedResults> final_results(const std::vector<LoadedRun>& runs);

} // namespace moqd
