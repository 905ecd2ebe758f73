#pragma once

/// @file metrics.hpp
/// Multi-objective QD metrics over MOME archives, plus the paired-run
/// statistics used to compare algorithms.

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "moqd/archive.hpp"
#include "moqd/pareto.hpp"

namespace moqd {

struct MetricsRow {
    std::size_t evaluations = 0;
    double moqd_score = 0.0;
    double energy_qd_score = 0.0;
    double magnetism_qd_score = 0.0;
    double coverage = 0.0;
    double global_hypervolume = 0.0;

    friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

/// Names of the five metric columns, in MetricsRow order.
[[nodiscard]] const std::vector<std::string>& metric_names();
[[nodiscard]] double metric_value(const MetricsRow& row, std::size_t index);

/// Sum over occupied cells of the front hypervolume.
[[nodiscard]] double moqd_score(const MomeArchive& archive, const ObjectiveVector& ref);

enum class QdScoreVariant {
    /// Sum of the objective over every stored solution.
    AllSolutions,
    /// Sum over occupied cells of the best value of the objective in that cell.
    BestPerCell,
};

[[nodiscard]] double objective_qd_score(const MomeArchive& archive, std::size_t objective,
                                        QdScoreVariant variant = QdScoreVariant::AllSolutions);

[[nodiscard]] double coverage(const MomeArchive& archive);

/// Non-dominated subset of a 2-D point pool via a descending sweep on objective 0.
[[nodiscard]] std::vector<ObjectiveVector> pareto_filter_2d(std::vector<ObjectiveVector> pool);

/// Hypervolume of the non-dominated set of every stored solution.
[[nodiscard]] double global_hypervolume(const MomeArchive& archive, const ObjectiveVector& ref);

[[nodiscard]] MetricsRow compute_metrics(const MomeArchive& archive, const ObjectiveVector& ref, std::size_t evaluations,
                                         QdScoreVariant variant = QdScoreVariant::AllSolutions);

// ---------------------------------------------------------------------------
// Statistics

enum class WilcoxonMethod { Auto, Exact, Normal };

struct WilcoxonResult {
    double p_value = 1.0;
    /// Sum of ranks of positive differences.
    double w_plus = 0.0;
    double w_minus = 0.0;
    /// Non-zero differences used.
    std::size_t n = 0;
    bool exact = false;
};

/// Two-sided paired Wilcoxon signed-rank test. Zero differences are dropped,
/// tied magnitudes get average ranks. Auto uses the exact null distribution up
/// to n = 20 and a tie-corrected normal approximation (with continuity
/// correction) beyond. Throws std::invalid_argument when sizes differ.
[[nodiscard]] WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y,
                                                  WilcoxonMethod method = WilcoxonMethod::Auto);

struct HolmResult {
    double adjusted_p = 1.0;
    bool reject = false;
};

/// Holm step-down adjustment; output is in input order.
[[nodiscard]] std::vector<HolmResult> holm_bonferroni(std::span<const double> p_values, double alpha);

/// Linear-interpolation quantile (R type 7) of unsorted data.
[[nodiscard]] double quantile(std::vector<double> data, double q);

struct Summary {
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    std::size_t n = 0;
};

[[nodiscard]] Summary summarize(std::span<const double> data);

/// Final metric rows of one algorithm, keyed by seed.
using SeedResults = std::map<std::uint64_t, MetricsRow>;

struct ComparisonEntry {
    std::string metric;
    std::string algorithm;
    Summary summary;
    /// Present for non-reference algorithms when there is one to compare against.
    bool tested = false;
    double p_value = 1.0;
    double adjusted_p = 1.0;
    bool reject = false;
};

/// Per metric: median / IQR per algorithm, and paired Wilcoxon tests of
/// `reference` against every other algorithm with Holm adjustment within the
/// metric. Throws std::invalid_argument if the seed sets differ.
[[nodiscard]] std::vector<ComparisonEntry> compare_runs(const std::map<std::string, SeedResults>& results,
                                                        const std::string& reference, double alpha);

} // namespace moqd
