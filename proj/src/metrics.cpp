#include "moqd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace moqd {

const std::vector<std::string>& metric_names()
{
    static const std::vector<std::string> names{"moqd_score", "energy_qd_score", "magnetism_qd_score", "coverage",
                                                "global_hypervolume"};
    return names;
}

double metric_value(const MetricsRow& row, std::size_t index)
{
    switch (index) {
    case 0:
        return row.moqd_score;
    case 1:
        return row.energy_qd_score;
    case 2:
        return row.magnetism_qd_score;
    case 3:
        return row.coverage;
    case 4:
        return row.global_hypervolume;
    default:
        throw std::out_of_range("metric_value: index out of range");
    }
}

double moqd_score(const MomeArchive& archive, const ObjectiveVector& ref)
{
    double total = 0.0;
    for (std::size_t c = 0; c < archive.num_cells(); ++c) {
        const auto& front = archive.cell(c);
        if (!front.empty())
            total += hypervolume2d(front.objectives(), ref);
    }
    return total;
}

double objective_qd_score(const MomeArchive& archive, std::size_t objective, QdScoreVariant variant)
{
    double total = 0.0;
    for (std::size_t c = 0; c < archive.num_cells(); ++c) {
        const auto& front = archive.cell(c);
        if (front.empty())
            continue;
        if (variant == QdScoreVariant::AllSolutions) {
            front.for_each([&](const EvaluatedSolution& s) { total += s.objectives[objective]; });
        } else {
            double best = -std::numeric_limits<double>::infinity();
            front.for_each([&](const EvaluatedSolution& s) { best = std::max(best, s.objectives[objective]); });
            total += best;
        }
    }
    return total;
}

double coverage(const MomeArchive& archive)
{
    return static_cast<double>(archive.occupied()) / static_cast<double>(archive.num_cells());
}

std::vector<ObjectiveVector> pareto_filter_2d(std::vector<ObjectiveVector> pool)
{
    std::sort(pool.begin(), pool.end(), [](const ObjectiveVector& a, const ObjectiveVector& b) {
        return a[0] > b[0] || (a[0] == b[0] && a[1] > b[1]);
    });
    std::vector<ObjectiveVector> front;
    double best_y = -std::numeric_limits<double>::infinity();
    for (auto& p : pool) {
        // sorted by x descending, so p survives iff it beats every earlier y
        if (p[1] > best_y) {
            best_y = p[1];
            front.push_back(std::move(p));
        }
    }
    return front;
}

double global_hypervolume(const MomeArchive& archive, const ObjectiveVector& ref)
{
    std::vector<ObjectiveVector> pool;
    pool.reserve(archive.size());
    archive.for_each([&](std::size_t, const EvaluatedSolution& s) { pool.push_back(s.objectives); });
    return hypervolume2d(pareto_filter_2d(std::move(pool)), ref);
}

MetricsRow compute_metrics(const MomeArchive& archive, const ObjectiveVector& ref, std::size_t evaluations,
                           QdScoreVariant variant)
{
    MetricsRow row;
    row.evaluations = evaluations;
    row.moqd_score = moqd_score(archive, ref);
    row.energy_qd_score = objective_qd_score(archive, 0, variant);
    row.magnetism_qd_score = objective_qd_score(archive, 1, variant);
    row.coverage = coverage(archive);
    row.global_hypervolume = global_hypervolume(archive, ref);
    return row;
}

// ---------------------------------------------------------------------------
// Statistics

namespace {

constexpr std::size_t exact_limit = 20;

/// Average ranks (1-based) of `values`, plus the tie-group sizes.
std::vector<double> average_ranks(const std::vector<double>& values, std::vector<std::size_t>& ties)
{
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]])
            ++j;
        const double avg = 0.5 * static_cast<double>(i + j + 2);
        for (std::size_t k = i; k <= j; ++k)
            ranks[order[k]] = avg;
        ties.push_back(j - i + 1);
        i = j + 1;
    }
    return ranks;
}

} // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y, WilcoxonMethod method)
{
    if (x.size() != y.size())
        throw std::invalid_argument("wilcoxon_signed_rank: samples must be paired");

    std::vector<double> magnitude;
    std::vector<bool> positive;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x[i] - y[i];
        if (d != 0.0) {
            magnitude.push_back(std::abs(d));
            positive.push_back(d > 0.0);
        }
    }

    WilcoxonResult r;
    r.n = magnitude.size();
    if (r.n == 0)
        return r;

    std::vector<std::size_t> ties;
    const auto ranks = average_ranks(magnitude, ties);
    for (std::size_t i = 0; i < r.n; ++i)
        (positive[i] ? r.w_plus : r.w_minus) += ranks[i];

    const bool exact = method == WilcoxonMethod::Exact || (method == WilcoxonMethod::Auto && r.n <= exact_limit);
    r.exact = exact;
    const double n = static_cast<double>(r.n);

    if (exact) {
        // Doubled ranks are integers even with half-rank ties; count sign patterns per sum.
        std::vector<std::size_t> doubled(r.n);
        std::size_t total = 0;
        for (std::size_t i = 0; i < r.n; ++i) {
            doubled[i] = static_cast<std::size_t>(std::lround(2.0 * ranks[i]));
            total += doubled[i];
        }
        std::vector<double> count(total + 1, 0.0);
        count[0] = 1.0;
        std::size_t reach = 0;
        for (std::size_t i = 0; i < r.n; ++i) {
            for (std::size_t s = reach + 1; s-- > 0;)
                if (count[s] != 0.0)
                    count[s + doubled[i]] += count[s];
            reach += doubled[i];
        }
        const auto observed = static_cast<std::size_t>(std::lround(2.0 * r.w_plus));
        double lower = 0.0, upper = 0.0;
        for (std::size_t s = 0; s <= total; ++s) {
            if (s <= observed)
                lower += count[s];
            if (s >= observed)
                upper += count[s];
        }
        const double patterns = std::ldexp(1.0, static_cast<int>(r.n));
        r.p_value = std::min(1.0, 2.0 * std::min(lower, upper) / patterns);
        return r;
    }

    const double mean = n * (n + 1.0) / 4.0;
    double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    for (std::size_t t : ties) {
        const double td = static_cast<double>(t);
        variance -= (td * td * td - td) / 48.0;
    }
    if (variance <= 0.0) {
        r.p_value = 1.0;
        return r;
    }
    const double z = std::max(0.0, std::abs(r.w_plus - mean) - 0.5) / std::sqrt(variance);
    r.p_value = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    return r;
}

std::vector<HolmResult> holm_bonferroni(std::span<const double> p_values, double alpha)
{
    const std::size_t m = p_values.size();
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("holm_bonferroni: p-values must lie in [0, 1]");
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    std::vector<HolmResult> out(m);
    double running = 0.0;
    bool still_rejecting = true;
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t k = order[i];
        running = std::max(running, std::min(1.0, static_cast<double>(m - i) * p_values[k]));
        still_rejecting = still_rejecting && p_values[k] <= alpha / static_cast<double>(m - i);
        out[k] = HolmResult{running, still_rejecting};
    }
    return out;
}

double quantile(std::vector<double> data, double q)
{
    if (data.empty())
        throw std::invalid_argument("quantile: empty data");
    std::sort(data.begin(), data.end());
    const double h = (static_cast<double>(data.size()) - 1.0) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, data.size() - 1);
    return data[lo] + (h - static_cast<double>(lo)) * (data[hi] - data[lo]);
}

Summary summarize(std::span<const double> data)
{
    std::vector<double> v(data.begin(), data.end());
    return Summary{quantile(v, 0.5), quantile(v, 0.25), quantile(v, 0.75), v.size()};
}

std::vector<ComparisonEntry> compare_runs(const std::map<std::string, SeedResults>& results, const std::string& reference,
                                          double alpha)
{
    const auto ref_it = results.find(reference);
    if (ref_it != results.end()) {
        for (const auto& [name, seeds] : results) {
            if (seeds.size() != ref_it->second.size() ||
                !std::equal(seeds.begin(), seeds.end(), ref_it->second.begin(),
                            [](const auto& a, const auto& b) { return a.first == b.first; }))
                throw std::invalid_argument("compare_runs: algorithm '" + name + "' is not paired by seed with '" +
                                            reference + "'");
        }
    }

    std::vector<ComparisonEntry> out;
    for (std::size_t m = 0; m < metric_names().size(); ++m) {
        auto values_of = [&](const SeedResults& seeds) {
            std::vector<double> v;
            for (const auto& [seed, row] : seeds)
                v.push_back(metric_value(row, m));
            return v;
        };

        std::vector<std::size_t> tested;
        std::vector<double> raw;
        for (const auto& [name, seeds] : results) {
            if (seeds.empty())
                continue;
            ComparisonEntry e;
            e.metric = metric_names()[m];
            e.algorithm = name;
            const auto v = values_of(seeds);
            e.summary = summarize(v);
            if (ref_it != results.end() && name != reference) {
                const auto base = values_of(ref_it->second);
                e.tested = true;
                e.p_value = wilcoxon_signed_rank(base, v).p_value;
                tested.push_back(out.size());
                raw.push_back(e.p_value);
            }
            out.push_back(std::move(e));
        }
        const auto adjusted = holm_bonferroni(raw, alpha);
        for (std::size_t i = 0; i < tested.size(); ++i) {
            out[tested[i]].adjusted_p = adjusted[i].adjusted_p;
            out[tested[i]].reject = adjusted[i].reject;
        }
    }
    return out;
}

} // namespace moqd
