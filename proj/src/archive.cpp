#include "moqd/archive.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "moqd/random.hpp"

namespace moqd {

// ---------------------------------------------------------------------------
// Tessellation

namespace {

double dist2(const Point2& a, const Point2& b)
{
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    return dx * dx + dy * dy;
}

/// Nearest point among `pts` (lowest index on ties) using an x-sorted index.
std::size_t nearest_sorted(const std::vector<Point2>& pts, const std::vector<std::size_t>& by_x, const Point2& q)
{
    const auto start = std::lower_bound(by_x.begin(), by_x.end(), q[0],
                                        [&](std::size_t i, double x) { return pts[i][0] < x; });
    std::size_t best = std::numeric_limits<std::size_t>::max();
    double best_d = std::numeric_limits<double>::infinity();
    auto consider = [&](std::size_t i) {
        const double d = dist2(pts[i], q);
        if (d < best_d || (d == best_d && i < best)) {
            best_d = d;
            best = i;
        }
    };
    for (auto it = start; it != by_x.end(); ++it) {
        const double dx = pts[*it][0] - q[0];
        if (dx * dx > best_d)
            break;
        consider(*it);
    }
    for (auto it = start; it != by_x.begin();) {
        --it;
        const double dx = q[0] - pts[*it][0];
        if (dx * dx > best_d)
            break;
        consider(*it);
    }
    return best;
}

std::vector<std::size_t> sort_by_x(const std::vector<Point2>& pts)
{
    std::vector<std::size_t> idx(pts.size());
    for (std::size_t i = 0; i < idx.size(); ++i)
        idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return pts[a][0] < pts[b][0]; });
    return idx;
}

} // namespace

CvtTessellation::CvtTessellation(std::vector<Point2> centroids, FeatureBounds bounds, std::uint64_t seed)
    : centroids_(std::move(centroids)), bounds_(bounds), seed_(seed)
{
    if (centroids_.empty())
        throw std::invalid_argument("CvtTessellation: no centroids");
    for (std::size_t k = 0; k < 2; ++k)
        if (!(bounds_.lo[k] < bounds_.hi[k]))
            throw std::invalid_argument("CvtTessellation: bounds must satisfy lo < hi");
    unit_.reserve(centroids_.size());
    for (const auto& c : centroids_)
        unit_.push_back(normalize(c));
    by_x_ = sort_by_x(unit_);
}

Point2 CvtTessellation::normalize(const Point2& feature) const
{
    return {(feature[0] - bounds_.lo[0]) / (bounds_.hi[0] - bounds_.lo[0]),
            (feature[1] - bounds_.lo[1]) / (bounds_.hi[1] - bounds_.lo[1])};
}

std::size_t CvtTessellation::nearest(const Point2& feature) const
{
    return nearest_sorted(unit_, by_x_, normalize(feature));
}

CvtTessellation build_cvt(std::size_t cells, const FeatureBounds& bounds, std::size_t n_samples, std::uint64_t seed)
{
    if (cells == 0)
        throw std::invalid_argument("build_cvt: need at least one cell");
    if (cells > n_samples)
        throw std::invalid_argument("build_cvt: more cells than samples");

    Rng rng(seed);
    std::vector<Point2> samples(n_samples);
    for (auto& s : samples)
        s = {rng.uniform(), rng.uniform()};

    // Partial Fisher-Yates picks `cells` distinct samples as the starting centroids.
    std::vector<std::size_t> order(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i)
        order[i] = i;
    for (std::size_t i = 0; i < cells; ++i)
        std::swap(order[i], order[i + rng.index(n_samples - i)]);
    std::vector<Point2> centroids(cells);
    for (std::size_t i = 0; i < cells; ++i)
        centroids[i] = samples[order[i]];

    constexpr std::size_t max_sweeps = 200;
    constexpr double tolerance = 1e-6;
    std::vector<Point2> sums(cells);
    std::vector<std::size_t> counts(cells);
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        const auto by_x = sort_by_x(centroids);
        std::fill(sums.begin(), sums.end(), Point2{0.0, 0.0});
        std::fill(counts.begin(), counts.end(), 0);
        for (const auto& s : samples) {
            const std::size_t k = nearest_sorted(centroids, by_x, s);
            sums[k][0] += s[0];
            sums[k][1] += s[1];
            ++counts[k];
        }
        double moved = 0.0;
        for (std::size_t k = 0; k < cells; ++k) {
            if (counts[k] == 0)
                continue; // empty cluster keeps its position
            const Point2 next{sums[k][0] / static_cast<double>(counts[k]), sums[k][1] / static_cast<double>(counts[k])};
            moved = std::max(moved, std::sqrt(dist2(next, centroids[k])));
            centroids[k] = next;
        }
        if (moved < tolerance)
            break;
    }

    std::vector<Point2> scaled(cells);
    for (std::size_t k = 0; k < cells; ++k)
        for (std::size_t d = 0; d < 2; ++d)
            scaled[k][d] = bounds.lo[d] + centroids[k][d] * (bounds.hi[d] - bounds.lo[d]);
    return CvtTessellation(std::move(scaled), bounds, seed);
}

std::shared_ptr<const CvtTessellation> shared_cvt(std::size_t cells, const FeatureBounds& bounds, std::size_t n_samples,
                                                  std::uint64_t seed)
{
    using Key = std::tuple<std::size_t, double, double, double, double, std::size_t, std::uint64_t>;
    static std::mutex mutex;
    static std::map<Key, std::shared_ptr<const CvtTessellation>> cache;

    const Key key{cells, bounds.lo[0], bounds.hi[0], bounds.lo[1], bounds.hi[1], n_samples, seed};
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end())
            return it->second;
    }
    auto built = std::make_shared<const CvtTessellation>(build_cvt(cells, bounds, n_samples, seed));
    std::lock_guard lock(mutex);
    return cache.emplace(key, std::move(built)).first->second;
}

std::size_t assign_cell(const FeatureVector& f, const CvtTessellation& t)
{
    return t.nearest(f.values);
}

// ---------------------------------------------------------------------------
// MOME archive

MomeArchive::MomeArchive(std::shared_ptr<const CvtTessellation> tessellation, std::size_t front_size)
    : tessellation_(std::move(tessellation)), front_size_(front_size)
{
    if (!tessellation_)
        throw std::invalid_argument("MomeArchive: missing tessellation");
    cells_.reserve(tessellation_->size());
    for (std::size_t i = 0; i < tessellation_->size(); ++i)
        cells_.emplace_back(front_size_);
}

InsertOutcome MomeArchive::insert(EvaluatedSolution s)
{
    const std::size_t c = assign_cell(s.features, *tessellation_);
    return cells_[c].insert(std::move(s));
}

std::size_t MomeArchive::size() const
{
    std::size_t n = 0;
    for (const auto& f : cells_)
        n += f.size();
    return n;
}

std::size_t MomeArchive::occupied() const
{
    return static_cast<std::size_t>(std::count_if(cells_.begin(), cells_.end(), [](const auto& f) { return !f.empty(); }));
}

std::vector<std::size_t> MomeArchive::occupied_cells() const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (!cells_[i].empty())
            out.push_back(i);
    return out;
}

// ---------------------------------------------------------------------------
// MAP-Elites archive

double scalar_fitness(const ObjectiveVector& objectives, ScalarRule rule)
{
    switch (rule) {
    case ScalarRule::Stability:
        return objectives[0];
    case ScalarRule::Magnetism:
        return objectives[1];
    case ScalarRule::Sum:
        return objectives[0] + objectives[1];
    }
    throw std::invalid_argument("unknown scalar rule");
}

MapElitesArchive::MapElitesArchive(std::shared_ptr<const CvtTessellation> tessellation, ScalarRule rule)
    : tessellation_(std::move(tessellation)), rule_(rule)
{
    if (!tessellation_)
        throw std::invalid_argument("MapElitesArchive: missing tessellation");
    cells_.resize(tessellation_->size());
}

InsertOutcome MapElitesArchive::insert(EvaluatedSolution s)
{
    auto& slot = cells_[assign_cell(s.features, *tessellation_)];
    if (!slot) {
        slot = std::move(s);
        ++stored_;
        return {InsertOutcome::Kind::Added, 0};
    }
    if (scalar_fitness(s.objectives, rule_) > scalar_fitness(slot->objectives, rule_)) {
        const std::uint64_t evicted = slot->provenance.id;
        slot = std::move(s);
        return {InsertOutcome::Kind::AddedWithEviction, evicted};
    }
    return {InsertOutcome::Kind::Discarded, 0};
}

std::vector<std::size_t> MapElitesArchive::occupied_cells() const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cells_.size(); ++i)
        if (cells_[i])
            out.push_back(i);
    return out;
}

double MapElitesArchive::qd_score() const
{
    double total = 0.0;
    for (const auto& c : cells_)
        if (c)
            total += scalar_fitness(c->objectives, rule_);
    return total;
}

std::size_t passive_sync(MomeArchive& passive, const MapElitesArchive& source)
{
    std::size_t stored = 0;
    source.for_each([&](std::size_t, const EvaluatedSolution& s) {
        std::vector<double> key(s.objectives.values().begin(), s.objectives.values().end());
        if (!passive.offered_.insert(std::move(key)).second)
            return;
        if (passive.insert(s).stored())
            ++stored;
    });
    return stored;
}

// ---------------------------------------------------------------------------
// Snapshots

namespace {

constexpr std::string_view snapshot_magic = "# moqd archive snapshot v1";
constexpr std::string_view snapshot_header =
    "run_id\titeration\tcell\tcentroid_0\tcentroid_1\tfeature_0\tfeature_1\tclamped\tobjective_0\tobjective_1\t"
    "force_norm\tsolution_id\tparent_id\toperator\tgenotype";

void write_preamble(std::ostream& out, std::string_view kind, const CvtTessellation& t, const std::string& run_id,
                    std::uint64_t iteration, std::size_t front_size)
{
    out << snapshot_magic << '\n';
    out << "# kind\t" << kind << '\n';
    out << "# run_id\t" << run_id << '\n';
    out << "# iteration\t" << iteration << '\n';
    out << "# front_size\t" << front_size << '\n';
    out << "# cvt_seed\t" << t.seed() << '\n';
    out << "# bounds\t" << format_double(t.bounds().lo[0]) << '\t' << format_double(t.bounds().hi[0]) << '\t'
        << format_double(t.bounds().lo[1]) << '\t' << format_double(t.bounds().hi[1]) << '\n';
    out << "# cells\t" << t.size() << '\n';
    for (std::size_t i = 0; i < t.size(); ++i)
        out << "# centroid\t" << i << '\t' << format_double(t.centroids()[i][0]) << '\t'
            << format_double(t.centroids()[i][1]) << '\n';
    out << snapshot_header << '\n';
}

void write_row(std::ostream& out, const CvtTessellation& t, const std::string& run_id, std::size_t cell,
               const EvaluatedSolution& s)
{
    const auto& c = t.centroids()[cell];
    out << run_id << '\t' << s.provenance.iteration << '\t' << cell << '\t' << format_double(c[0]) << '\t'
        << format_double(c[1]) << '\t' << format_double(s.features.values[0]) << '\t'
        << format_double(s.features.values[1]) << '\t' << (s.features.clamped ? 1 : 0) << '\t'
        << format_double(s.objectives[0]) << '\t' << format_double(s.objectives[1]) << '\t'
        << format_double(s.force_norm) << '\t' << s.provenance.id << '\t' << s.provenance.parent_id << '\t'
        << to_string(s.provenance.op) << '\t' << encode_genotype(s.genotype) << '\n';
}

std::vector<std::string> split_tabs(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, '\t'))
        out.push_back(field);
    if (!line.empty() && line.back() == '\t')
        out.emplace_back();
    return out;
}

template <typename Int>
Int parse_int(const std::string& s)
{
    std::size_t pos = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &pos);
    } catch (const std::exception&) {
        throw std::runtime_error("snapshot: bad integer '" + s + "'");
    }
    if (pos != s.size())
        throw std::runtime_error("snapshot: bad integer '" + s + "'");
    return static_cast<Int>(v);
}

double parse_real(const std::string& s)
{
    try {
        return parse_double(s);
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("snapshot: ") + e.what());
    }
}

} // namespace

void write_snapshot(std::ostream& out, const MomeArchive& archive, const std::string& run_id, std::uint64_t iteration)
{
    const auto& t = archive.tessellation();
    write_preamble(out, "mome", t, run_id, iteration, archive.front_size());
    archive.for_each([&](std::size_t cell, const EvaluatedSolution& s) { write_row(out, t, run_id, cell, s); });
}

void write_snapshot(std::ostream& out, const MapElitesArchive& archive, const std::string& run_id,
                    std::uint64_t iteration)
{
    const auto& t = archive.tessellation();
    write_preamble(out, "map_elites", t, run_id, iteration, 1);
    archive.for_each([&](std::size_t cell, const EvaluatedSolution& s) { write_row(out, t, run_id, cell, s); });
}

Snapshot read_snapshot(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != snapshot_magic)
        throw std::runtime_error("snapshot: missing format line");

    Snapshot snap;
    FeatureBounds bounds{};
    bool have_bounds = false;
    std::size_t cells = 0;
    std::uint64_t seed = 0;
    std::vector<Point2> centroids;
    bool header_seen = false;

    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        if (line.rfind("# ", 0) == 0) {
            const auto f = split_tabs(line.substr(2));
            if (f.empty())
                continue;
            const auto& key = f[0];
            if (key == "kind" && f.size() == 2)
                snap.kind = f[1];
            else if (key == "run_id" && f.size() == 2)
                snap.run_id = f[1];
            else if (key == "iteration" && f.size() == 2)
                snap.iteration = parse_int<std::uint64_t>(f[1]);
            else if (key == "front_size" && f.size() == 2)
                snap.front_size = parse_int<std::size_t>(f[1]);
            else if (key == "cvt_seed" && f.size() == 2)
                seed = parse_int<std::uint64_t>(f[1]);
            else if (key == "bounds" && f.size() == 5) {
                bounds = FeatureBounds{{parse_real(f[1]), parse_real(f[3])}, {parse_real(f[2]), parse_real(f[4])}};
                have_bounds = true;
            } else if (key == "cells" && f.size() == 2)
                cells = parse_int<std::size_t>(f[1]);
            else if (key == "centroid" && f.size() == 4) {
                if (parse_int<std::size_t>(f[1]) != centroids.size())
                    throw std::runtime_error("snapshot: centroids out of order");
                centroids.push_back({parse_real(f[2]), parse_real(f[3])});
            }
            continue;
        }
        if (!header_seen) {
            if (line != snapshot_header)
                throw std::runtime_error("snapshot: unexpected column header");
            header_seen = true;
            if (!have_bounds || centroids.size() != cells || cells == 0)
                throw std::runtime_error("snapshot: incomplete tessellation block");
            snap.tessellation = std::make_shared<const CvtTessellation>(centroids, bounds, seed);
            continue;
        }
        const auto f = split_tabs(line);
        if (f.size() != 15)
            throw std::runtime_error("snapshot: expected 15 columns, got " + std::to_string(f.size()));
        SnapshotRow row;
        row.run_id = f[0];
        row.iteration = parse_int<std::uint64_t>(f[1]);
        row.cell = parse_int<std::size_t>(f[2]);
        if (row.cell >= cells)
            throw std::runtime_error("snapshot: cell index out of range");
        row.centroid = {parse_real(f[3]), parse_real(f[4])};
        auto& s = row.solution;
        s.features.values = {parse_real(f[5]), parse_real(f[6])};
        s.features.clamped = f[7] == "1";
        s.objectives = ObjectiveVector{parse_real(f[8]), parse_real(f[9])};
        s.force_norm = parse_real(f[10]);
        s.provenance.id = parse_int<std::uint64_t>(f[11]);
        s.provenance.parent_id = parse_int<std::int64_t>(f[12]);
        s.provenance.iteration = row.iteration;
        try {
            s.provenance.op = parse_operator(f[13]);
            s.genotype = decode_genotype(f[14]);
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error(std::string("snapshot: ") + e.what());
        }
        snap.rows.push_back(std::move(row));
    }
    if (!header_seen)
        throw std::runtime_error("snapshot: missing column header");
    return snap;
}

MomeArchive restore_archive(const Snapshot& snapshot)
{
    if (snapshot.kind != "mome")
        throw std::runtime_error("restore_archive: snapshot is not a MOME archive");
    MomeArchive archive(snapshot.tessellation, snapshot.front_size);
    for (const auto& row : snapshot.rows)
        archive.insert(row.solution);
    return archive;
}

} // namespace moqd
