#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "moqd/archive.hpp"
#include "moqd/random.hpp"

using namespace moqd;
using testing_helpers::solution;

namespace {

const FeatureBounds unit_square{{0.0, 0.0}, {1.0, 1.0}};

std::shared_ptr<const CvtTessellation> fixed_tessellation(std::vector<Point2> centroids,
                                                          FeatureBounds bounds = unit_square)
{
    return std::make_shared<const CvtTessellation>(std::move(centroids), bounds, 0);
}

// brute-force nearest centroid in normalized units, lowest index on ties
std::size_t nearest_brute(const CvtTessellation& t, const Point2& f)
{
    const auto& b = t.bounds();
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double d = 0.0;
        for (std::size_t k = 0; k < 2; ++k) {
            const double w = b.hi[k] - b.lo[k];
            const double x = (f[k] - b.lo[k]) / w - (t.centroids()[i][k] - b.lo[k]) / w;
            d += x * x;
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

void check_archive_invariants(const MomeArchive& a)
{
    for (std::size_t c = 0; c < a.num_cells(); ++c) {
        const auto& front = a.cell(c);
        REQUIRE(front.size() <= a.front_size());
        const auto objs = front.objectives();
        for (std::size_t i = 0; i < objs.size(); ++i)
            for (std::size_t j = 0; j < objs.size(); ++j) {
                REQUIRE_FALSE(dominates(objs[i], objs[j]));
                if (i != j)
                    REQUIRE_FALSE(objs[i] == objs[j]);
            }
        front.for_each([&](const EvaluatedSolution& s) { REQUIRE(assign_cell(s.features, a.tessellation()) == c); });
    }
}

} // namespace

TEST_CASE("build_cvt with one cell lands near the midpoint")
{
    const FeatureBounds b{{2.0, 10.0}, {4.0, 50.0}};
    const auto t = build_cvt(1, b, 100000, 3);
    REQUIRE(t.size() == 1);
    CHECK(std::abs(t.centroids()[0][0] - 3.0) < 0.05 * 2.0);
    CHECK(std::abs(t.centroids()[0][1] - 30.0) < 0.05 * 40.0);
}

TEST_CASE("build_cvt with 200 cells gives distinct in-bounds centroids")
{
    const auto t = build_cvt(200, unit_square, 50000, 2024);
    REQUIRE(t.size() == 200);
    std::set<std::pair<double, double>> seen;
    for (const auto& c : t.centroids()) {
        CHECK(c[0] >= 0.0);
        CHECK(c[0] <= 1.0);
        CHECK(c[1] >= 0.0);
        CHECK(c[1] <= 1.0);
        seen.insert({c[0], c[1]});
    }
    CHECK(seen.size() == 200);

    // every cell receives points of a fresh uniform sample
    std::vector<std::size_t> counts(200, 0);
    Rng rng(99);
    for (int i = 0; i < 10000; ++i)
        ++counts[t.nearest({rng.uniform(), rng.uniform()})];
    CHECK(std::count(counts.begin(), counts.end(), 0U) == 0);

    SUBCASE("deterministic")
    {
        const auto again = build_cvt(200, unit_square, 50000, 2024);
        CHECK(again.centroids() == t.centroids());
        const auto other = build_cvt(200, unit_square, 50000, 2025);
        CHECK(other.centroids() != t.centroids());
    }
}

TEST_CASE("build_cvt usage errors")
{
    CHECK_THROWS_AS((void)build_cvt(10, unit_square, 5, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)build_cvt(0, unit_square, 5, 0), std::invalid_argument);
}

TEST_CASE("assign_cell")
{
    const auto t = fixed_tessellation({{0, 0}, {1, 1}, {0.25, 0.5}, {0, 1}, {1, 0}, {0.75, 0.5}, {0.5, 0.9}, {0.6, 0.1}});
    FeatureVector f;
    f.values = {0.5, 0.9};
    CHECK(assign_cell(f, *t) == 6);
    f.values = {0.5, 0.5}; // equidistant from 2 and 5
    CHECK(assign_cell(f, *t) == 2);

    // clamped boundary point goes to the centroid nearest the clamped position
    const auto clamped = FeatureVector::clamp({1.7, -0.3}, unit_square);
    CHECK(clamped.clamped);
    CHECK(assign_cell(clamped, *t) == 4);

    // pruned search agrees with brute force on a real tessellation
    const auto big = build_cvt(200, FeatureBounds{{2.2, 10.0}, {3.8, 50.0}}, 20000, 1);
    Rng rng(4);
    for (int i = 0; i < 5000; ++i) {
        const Point2 q{rng.uniform(2.2, 3.8), rng.uniform(10.0, 50.0)};
        REQUIRE(big.nearest(q) == nearest_brute(big, q));
    }
}

TEST_CASE("archive_insert examples")
{
    const auto t = fixed_tessellation({{0.25, 0.25}, {0.75, 0.75}});
    MomeArchive a(t, 10);
    CHECK(a.insert(solution({0.8, 0.7}, {1, 1}, 1)).kind == InsertOutcome::Kind::Added);
    CHECK(a.cell(1).size() == 1);
    CHECK(a.cell(0).empty());
    CHECK(a.insert(solution({0.7, 0.9}, {0.5, 0.5}, 2)).kind == InsertOutcome::Kind::Discarded);

    MomeArchive b(t, 10);
    for (int i = 0; i < 10; ++i)
        REQUIRE(b.insert(solution({0.1, 0.1}, {double(i), 10.0 - i}, i)).kind == InsertOutcome::Kind::Added);
    const auto out = b.insert(solution({0.1, 0.1}, {9.5, 0.5}, 10));
    CHECK(out.kind == InsertOutcome::Kind::AddedWithEviction);
    CHECK(out.evicted_sequence == 9); // squeezed next to the newcomer: 3/9.5 against 4/9.5
    CHECK(b.cell(0).size() == 10);
    CHECK(b.size() == 10);
    CHECK(b.occupied() == 1);
}

TEST_CASE("archive invariants hold after random insertion")
{
    const auto t = std::make_shared<const CvtTessellation>(build_cvt(30, unit_square, 5000, 8));
    MomeArchive a(t, 4);
    Rng rng(12);
    for (int i = 0; i < 5000; ++i) {
        // coarse objectives force duplicates and ties
        a.insert(solution({rng.uniform(), rng.uniform()}, {std::floor(rng.uniform(0, 8)), std::floor(rng.uniform(0, 8))},
                          static_cast<std::uint64_t>(i)));
        if (i % 500 == 0)
            check_archive_invariants(a);
    }
    check_archive_invariants(a);
}

TEST_CASE("me_insert")
{
    const auto t = fixed_tessellation({{0.5, 0.5}});
    MapElitesArchive stab(t, ScalarRule::Stability);
    CHECK(stab.insert(solution({0.5, 0.5}, {5.0, 0.0}, 1)).kind == InsertOutcome::Kind::Added);
    CHECK(stab.insert(solution({0.5, 0.5}, {5.0, 9.0}, 2)).kind == InsertOutcome::Kind::Discarded);
    CHECK(stab.cell(0)->provenance.id == 1);

    MapElitesArchive sum(t, ScalarRule::Sum);
    sum.insert(solution({0.5, 0.5}, {3, 1}, 1));
    const auto out = sum.insert(solution({0.5, 0.5}, {1, 4}, 2));
    CHECK(out.kind == InsertOutcome::Kind::AddedWithEviction);
    CHECK(out.evicted_sequence == 1);
    CHECK(sum.cell(0)->provenance.id == 2);
    CHECK(sum.qd_score() == 5.0);

    MapElitesArchive mag(t, ScalarRule::Magnetism);
    mag.insert(solution({0.5, 0.5}, {3, 1}, 1));
    CHECK(mag.insert(solution({0.5, 0.5}, {1, 4}, 2)).kind == InsertOutcome::Kind::AddedWithEviction);
    CHECK(scalar_fitness(ObjectiveVector{2, 7}, ScalarRule::Magnetism) == 7.0);
}

TEST_CASE("MAP-Elites cell fitness never decreases")
{
    const auto t = std::make_shared<const CvtTessellation>(build_cvt(20, unit_square, 2000, 5));
    for (auto rule : {ScalarRule::Stability, ScalarRule::Magnetism, ScalarRule::Sum}) {
        MapElitesArchive a(t, rule);
        std::vector<double> best(20, -INFINITY);
        Rng rng(6);
        for (int i = 0; i < 3000; ++i) {
            a.insert(solution({rng.uniform(), rng.uniform()}, {rng.uniform(0, 5), rng.uniform(0, 5)}));
            for (std::size_t c = 0; c < 20; ++c) {
                if (!a.cell(c))
                    continue;
                const double f = scalar_fitness(a.cell(c)->objectives, rule);
                REQUIRE(f >= best[c]);
                best[c] = f;
            }
        }
    }
}

TEST_CASE("passive_sync")
{
    const auto t = fixed_tessellation({{0.25, 0.25}, {0.75, 0.75}});
    MapElitesArchive source(t, ScalarRule::Stability);
    MomeArchive passive(t, 10);
    CHECK(passive_sync(passive, source) == 0);
    source.insert(solution({0.2, 0.2}, {1, 2}, 1));
    CHECK(passive_sync(passive, source) == 1);
    CHECK(passive_sync(passive, source) == 0);
    CHECK(passive.size() == 1);

    // random sequences: repeating a sync right away never stores anything
    const auto big = std::make_shared<const CvtTessellation>(build_cvt(10, unit_square, 1000, 1));
    MapElitesArchive src(big, ScalarRule::Sum);
    MomeArchive shadow(big, 3);
    Rng rng(10);
    for (int round = 0; round < 100; ++round) {
        for (int k = 0; k < 10; ++k)
            src.insert(solution({rng.uniform(), rng.uniform()}, {rng.uniform(0, 4), rng.uniform(0, 4)}));
        passive_sync(shadow, src);
        REQUIRE(passive_sync(shadow, src) == 0);
        check_archive_invariants(shadow);
    }
}

TEST_CASE("snapshot write, read and restore round-trip")
{
    const FeatureBounds b{{2.2, 10.0}, {3.8, 50.0}};
    const auto t = std::make_shared<const CvtTessellation>(build_cvt(25, b, 5000, 77));
    MomeArchive a(t, 5);
    Rng rng(3);
    for (std::uint64_t i = 0; i < 400; ++i) {
        auto s = solution({rng.uniform(2.2, 3.8), rng.uniform(10, 50)}, {rng.uniform(0, 3), rng.uniform(0, 3)}, i);
        s.provenance.iteration = i / 50;
        s.provenance.parent_id = static_cast<std::int64_t>(i) - 1;
        s.provenance.op = i % 2 ? VariationOperator::Strain : VariationOperator::Permutation;
        s.force_norm = rng.uniform();
        s.features.clamped = i % 7 == 0;
        a.insert(std::move(s));
    }

    std::ostringstream first;
    write_snapshot(first, a, "mome_x_seed3", 8);
    std::istringstream in(first.str());
    const auto snap = read_snapshot(in);
    CHECK(snap.kind == "mome");
    CHECK(snap.run_id == "mome_x_seed3");
    CHECK(snap.iteration == 8);
    CHECK(snap.front_size == 5);
    CHECK(snap.tessellation->centroids() == t->centroids());
    CHECK(snap.tessellation->bounds() == b);
    CHECK(snap.rows.size() == a.size());

    const auto restored = restore_archive(snap);
    std::ostringstream second;
    write_snapshot(second, restored, "mome_x_seed3", 8);
    CHECK(second.str() == first.str());

    std::vector<EvaluatedSolution> original;
    a.for_each([&](std::size_t, const EvaluatedSolution& s) { original.push_back(s); });
    REQUIRE(original.size() == snap.rows.size());
    for (std::size_t i = 0; i < original.size(); ++i)
        CHECK(snap.rows[i].solution == original[i]);

    MapElitesArchive me(t, ScalarRule::Sum);
    me.insert(solution({3.0, 30.0}, {1, 1}, 4));
    std::ostringstream me_out;
    write_snapshot(me_out, me, "me_sum_seed0", 1);
    std::istringstream me_in(me_out.str());
    const auto me_snap = read_snapshot(me_in);
    CHECK(me_snap.kind == "map_elites");
    CHECK(me_snap.rows.size() == 1);
    CHECK_THROWS_AS((void)restore_archive(me_snap), std::runtime_error);

    std::istringstream bad("not a snapshot\n");
    CHECK_THROWS_AS((void)read_snapshot(bad), std::runtime_error);
}
