#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "moqd/pareto.hpp"
#include "moqd/random.hpp"
#include "oracles.hpp"

using namespace moqd;

namespace {

struct Tagged {
    ObjectiveVector obj;
    int tag = 0;
};

const ObjectiveVector& objectives_of(const Tagged& t) { return t.obj; }

} // namespace

TEST_CASE("dominates")
{
    CHECK(dominates({2, 3}, {1, 3}));
    CHECK_FALSE(dominates({1, 3}, {3, 1}));
    CHECK_FALSE(dominates({3, 1}, {1, 3}));
    CHECK_FALSE(dominates({2, 2}, {2, 2}));
    CHECK_THROWS_AS((void)dominates({1, 2}, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("objective vectors reject non-finite values")
{
    CHECK_THROWS_AS(ObjectiveVector({1.0, std::nan("")}), std::invalid_argument);
    CHECK_THROWS_AS(ObjectiveVector({std::numeric_limits<double>::infinity(), 0.0}), std::invalid_argument);
}

TEST_CASE("hypervolume2d small cases")
{
    const ObjectiveVector ref{0, 0};
    CHECK(hypervolume2d(std::vector<ObjectiveVector>{{1, 2}}, ref) == 2.0);
    CHECK(std::abs(hypervolume2d(std::vector<ObjectiveVector>{{1, 2}, {2, 1}}, ref) - 3.0) < 1e-12);
    CHECK(hypervolume2d(std::vector<ObjectiveVector>{}, ref) == 0.0);
    // below the reference: clipped, contributes nothing
    CHECK(hypervolume2d(std::vector<ObjectiveVector>{{-1, 5}, {2, -3}}, ref) == 0.0);
    CHECK_THROWS_AS((void)hypervolume2d(std::vector<ObjectiveVector>{{1, 2, 3}}, ObjectiveVector{0, 0, 0}),
                    std::domain_error);
}

TEST_CASE("hypervolume2d agrees with the rectangle-union oracles")
{
    Rng rng(7);
    const ObjectiveVector ref{0, 0};
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ObjectiveVector> pts;
        const auto n = 1 + rng.index(30);
        for (std::size_t i = 0; i < n; ++i)
            pts.push_back({rng.uniform(-0.5, 4.0), rng.uniform(-0.5, 4.0)});
        const double hv = hypervolume2d(pts, ref);
        CHECK(hv == doctest::Approx(oracle::grid_area(pts, ref)).epsilon(1e-9));
    }
}

TEST_CASE("hypervolume2d is monotone under insertion")
{
    Rng rng(11);
    const ObjectiveVector ref{0, 0};
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<ObjectiveVector> pts;
        double prev = 0.0;
        for (int k = 0; k < 25; ++k) {
            const ObjectiveVector p{rng.uniform(0, 5), rng.uniform(0, 5)};
            const bool dominated = std::any_of(pts.begin(), pts.end(), [&](const auto& q) { return dominates(q, p) || q == p; });
            pts.push_back(p);
            const double hv = hypervolume2d(pts, ref);
            if (dominated)
                CHECK(hv == doctest::Approx(prev).epsilon(1e-12));
            else
                CHECK(hv >= prev - 1e-12);
            prev = hv;
        }
    }
}

TEST_CASE("crowding distances")
{
    const auto inf = std::numeric_limits<double>::infinity();
    auto d = crowding_distances(std::vector<ObjectiveVector>{{0, 10}, {5, 5}, {10, 0}});
    CHECK(d[0] == inf);
    CHECK(d[1] == doctest::Approx(2.0));
    CHECK(d[2] == inf);
    CHECK(crowding_distances(std::vector<ObjectiveVector>{{1, 1}}) == std::vector<double>{inf});
    CHECK(crowding_distances(std::vector<ObjectiveVector>{{0, 0}, {1, 1}}) == std::vector<double>{inf, inf});

    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<ObjectiveVector> front;
        const auto n = 2 + rng.index(12);
        for (std::size_t i = 0; i < n; ++i) {
            const double x = rng.uniform();
            front.push_back({x, 1.0 - x + 0.01 * rng.uniform()});
        }
        const auto cd = crowding_distances(front);
        const auto ref = oracle::crowding(front);
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isinf(ref[i]))
                CHECK(std::isinf(cd[i]));
            else
                CHECK(cd[i] == doctest::Approx(ref[i]).epsilon(1e-12));
        }
        // both objective-wise extremes are infinite
        for (std::size_t k = 0; k < 2; ++k) {
            auto lo = std::min_element(front.begin(), front.end(), [&](auto& a, auto& b) { return a[k] < b[k]; });
            auto hi = std::max_element(front.begin(), front.end(), [&](auto& a, auto& b) { return a[k] < b[k]; });
            CHECK(std::isinf(cd[static_cast<std::size_t>(lo - front.begin())]));
            CHECK(std::isinf(cd[static_cast<std::size_t>(hi - front.begin())]));
        }
    }
}

TEST_CASE("front insertion basics")
{
    ParetoFront<ObjectiveVector> f(10);
    CHECK(f.insert({5, 5}).kind == InsertOutcome::Kind::Added);
    CHECK(f.insert({4, 4}).kind == InsertOutcome::Kind::Discarded);
    CHECK(f.insert({5, 5}).kind == InsertOutcome::Kind::Discarded);
    CHECK(f.insert({6, 6}).kind == InsertOutcome::Kind::Added);
    CHECK(f.size() == 1);
    CHECK(f[0] == ObjectiveVector{6, 6});
    CHECK_THROWS_AS(ParetoFront<ObjectiveVector>(0), std::invalid_argument);
}

TEST_CASE("full front evicts the least crowded interior member")
{
    // Ten points on a line with uneven spacing; the densest interior point goes.
    std::vector<double> xs{0, 1, 2, 2.2, 4, 5, 6.5, 7, 8.5, 10};
    ParetoFront<Tagged> f(10);
    for (std::size_t i = 0; i < xs.size(); ++i)
        REQUIRE(f.insert(Tagged{{xs[i], 10 - xs[i]}, static_cast<int>(i)}).kind == InsertOutcome::Kind::Added);

    const Tagged extra{{9.2, 10 - 9.2 + 0.0}, 99};
    std::vector<ObjectiveVector> all;
    for (double x : xs)
        all.push_back({x, 10 - x});
    all.push_back(extra.obj);
    const auto cd = oracle::crowding(all);
    std::size_t expect = 0;
    for (std::size_t i = 1; i < cd.size(); ++i)
        if (cd[i] < cd[expect])
            expect = i;
    REQUIRE(expect < xs.size());

    const auto out = f.insert(extra);
    CHECK(out.kind == InsertOutcome::Kind::AddedWithEviction);
    CHECK(out.evicted_sequence == expect);
    CHECK(f.size() == 10);
    for (std::size_t i = 0; i < f.size(); ++i)
        CHECK(f[i].tag != static_cast<int>(expect));
}

TEST_CASE("eviction ties go to the earliest inserted member")
{
    ParetoFront<ObjectiveVector> f(3);
    f.insert({0, 4});
    f.insert({4, 0});
    f.insert({1, 3}); // interior, distance 1.0
    const auto out = f.insert({3, 1}); // interior, distance 1.0 as well
    CHECK(out.kind == InsertOutcome::Kind::AddedWithEviction);
    CHECK(out.evicted_sequence == 2);
}

TEST_CASE("boundary members survive while a finite member exists")
{
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        ParetoFront<ObjectiveVector> f(4);
        for (int k = 0; k < 30; ++k) {
            const double x = rng.uniform();
            std::vector<ObjectiveVector> before = f.objectives();
            const ObjectiveVector c{x, 1 - x};
            const auto out = f.insert(c);
            if (out.kind == InsertOutcome::Kind::AddedWithEviction) {
                before.push_back(c);
                const auto cd = oracle::crowding(before);
                const bool any_finite = std::any_of(cd.begin(), cd.end(), [](double d) { return std::isfinite(d); });
                if (any_finite) {
                    // the evicted member had a finite distance
                    std::size_t i = 0;
                    for (; i + 1 < before.size(); ++i) {
                        const auto now = f.objectives();
                        if (std::find(now.begin(), now.end(), before[i]) == now.end())
                            break;
                    }
                    CHECK(std::isfinite(cd[i]));
                }
            }
        }
    }
}

TEST_CASE("unbounded insertion reproduces the brute-force non-dominated set")
{
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto n = rng.index(21);
        std::vector<ObjectiveVector> pts;
        for (std::size_t i = 0; i < n; ++i)
            // coarse grid forces ties and duplicates
            pts.push_back({std::floor(rng.uniform(0, 6)), std::floor(rng.uniform(0, 6))});
        ParetoFront<ObjectiveVector> f(1000);
        for (const auto& p : pts) {
            f.insert(p);
            const auto cur = f.objectives();
            for (const auto& a : cur)
                for (const auto& b : cur)
                    REQUIRE_FALSE(dominates(a, b));
        }
        auto got = f.objectives();
        auto want = oracle::non_dominated(pts);
        auto key = [](const ObjectiveVector& v) { return std::pair{v[0], v[1]}; };
        std::set<std::pair<double, double>> gs, ws;
        for (auto& v : got)
            gs.insert(key(v));
        for (auto& v : want)
            ws.insert(key(v));
        CHECK(gs == ws);
        CHECK(got.size() == gs.size());
    }
}

TEST_CASE("non_dominated_indices keeps the first duplicate")
{
    const std::vector<ObjectiveVector> pts{{1, 1}, {2, 0}, {1, 1}, {0, 0}};
    CHECK(non_dominated_indices(pts) == std::vector<std::size_t>{0, 1});
}
