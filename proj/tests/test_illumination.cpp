#include <doctest.h>

#include <algorithm>
#include <map>
#include <memory>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "moqd/illumination.hpp"
#include "moqd/random.hpp"

using namespace moqd;
using testing_helpers::solution;

namespace {

MomeArchive random_archive(std::uint64_t seed)
{
    const auto t = std::make_shared<const CvtTessellation>(build_cvt(40, FeatureBounds{{0, 0}, {1, 1}}, 4000, seed));
    MomeArchive a(t, 10);
    Rng rng(seed);
    for (std::uint64_t i = 0; i < 2000; ++i)
        a.insert(solution({rng.uniform(), rng.uniform()}, {rng.uniform(0.1, 9.0), rng.uniform(0.0, 4.0)}, i));
    return a;
}

} // namespace

TEST_CASE("level 0 equals the per-cell magnetism maximum read back from a snapshot")
{
    const auto a = random_archive(3);
    std::stringstream snap;
    write_snapshot(snap, a, "r", 0);
    const auto rows = read_snapshot(snap).rows;

    std::map<std::size_t, double> direct;
    for (const auto& r : rows) {
        auto [it, fresh] = direct.emplace(r.cell, r.solution.objectives[1]);
        if (!fresh)
            it->second = std::max(it->second, r.solution.objectives[1]);
    }

    const std::vector<double> levels{0.0};
    const auto table = illuminate(a, levels);
    REQUIRE(table.best.size() == 1);
    for (std::size_t c = 0; c < a.num_cells(); ++c) {
        const auto it = direct.find(c);
        if (it == direct.end())
            CHECK_FALSE(table.best[0][c].has_value());
        else
            CHECK(table.best[0][c] == it->second);
    }
    CHECK(table.populated(0) == direct.size());
}

TEST_CASE("values and populated sets shrink as the level rises")
{
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = random_archive(seed);
        const auto& levels = default_illumination_levels();
        const auto table = illuminate(a, levels);
        for (std::size_t l = 1; l < levels.size(); ++l) {
            CHECK(table.thresholds[l] >= table.thresholds[l - 1]);
            CHECK(table.populated(l) <= table.populated(l - 1));
            for (std::size_t c = 0; c < a.num_cells(); ++c) {
                if (!table.best[l][c])
                    continue;
                REQUIRE(table.best[l - 1][c].has_value());
                CHECK(*table.best[l][c] <= *table.best[l - 1][c]);
            }
        }
    }
}

TEST_CASE("level 1 admits only the best stability")
{
    const auto t = std::make_shared<const CvtTessellation>(std::vector<Point2>{{0.25, 0.5}, {0.75, 0.5}},
                                                           FeatureBounds{{0, 0}, {1, 1}}, 0);
    MomeArchive a(t, 10);
    a.insert(solution({0.1, 0.5}, {1.0, 3.0}));
    a.insert(solution({0.1, 0.5}, {2.0, 1.0}));
    a.insert(solution({0.9, 0.5}, {5.0, 0.5}));
    const std::vector<double> levels{0.0, 0.5, 1.0};
    const auto table = illuminate(a, levels);
    CHECK(table.thresholds == std::vector<double>{1.0, 3.0, 5.0});
    CHECK(table.best[0][0] == 3.0);
    CHECK(table.best[0][1] == 0.5);
    CHECK_FALSE(table.best[1][0].has_value());
    CHECK(table.best[1][1] == 0.5);
    CHECK(table.populated(2) == 1);
    CHECK(table.best[2][1] == 0.5);

    std::ostringstream out;
    write_illumination_level(out, table, 1, *t);
    CHECK(out.str().find("cell\tcentroid_0\tcentroid_1\tbest_magnetism") != std::string::npos);
    CHECK(out.str().find("\n0\t0.25\t0.5\t\n") != std::string::npos);
    CHECK(out.str().find("\n1\t0.75\t0.5\t0.5\n") != std::string::npos);
}

TEST_CASE("illuminate usage errors")
{
    const auto t = std::make_shared<const CvtTessellation>(std::vector<Point2>{{0.5, 0.5}}, FeatureBounds{{0, 0}, {1, 1}},
                                                           0);
    MomeArchive empty(t, 10);
    const std::vector<double> levels{0.0};
    CHECK_THROWS_AS((void)illuminate(empty, levels), std::invalid_argument);
    MomeArchive one(t, 10);
    one.insert(solution({0.5, 0.5}, {1, 1}));
    const std::vector<double> bad{1.5};
    CHECK_THROWS_AS((void)illuminate(one, bad), std::invalid_argument);
}
