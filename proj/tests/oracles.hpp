#pragma once

// Independent reference computations used by the tests. Nothing here calls the
// library routine it is meant to check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <set>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "moqd/pareto.hpp"
#include "moqd/random.hpp"

namespace oracle {

using moqd::ObjectiveVector;

/// O(n^2) non-dominated set, duplicates collapsed.
inline std::vector<ObjectiveVector> non_dominated(const std::vector<ObjectiveVector>& pts)
{
    std::vector<ObjectiveVector> out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        bool keep = true;
        for (std::size_t j = 0; j < pts.size() && keep; ++j) {
            bool ge = true, gt = false;
            for (std::size_t k = 0; k < pts[i].size(); ++k) {
                ge = ge && pts[j][k] >= pts[i][k];
                gt = gt || pts[j][k] > pts[i][k];
            }
            if (ge && gt)
                keep = false;
        }
        if (keep && std::find(out.begin(), out.end(), pts[i]) == out.end())
            out.push_back(pts[i]);
    }
    return out;
}

/// Exact union area by coordinate compression: every elementary grid rectangle
/// is tested for coverage.
inline double grid_area(const std::vector<ObjectiveVector>& pts, const ObjectiveVector& ref)
{
    std::vector<double> xs{ref[0]}, ys{ref[1]};
    for (const auto& p : pts) {
        xs.push_back(std::max(p[0], ref[0]));
        ys.push_back(std::max(p[1], ref[1]));
    }
    std::sort(xs.begin(), xs.end());
    std::sort(ys.begin(), ys.end());
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < xs.size(); ++i)
        for (std::size_t j = 0; j + 1 < ys.size(); ++j) {
            const double cx = 0.5 * (xs[i] + xs[i + 1]), cy = 0.5 * (ys[j] + ys[j + 1]);
            for (const auto& p : pts)
                if (p[0] >= cx && p[1] >= cy) {
                    area += (xs[i + 1] - xs[i]) * (ys[j + 1] - ys[j]);
                    break;
                }
        }
    return area;
}

/// Monte-Carlo estimate of the union area inside the bounding box of the points.
inline double monte_carlo_area(const std::vector<ObjectiveVector>& pts, const ObjectiveVector& ref,
                               std::size_t samples, std::uint64_t seed)
{
    double hx = ref[0], hy = ref[1];
    for (const auto& p : pts) {
        hx = std::max(hx, p[0]);
        hy = std::max(hy, p[1]);
    }
    if (hx <= ref[0] || hy <= ref[1])
        return 0.0;
    moqd::Rng rng(seed);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < samples; ++s) {
        const double x = rng.uniform(ref[0], hx), y = rng.uniform(ref[1], hy);
        for (const auto& p : pts)
            if (p[0] >= x && p[1] >= y) {
                ++hits;
                break;
            }
    }
    return (hx - ref[0]) * (hy - ref[1]) * static_cast<double>(hits) / static_cast<double>(samples);
}

/// Textbook NSGA-II crowding distance.
inline std::vector<double> crowding(const std::vector<ObjectiveVector>& f)
{
    const std::size_t n = f.size();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(n, 0.0);
    if (n <= 2)
        return std::vector<double>(n, inf);
    for (std::size_t k = 0; k < f[0].size(); ++k) {
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i)
            idx[i] = i;
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return f[a][k] < f[b][k]; });
        const double lo = f[idx.front()][k], hi = f[idx.back()][k];
        d[idx.front()] = inf;
        d[idx.back()] = inf;
        if (hi == lo)
            continue;
        for (std::size_t r = 1; r + 1 < n; ++r)
            d[idx[r]] += (f[idx[r + 1]][k] - f[idx[r - 1]][k]) / (hi - lo);
    }
    return d;
}

/// Truncated, shifted LJ energy by a direct loop over atom pairs and a fixed
/// block of lattice translations (large enough for the caller's cutoff).
inline double lj_direct(const Eigen::Matrix3d& cell, const std::vector<Eigen::Vector3d>& pos, double sigma,
                        double epsilon, double cutoff, int reach)
{
    auto phi = [&](double r) {
        const double sr6 = std::pow(sigma / r, 6);
        return 4.0 * epsilon * (sr6 * sr6 - sr6);
    };
    const double shift = phi(cutoff);
    double e = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = 0; j < pos.size(); ++j)
            for (int a = -reach; a <= reach; ++a)
                for (int b = -reach; b <= reach; ++b)
                    for (int c = -reach; c <= reach; ++c) {
                        if (i == j && a == 0 && b == 0 && c == 0)
                            continue;
                        const Eigen::Vector3d t = cell * Eigen::Vector3d(a, b, c);
                        const double r = (pos[j] + t - pos[i]).norm();
                        if (r < cutoff)
                            e += 0.5 * (phi(r) - shift);
                    }
    return e;
}

/// Same sum as lj_direct carried out in long double on plain coordinate
/// arrays, for finite differences that do not drown in round-off.
inline long double lj_direct_ld(const long double cell[3][3], const std::vector<std::array<long double, 3>>& pos,
                                long double sigma, long double epsilon, long double cutoff, int reach)
{
    auto phi = [&](long double r2) {
        const long double s2 = sigma * sigma / r2;
        const long double sr6 = s2 * s2 * s2;
        return 4.0L * epsilon * (sr6 * sr6 - sr6);
    };
    const long double rc2 = cutoff * cutoff;
    const long double shift = phi(rc2);
    long double e = 0.0L;
    for (std::size_t i = 0; i < pos.size(); ++i)
        for (std::size_t j = 0; j < pos.size(); ++j)
            for (int a = -reach; a <= reach; ++a)
                for (int b = -reach; b <= reach; ++b)
                    for (int c = -reach; c <= reach; ++c) {
                        if (i == j && a == 0 && b == 0 && c == 0)
                            continue;
                        long double r2 = 0.0L;
                        for (int k = 0; k < 3; ++k) {
                            const long double d =
                                pos[j][k] - pos[i][k] + cell[k][0] * a + cell[k][1] * b + cell[k][2] * c;
                            r2 += d * d;
                        }
                        if (r2 < rc2)
                            e += 0.5L * (phi(r2) - shift);
                    }
    return e;
}

/// |sum_i mu exp(-c_i/4)| with logistic coordination counted over a block of images.
inline double magnetism_direct(const Eigen::Matrix3d& cell, const std::vector<Eigen::Vector3d>& pos, double mu,
                               double rc, double width, int reach)
{
    double total = 0.0;
    for (std::size_t i = 0; i < pos.size(); ++i) {
        double ci = 0.0;
        for (std::size_t j = 0; j < pos.size(); ++j)
            for (int a = -reach; a <= reach; ++a)
                for (int b = -reach; b <= reach; ++b)
                    for (int c = -reach; c <= reach; ++c) {
                        if (i == j && a == 0 && b == 0 && c == 0)
                            continue;
                        const double r = (pos[j] + cell * Eigen::Vector3d(a, b, c) - pos[i]).norm();
                        ci += 1.0 / (1.0 + std::exp((r - rc) / width));
                    }
        total += mu * std::exp(-ci / 4.0);
    }
    return std::abs(total);
}

/// Exact two-sided signed-rank p-value by enumerating all 2^n sign patterns.
inline double wilcoxon_enumerate(const std::vector<double>& ranks, double w_plus)
{
    const std::size_t n = ranks.size();
    std::size_t lower = 0, upper = 0;
    const std::uint64_t patterns = std::uint64_t{1} << n;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
        double w = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (mask >> i & 1U)
                w += ranks[i];
        if (w <= w_plus + 1e-9)
            ++lower;
        if (w >= w_plus - 1e-9)
            ++upper;
    }
    return std::min(1.0, 2.0 * static_cast<double>(std::min(lower, upper)) / static_cast<double>(patterns));
}

} // namespace oracle
