#include "moqd/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace moqd {

ObjectiveVector::ObjectiveVector(std::initializer_list<double> values)
    : ObjectiveVector(std::vector<double>(values))
{
}

ObjectiveVector::ObjectiveVector(std::vector<double> values) : values_(std::move(values))
{
    for (double v : values_)
        if (!std::isfinite(v))
            throw std::invalid_argument("ObjectiveVector: non-finite objective value");
}

bool dominates(const ObjectiveVector& a, const ObjectiveVector& b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("dominates: objective vectors differ in length");
    bool strictly_better = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] < b[i])
            return false;
        if (a[i] > b[i])
            strictly_better = true;
    }
    return strictly_better;
}

double hypervolume2d(std::span<const ObjectiveVector> front, const ObjectiveVector& ref)
{
    if (ref.size() != 2)
        throw std::domain_error("hypervolume2d: only two objectives are supported");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(front.size());
    for (const auto& p : front) {
        if (p.size() != 2)
            throw std::domain_error("hypervolume2d: only two objectives are supported");
        pts.emplace_back(std::max(p[0], ref[0]), std::max(p[1], ref[1]));
    }
    std::sort(pts.begin(), pts.end(), [](const auto& l, const auto& r) {
        return l.first > r.first || (l.first == r.first && l.second > r.second);
    });

    double area = 0.0;
    double covered_y = ref[1];
    for (const auto& [x, y] : pts) {
        if (y > covered_y) {
            area += (x - ref[0]) * (y - covered_y);
            covered_y = y;
        }
    }
    return area;
}

std::vector<double> crowding_distances(std::span<const ObjectiveVector> front)
{
    const std::size_t n = front.size();
    std::vector<double> dist(n, 0.0);
    if (n == 0)
        return dist;
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (n <= 2) {
        std::fill(dist.begin(), dist.end(), inf);
        return dist;
    }

    const std::size_t k = front[0].size();
    std::vector<std::size_t> order(n);
    for (std::size_t m = 0; m < k; ++m) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t l, std::size_t r) { return front[l][m] < front[r][m]; });
        const double lo = front[order.front()][m];
        const double hi = front[order.back()][m];
        dist[order.front()] = inf;
        dist[order.back()] = inf;
        if (hi == lo)
            continue;
        for (std::size_t i = 1; i + 1 < n; ++i)
            dist[order[i]] += (front[order[i + 1]][m] - front[order[i - 1]][m]) / (hi - lo);
    }
    return dist;
}

std::vector<std::size_t> non_dominated_indices(std::span<const ObjectiveVector> points)
{
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < points.size(); ++i) {
        bool dominated = false;
        for (std::size_t j = 0; j < points.size() && !dominated; ++j) {
            if (i == j)
                continue;
            dominated = dominates(points[j], points[i]) || (j < i && points[j] == points[i]);
        }
        if (!dominated)
            keep.push_back(i);
    }
    return keep;
}

} // namespace moqd
