#include "moqd/crystal.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace moqd {

namespace {

constexpr double deg = std::numbers::pi / 180.0;

std::vector<std::string_view> split(std::string_view text, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    while (true) {
        const auto pos = text.find(sep, start);
        if (pos == std::string_view::npos) {
            parts.push_back(text.substr(start));
            return parts;
        }
        parts.push_back(text.substr(start, pos - start));
        start = pos + 1;
    }
}

Vec3 parse_triple(std::string_view text)
{
    const auto parts = split(text, ',');
    if (parts.size() != 3)
        throw std::invalid_argument("genotype: expected three comma-separated values in '" + std::string(text) + "'");
    return {parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
}

void append_triple(std::string& out, const Vec3& v)
{
    out += format_double(v[0]);
    out += ',';
    out += format_double(v[1]);
    out += ',';
    out += format_double(v[2]);
}

} // namespace

Eigen::Matrix3d cell_matrix(const Vec3& lengths, const Vec3& angles)
{
    const double ca = std::cos(angles[0] * deg);
    const double cb = std::cos(angles[1] * deg);
    const double cg = std::cos(angles[2] * deg);
    const double sg = std::sin(angles[2] * deg);
    const double cy = (ca - cb * cg) / sg;
    const double cz2 = 1.0 - cb * cb - cy * cy;
    const double cz = cz2 > 0.0 ? std::sqrt(cz2) : 0.0;

    Eigen::Matrix3d m;
    m.col(0) = Eigen::Vector3d(lengths[0], 0.0, 0.0);
    m.col(1) = Eigen::Vector3d(lengths[1] * cg, lengths[1] * sg, 0.0);
    m.col(2) = Eigen::Vector3d(lengths[2] * cb, lengths[2] * cy, lengths[2] * cz);
    return m;
}

void cell_parameters(const Eigen::Matrix3d& cell, Vec3& lengths, Vec3& angles)
{
    const Eigen::Vector3d a = cell.col(0), b = cell.col(1), c = cell.col(2);
    lengths = {a.norm(), b.norm(), c.norm()};
    auto angle = [](const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
        const double cosv = std::clamp(u.dot(v) / (u.norm() * v.norm()), -1.0, 1.0);
        return std::acos(cosv) / deg;
    };
    angles = {angle(b, c), angle(a, c), angle(a, b)};
}

double cell_volume(const Vec3& lengths, const Vec3& angles)
{
    const double ca = std::cos(angles[0] * deg);
    const double cb = std::cos(angles[1] * deg);
    const double cg = std::cos(angles[2] * deg);
    const double s = 1.0 - ca * ca - cb * cb - cg * cg + 2.0 * ca * cb * cg;
    if (!(s > 0.0))
        return 0.0;
    return lengths[0] * lengths[1] * lengths[2] * std::sqrt(s);
}

double wrap_unit(double x)
{
    double w = x - std::floor(x);
    if (w >= 1.0)
        w = 0.0;
    return w;
}

std::vector<Eigen::Vector3d> cartesian_positions(const CrystalGenotype& g)
{
    const Eigen::Matrix3d cell = cell_matrix(g);
    std::vector<Eigen::Vector3d> out;
    out.reserve(g.size());
    for (const auto& f : g.frac)
        out.emplace_back(cell * Eigen::Vector3d(f[0], f[1], f[2]));
    return out;
}

void check_consistent(const CrystalGenotype& g)
{
    if (g.frac.size() != g.species.size())
        throw std::invalid_argument("genotype: coordinate and species counts differ");
    for (int i = 0; i < 3; ++i) {
        if (!std::isfinite(g.lengths[i]) || g.lengths[i] <= 0.0)
            throw std::invalid_argument("genotype: lattice lengths must be positive");
        if (!std::isfinite(g.angles[i]) || g.angles[i] <= 0.0 || g.angles[i] >= 180.0)
            throw std::invalid_argument("genotype: lattice angles must lie in (0, 180)");
    }
    if (!(cell_volume(g) > 0.0))
        throw std::invalid_argument("genotype: lattice angles do not form a cell");
}

std::string format_double(double x)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view text)
{
    double v = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw std::invalid_argument("not a number: '" + std::string(text) + "'");
    return v;
}

std::string encode_genotype(const CrystalGenotype& g)
{
    std::string out;
    append_triple(out, g.lengths);
    out += '|';
    append_triple(out, g.angles);
    out += '|';
    for (std::size_t i = 0; i < g.species.size(); ++i) {
        if (i)
            out += ',';
        out += g.species[i];
    }
    out += '|';
    for (std::size_t i = 0; i < g.frac.size(); ++i) {
        if (i)
            out += ';';
        append_triple(out, g.frac[i]);
    }
    return out;
}

CrystalGenotype decode_genotype(std::string_view text)
{
    const auto parts = split(text, '|');
    if (parts.size() != 4)
        throw std::invalid_argument("genotype: expected 4 '|'-separated sections");
    CrystalGenotype g;
    g.lengths = parse_triple(parts[0]);
    g.angles = parse_triple(parts[1]);
    if (!parts[2].empty())
        for (auto s : split(parts[2], ','))
            g.species.emplace_back(s);
    if (!parts[3].empty())
        for (auto t : split(parts[3], ';'))
            g.frac.push_back(parse_triple(t));
    check_consistent(g);
    return g;
}

} // namespace moqd
