#pragma once

// Small builders shared by the test binaries.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "moqd/domain.hpp"
#include "moqd/random.hpp"

namespace testing_helpers {

/// One species with the given LJ parameters and atom count.
inline moqd::DomainParams single_species(double sigma, double epsilon, std::size_t count, double cutoff)
{
    moqd::DomainParams p;
    p.species = {{"X", sigma, epsilon, 1.0, count}};
    p.cutoff = cutoff;
    return p;
}

/// Cubic box of edge `edge` holding atoms at the given Cartesian positions.
inline moqd::CrystalGenotype box(double edge, const std::vector<std::array<double, 3>>& cart,
                                 const std::string& label = "X")
{
    moqd::CrystalGenotype g;
    g.lengths = {edge, edge, edge};
    for (const auto& c : cart) {
        g.frac.push_back({moqd::wrap_unit(c[0] / edge), moqd::wrap_unit(c[1] / edge), moqd::wrap_unit(c[2] / edge)});
        g.species.push_back(label);
    }
    return g;
}

/// Random triclinic cell near the configured volume with uniformly random
/// sites, redrawn until it passes the geometry checks.
inline moqd::CrystalGenotype random_genotype(const moqd::DomainParams& p, moqd::Rng& rng)
{
    const std::size_t n = p.num_atoms();
    while (true) {
        moqd::CrystalGenotype g;
        g.angles = {rng.uniform(70, 110), rng.uniform(70, 110), rng.uniform(70, 110)};
        g.lengths = {rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2), rng.uniform(0.8, 1.2)};
        const double target = p.initial_volume_per_atom * rng.uniform(0.8, 1.3) * static_cast<double>(n);
        const double v = moqd::cell_volume(g);
        if (!(v > 0.0))
            continue;
        const double s = std::cbrt(target / v);
        for (auto& l : g.lengths)
            l *= s;
        for (const auto& sp : p.species)
            for (std::size_t k = 0; k < sp.count; ++k) {
                g.frac.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
                g.species.push_back(sp.label);
            }
        if (moqd::geometry_ok(g, p))
            return g;
    }
}

/// Eligible template at a random spacing, lightly strained, rigidly shifted
/// and with its same-species sites shuffled.
inline moqd::CrystalGenotype random_template(const moqd::DomainParams& p, moqd::Rng& rng)
{
    const auto kinds = moqd::eligible_templates(p);
    const auto t = kinds[rng.index(kinds.size())];
    auto g = moqd::make_template(t, rng.uniform(2.6, 3.4), p);
    Eigen::Matrix3d strain;
    for (int i = 0; i < 3; ++i)
        for (int j = i; j < 3; ++j)
            strain(i, j) = strain(j, i) = rng.normal(0.0, 0.03);
    g = moqd::apply_strain(g, strain);
    const moqd::Vec3 shift{rng.uniform(), rng.uniform(), rng.uniform()};
    for (auto& f : g.frac)
        for (std::size_t k = 0; k < 3; ++k)
            f[k] = moqd::wrap_unit(f[k] + shift[k]);
    for (std::size_t i = g.size(); i > 1; --i) {
        const std::size_t j = rng.index(i);
        if (g.species[i - 1] == g.species[j])
            std::swap(g.frac[i - 1], g.frac[j]);
    }
    return g;
}

/// Stand-alone archive entry with a one-atom genotype and the given
/// descriptors and objectives.
inline moqd::EvaluatedSolution solution(std::array<double, 2> features, moqd::ObjectiveVector objectives,
                                        std::uint64_t id = 0)
{
    moqd::EvaluatedSolution s;
    s.genotype = box(5.0, {{0.0, 0.0, 0.0}});
    s.features.values = features;
    s.objectives = std::move(objectives);
    s.force_norm = 0.25;
    s.provenance.id = id;
    return s;
}

} // namespace testing_helpers
