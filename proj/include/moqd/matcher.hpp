#pragma once

/// @file matcher.hpp
/// Simplified periodic structure matching and the reference-structure report.
/// There is no cell reduction or supercell search: both structures must use
/// the same atom count, and lattices are compared axis by axis under the six
/// axis permutations.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "moqd/archive.hpp"
#include "moqd/crystal.hpp"
#include "moqd/domain.hpp"

namespace moqd {

struct MatchTolerances {
    /// Relative lattice-length tolerance.
    double ltol = 0.2;
    /// Angle tolerance, degrees.
    double atol = 5.0;
    /// Site tolerance as a fraction of the target's mean nearest-neighbor distance.
    double stol = 0.3;

    /// Throws std::invalid_argument unless all tolerances are positive.
    void validate() const;
};

/// Largest site displacement (Å) when the fractional sites of `from` are laid
/// onto `onto` in the lattice of `onto`, minimized over origin shifts that
/// put an atom of the rarest species on a same-species atom. Sites are paired
/// greedily by ascending minimum-image distance. Returns nullopt when the
/// species multisets differ.
[[nodiscard]] std::optional<double> site_mismatch(const CrystalGenotype& from, const CrystalGenotype& onto);

/// Lattice gate on sorted lengths and angles, then a site check in both
/// directions; true only if both pass.
[[nodiscard]] bool structures_match(const CrystalGenotype& a, const CrystalGenotype& b,
                                    const MatchTolerances& tol = {});

struct ReferenceStructure {
    std::string name;
    CrystalGenotype genotype;
    std::optional<ObjectiveVector> objectives;
};

/// Tab-separated records `name genotype [objective_0 objective_1]`; lines
/// starting with '#' are comments. Throws std::runtime_error on bad input.
[[nodiscard]] std::vector<ReferenceStructure> read_references(std::istream& in);
void write_references(std::ostream& out, const std::vector<ReferenceStructure>& refs);

/// Nearest-neighbor spacing of `t` that minimizes the energy under `p`
/// (golden-section search over [0.8, 1.6] sigma of the first species).
[[nodiscard]] double optimal_spacing(LatticeTemplate t, const DomainParams& p);

/// FCC and HCP ground-state references at their energy-minimizing spacings,
/// with their evaluated objectives.
[[nodiscard]] std::vector<ReferenceStructure> build_reference_structures(const DomainParams& p);

struct ReferenceMatch {
    std::string name;
    std::size_t cell = 0;
    ObjectiveVector objectives;
    /// Provenance ids of same-cell solutions that match the reference structurally.
    std::vector<std::uint64_t> matches;
    /// Some same-cell solution beats the reference on f1 (resp. f2).
    bool outperforms_stability = false;
    bool outperforms_magnetism = false;
};

[[nodiscard]] std::vector<ReferenceMatch> match_archive(const MomeArchive& archive,
                                                        const std::vector<ReferenceStructure>& refs,
                                                        const MatchTolerances& tol, const DomainParams& p);

void write_match_report(std::ostream& out, const std::vector<ReferenceMatch>& report);

} // namespace moqd
