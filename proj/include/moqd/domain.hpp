#pragma once

/// @file domain.hpp
/// Analytic toy-crystal domain. Stability is the negative of a truncated and
/// shifted Lennard-Jones energy summed over periodic images; the magnetism
/// analog decays with smooth coordination so dense packings score lower.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "moqd/crystal.hpp"
#include "moqd/random.hpp"
#include "moqd/solution.hpp"

namespace moqd {

/// Some pair of atoms sits closer than the hard overlap distance.
class OverlapError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operator cannot act on the given genotype.
class NotApplicableError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

struct SpeciesParams {
    std::string label;
    double sigma = 2.72;  // Å
    double epsilon = 1.0; // eV
    double moment = 1.0;  // magnetic moment analog
    std::size_t count = 8;
};

/// Pair parameters follow Lorentz-Berthelot mixing: sigma_ij = (sigma_i + sigma_j) / 2,
/// epsilon_ij = sqrt(epsilon_i * epsilon_j).
struct DomainParams {
    std::vector<SpeciesParams> species{{"X", 2.72, 1.0, 1.0, 8}};
    // sigma puts the fcc ground state at the initial volume per atom below

    /// LJ cutoff (Å); the potential is shifted to zero here.
    double cutoff = 6.8;
    /// Sum only the nearest periodic image of each other atom (no self images).
    bool minimum_image = false;

    double coordination_cutoff = 3.54; // Å
    double coordination_width = 0.11;  // Å

    FeatureBounds feature_bounds{{2.4, 13.0}, {4.1, 65.0}};

    double initial_volume_per_atom = 450.0 / 24.0; // Å^3
    double initial_volume_spread = 0.1;            // relative half-width of the uniform draw
    double initial_jitter = 0.02;                  // fractional Gaussian std
    double min_volume_per_atom = 0.5;              // Å^3
    double min_distance_ratio = 0.4;               // of sigma_ij
    double overlap_distance = 0.1;                 // Å, hard failure
    double min_angle = 20.0;
    double max_angle = 160.0;

    [[nodiscard]] std::size_t num_atoms() const;
    /// Index of `label` in `species`; throws std::invalid_argument if unknown.
    [[nodiscard]] std::size_t species_index(const std::string& label) const;
    [[nodiscard]] double pair_sigma(std::size_t a, std::size_t b) const;
    [[nodiscard]] double pair_epsilon(std::size_t a, std::size_t b) const;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

/// Cartesian view of a genotype with species resolved to indices.
struct Structure {
    Eigen::Matrix3d cell;
    std::vector<Eigen::Vector3d> positions;
    std::vector<std::size_t> kinds;
};

[[nodiscard]] Structure to_structure(const CrystalGenotype& g, const DomainParams& p);

/// Energy (eV) of a structure; fills `forces` (eV/Å, negative gradient) when non-null.
double lj_energy_forces(const Structure& s, const DomainParams& p, std::vector<Eigen::Vector3d>* forces);

[[nodiscard]] double lj_energy(const CrystalGenotype& g, const DomainParams& p);
[[nodiscard]] std::vector<Eigen::Vector3d> lj_forces(const CrystalGenotype& g, const DomainParams& p);
[[nodiscard]] double max_force_norm(std::span<const Eigen::Vector3d> forces);

/// |sum_i mu_i exp(-c_i / 4)| with smooth coordination c_i around coordination_cutoff.
[[nodiscard]] double magnetism(const CrystalGenotype& g, const DomainParams& p);

/// Per-atom distance to the closest other atom or periodic image.
[[nodiscard]] std::vector<double> nearest_neighbor_distances(const Structure& s);
[[nodiscard]] double mean_nearest_neighbor_distance(const CrystalGenotype& g);

/// Unclamped descriptors: mean nearest-neighbor distance, volume per atom.
[[nodiscard]] std::array<double, 2> raw_features(const CrystalGenotype& g);
[[nodiscard]] FeatureVector compute_features(const CrystalGenotype& g, const DomainParams& p);

struct Evaluation {
    double energy = 0.0;
    double magnetism = 0.0;
    FeatureVector features;
    double force_norm = 0.0;

    [[nodiscard]] ObjectiveVector objectives() const { return ObjectiveVector{-energy, magnetism}; }
};

/// One charged evaluation: energy, forces, magnetism and features together.
[[nodiscard]] Evaluation evaluate(const CrystalGenotype& g, const DomainParams& p);

/// Volume floor, angle bounds and the min_distance_ratio pair test.
[[nodiscard]] bool geometry_ok(const CrystalGenotype& g, const DomainParams& p);

enum class LatticeTemplate : std::uint8_t { SimpleCubic, Bcc, Fcc, Diamond, Rocksalt, Zincblende, Hcp };

[[nodiscard]] std::string_view to_string(LatticeTemplate t);

/// Template replicated to `p.num_atoms()` sites with the given nearest-neighbor
/// spacing; species follow the composition in `p`. Throws std::invalid_argument
/// if the template cannot produce that many atoms or that composition.
[[nodiscard]] CrystalGenotype make_template(LatticeTemplate t, double spacing, const DomainParams& p);

/// Templates usable for the composition in `p`.
[[nodiscard]] std::vector<LatticeTemplate> eligible_templates(const DomainParams& p);

[[nodiscard]] std::vector<CrystalGenotype> initialize_population(std::size_t n, const DomainParams& p, Rng& rng);

/// Applies cell -> (I + strain) * cell and re-derives lengths and angles.
[[nodiscard]] CrystalGenotype apply_strain(const CrystalGenotype& g, const Eigen::Matrix3d& strain);

/// Random symmetric strain with entry std `sigma`; retries up to 10 times when the
/// result fails geometry_ok, then returns the parent unchanged.
[[nodiscard]] CrystalGenotype strain_mutation(const CrystalGenotype& g, double sigma, const DomainParams& p, Rng& rng);

/// Swaps the species of a uniformly chosen cross-species atom pair.
/// Throws NotApplicableError for single-species genotypes.
[[nodiscard]] CrystalGenotype permutation_mutation(const CrystalGenotype& g, Rng& rng);

struct RelaxResult {
    CrystalGenotype genotype;
    double force_norm = 0.0;
    std::size_t steps = 0;
    /// Energy / gradient evaluations spent inside the relaxation.
    std::size_t energy_calls = 0;
    /// Energy of the start point followed by every accepted iterate.
    std::vector<double> energy_trace;
};

struct RelaxSettings {
    double initial_step = 0.05;
    double armijo_c1 = 1e-4;
    std::size_t max_halvings = 20;
    double force_tolerance = 0.01;
};

/// Fixed-cell steepest descent on atom positions with Armijo backtracking.
/// An overlap at the starting point propagates as OverlapError; overlaps at
/// trial points are treated as failed line-search steps.
[[nodiscard]] RelaxResult relax(const CrystalGenotype& g, std::size_t max_steps, const DomainParams& p,
                                const RelaxSettings& settings = {});

/// Keep iff force_norm <= threshold and every objective >= the reference point.
[[nodiscard]] bool filter_solution(const EvaluatedSolution& s, double force_threshold, const ObjectiveVector& ref);

} // namespace moqd
