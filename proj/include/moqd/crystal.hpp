#pragma once

/// @file crystal.hpp
/// Unit-cell genotype, lattice geometry and the flat text encoding used in
/// archive snapshots and reference files.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace moqd {

using Vec3 = std::array<double, 3>;

/// Search-space point: lattice lengths (Å), lattice angles (degrees, alpha =
/// angle(b,c), beta = angle(a,c), gamma = angle(a,b)), fractional coordinates
/// in [0,1) and one species label per atom.
struct CrystalGenotype {
    Vec3 lengths{};
    Vec3 angles{90.0, 90.0, 90.0};
    std::vector<Vec3> frac;
    std::vector<std::string> species;

    [[nodiscard]] std::size_t size() const noexcept { return frac.size(); }

    friend bool operator==(const CrystalGenotype&, const CrystalGenotype&) = default;
};

/// Cell matrix with the lattice vectors a, b, c as columns; a along x, b in the xy-plane.
[[nodiscard]] Eigen::Matrix3d cell_matrix(const Vec3& lengths, const Vec3& angles);
[[nodiscard]] inline Eigen::Matrix3d cell_matrix(const CrystalGenotype& g) { return cell_matrix(g.lengths, g.angles); }

/// Lengths and angles (degrees) of the columns of `cell`.
void cell_parameters(const Eigen::Matrix3d& cell, Vec3& lengths, Vec3& angles);

/// Volume from lengths and angles; 0 when the angles cannot close a cell.
[[nodiscard]] double cell_volume(const Vec3& lengths, const Vec3& angles);
[[nodiscard]] inline double cell_volume(const CrystalGenotype& g) { return cell_volume(g.lengths, g.angles); }

/// Wraps a fractional coordinate into [0, 1).
[[nodiscard]] double wrap_unit(double x);

/// Cartesian positions (Å) of every atom.
[[nodiscard]] std::vector<Eigen::Vector3d> cartesian_positions(const CrystalGenotype& g);

/// Throws std::invalid_argument when counts disagree or lattice parameters are
/// non-positive / non-finite.
void check_consistent(const CrystalGenotype& g);

/// Encoding: `a,b,c|alpha,beta,gamma|S1,S2,...|x,y,z;x,y,z;...` with shortest
/// round-trip decimal digits, so decode(encode(g)) == g bit for bit.
[[nodiscard]] std::string encode_genotype(const CrystalGenotype& g);
[[nodiscard]] CrystalGenotype decode_genotype(std::string_view text);

/// Shortest decimal text that parses back to exactly `x`.
[[nodiscard]] std::string format_double(double x);
/// Parses a full token as a double; throws std::invalid_argument otherwise.
[[nodiscard]] double parse_double(std::string_view text);

} // namespace moqd
