#include "moqd/domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Geometry>
#include <Eigen/LU>

namespace moqd {

// ---------------------------------------------------------------------------
// Parameters

std::size_t DomainParams::num_atoms() const
{
    std::size_t n = 0;
    for (const auto& s : species)
        n += s.count;
    return n;
}

std::size_t DomainParams::species_index(const std::string& label) const
{
    for (std::size_t i = 0; i < species.size(); ++i)
        if (species[i].label == label)
            return i;
    throw std::invalid_argument("unknown species '" + label + "'");
}

double DomainParams::pair_sigma(std::size_t a, std::size_t b) const
{
    return 0.5 * (species[a].sigma + species[b].sigma);
}

double DomainParams::pair_epsilon(std::size_t a, std::size_t b) const
{
    return std::sqrt(species[a].epsilon * species[b].epsilon);
}

void DomainParams::validate() const
{
    if (species.empty())
        throw std::invalid_argument("domain: at least one species is required");
    for (std::size_t i = 0; i < species.size(); ++i) {
        const auto& s = species[i];
        if (s.label.empty() || s.label.find_first_of(",|;\t\n ") != std::string::npos)
            throw std::invalid_argument("domain: species labels must be non-empty without separators");
        if (!(s.sigma > 0.0) || !(s.epsilon > 0.0))
            throw std::invalid_argument("domain: sigma and epsilon must be positive");
        for (std::size_t j = 0; j < i; ++j)
            if (species[j].label == s.label)
                throw std::invalid_argument("domain: duplicate species label '" + s.label + "'");
    }
    if (num_atoms() == 0)
        throw std::invalid_argument("domain: composition has no atoms");
    if (!(cutoff > 0.0) || !(coordination_cutoff > 0.0) || !(coordination_width > 0.0))
        throw std::invalid_argument("domain: cutoffs must be positive");
    for (std::size_t i = 0; i < 2; ++i)
        if (!(feature_bounds.lo[i] < feature_bounds.hi[i]))
            throw std::invalid_argument("domain: feature bounds must satisfy lo < hi");
    if (!(initial_volume_per_atom > 0.0) || initial_volume_spread < 0.0 || initial_volume_spread >= 1.0)
        throw std::invalid_argument("domain: bad initial volume settings");
    if (!(min_angle > 0.0) || !(max_angle < 180.0) || !(min_angle < max_angle))
        throw std::invalid_argument("domain: angle bounds must satisfy 0 < min < max < 180");
}

// ---------------------------------------------------------------------------
// Periodic pair machinery

namespace {

std::array<double, 3> perpendicular_widths(const Eigen::Matrix3d& cell)
{
    const double volume = std::abs(cell.determinant());
    std::array<double, 3> w{};
    for (int k = 0; k < 3; ++k) {
        const Eigen::Vector3d n = cell.col((k + 1) % 3).cross(cell.col((k + 2) % 3));
        w[static_cast<std::size_t>(k)] = volume / n.norm();
    }
    return w;
}

/// Lattice translations n.L with |n_k| <= range_k.
std::vector<Eigen::Vector3d> translations(const Eigen::Matrix3d& cell, std::array<int, 3> range, bool include_zero)
{
    std::vector<Eigen::Vector3d> out;
    for (int i = -range[0]; i <= range[0]; ++i)
        for (int j = -range[1]; j <= range[1]; ++j)
            for (int k = -range[2]; k <= range[2]; ++k) {
                if (!include_zero && i == 0 && j == 0 && k == 0)
                    continue;
                out.emplace_back(cell * Eigen::Vector3d(i, j, k));
            }
    return out;
}

/// Translations able to bring a minimum-imaged separation within `radius`.
std::array<int, 3> pair_range(const Eigen::Matrix3d& cell, double radius)
{
    const auto w = perpendicular_widths(cell);
    return {static_cast<int>(std::floor(radius / w[0] + 0.5)), static_cast<int>(std::floor(radius / w[1] + 0.5)),
            static_cast<int>(std::floor(radius / w[2] + 0.5))};
}

std::array<int, 3> self_range(const Eigen::Matrix3d& cell, double radius)
{
    const auto w = perpendicular_widths(cell);
    return {static_cast<int>(std::floor(radius / w[0])), static_cast<int>(std::floor(radius / w[1])),
            static_cast<int>(std::floor(radius / w[2]))};
}

struct PairCoefficients {
    double sigma6 = 0.0;
    double eps4 = 0.0;
    double shift = 0.0;
};

/// Pair potential evaluator for one fixed cell and species assignment.
class LjModel {
public:
    LjModel(const Eigen::Matrix3d& cell, const std::vector<std::size_t>& kinds, const DomainParams& p)
        : cell_(cell), inverse_(cell.inverse()), kinds_(kinds), rc2_(p.cutoff * p.cutoff),
          overlap2_(p.overlap_distance * p.overlap_distance), nspecies_(p.species.size())
    {
        coeff_.resize(nspecies_ * nspecies_);
        for (std::size_t a = 0; a < nspecies_; ++a)
            for (std::size_t b = 0; b < nspecies_; ++b) {
                const double s = p.pair_sigma(a, b);
                PairCoefficients c;
                c.sigma6 = std::pow(s, 6);
                c.eps4 = 4.0 * p.pair_epsilon(a, b);
                const double sr6 = c.sigma6 / (rc2_ * rc2_ * rc2_);
                c.shift = c.eps4 * (sr6 * sr6 - sr6);
                coeff_[a * nspecies_ + b] = c;
            }

        if (p.minimum_image) {
            shifts_.emplace_back(Eigen::Vector3d::Zero());
        } else {
            shifts_ = translations(cell_, pair_range(cell_, p.cutoff), true);
            const auto self = translations(cell_, self_range(cell_, p.cutoff), false);
            for (std::size_t i = 0; i < kinds_.size(); ++i) {
                const auto& c = coefficient(kinds_[i], kinds_[i]);
                for (const auto& t : self) {
                    const double r2 = t.squaredNorm();
                    if (r2 < overlap2_)
                        throw OverlapError("atom overlaps its own periodic image");
                    if (r2 < rc2_)
                        self_energy_ += 0.5 * potential(c, r2);
                }
            }
        }
    }

    double energy_forces(const std::vector<Eigen::Vector3d>& pos, std::vector<Eigen::Vector3d>* forces) const
    {
        const std::size_t n = pos.size();
        if (forces)
            forces->assign(n, Eigen::Vector3d::Zero());
        double energy = self_energy_;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const auto& c = coefficient(kinds_[i], kinds_[j]);
                const Eigen::Vector3d d0 = minimum_image(pos[j] - pos[i]);
                for (const auto& t : shifts_) {
                    const Eigen::Vector3d d = d0 + t;
                    const double r2 = d.squaredNorm();
                    if (r2 >= rc2_)
                        continue;
                    if (r2 < overlap2_)
                        throw OverlapError("atoms closer than the overlap distance");
                    const double inv2 = 1.0 / r2;
                    const double sr6 = c.sigma6 * inv2 * inv2 * inv2;
                    energy += c.eps4 * (sr6 * sr6 - sr6) - c.shift;
                    if (forces) {
                        // dphi/dr / r
                        const double g = c.eps4 * (-12.0 * sr6 * sr6 + 6.0 * sr6) * inv2;
                        const Eigen::Vector3d f = g * d;
                        (*forces)[i] += f;
                        (*forces)[j] -= f;
                    }
                }
            }
        }
        return energy;
    }

    [[nodiscard]] Eigen::Vector3d minimum_image(const Eigen::Vector3d& d) const
    {
        Eigen::Vector3d f = inverse_ * d;
        for (int k = 0; k < 3; ++k)
            f[k] -= std::round(f[k]);
        return cell_ * f;
    }

private:
    [[nodiscard]] const PairCoefficients& coefficient(std::size_t a, std::size_t b) const
    {
        return coeff_[a * nspecies_ + b];
    }

    [[nodiscard]] static double potential(const PairCoefficients& c, double r2)
    {
        const double sr6 = c.sigma6 / (r2 * r2 * r2);
        return c.eps4 * (sr6 * sr6 - sr6) - c.shift;
    }

    Eigen::Matrix3d cell_;
    Eigen::Matrix3d inverse_;
    std::vector<std::size_t> kinds_;
    double rc2_;
    double overlap2_;
    std::size_t nspecies_;
    std::vector<PairCoefficients> coeff_;
    std::vector<Eigen::Vector3d> shifts_;
    double self_energy_ = 0.0;
};

Eigen::Vector3d wrapped_difference(const Eigen::Matrix3d& cell, const Eigen::Matrix3d& inverse, const Eigen::Vector3d& d)
{
    Eigen::Vector3d f = inverse * d;
    for (int k = 0; k < 3; ++k)
        f[k] -= std::round(f[k]);
    return cell * f;
}

/// Smallest distance between each pair (i, j), own periodic images included on the diagonal.
std::vector<double> pair_min_distances(const Structure& s)
{
    const std::size_t n = s.positions.size();
    const Eigen::Matrix3d inverse = s.cell.inverse();
    const auto near = translations(s.cell, {2, 2, 2}, true);
    std::vector<double> out(n * n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const Eigen::Vector3d d0 =
                i == j ? Eigen::Vector3d::Zero() : wrapped_difference(s.cell, inverse, s.positions[j] - s.positions[i]);
            double best2 = std::numeric_limits<double>::infinity();
            for (const auto& t : near) {
                const double r2 = (d0 + t).squaredNorm();
                if (i == j && r2 == 0.0)
                    continue;
                best2 = std::min(best2, r2);
            }
            out[i * n + j] = out[j * n + i] = std::sqrt(best2);
        }
    }
    return out;
}

} // namespace

Structure to_structure(const CrystalGenotype& g, const DomainParams& p)
{
    check_consistent(g);
    Structure s;
    s.cell = cell_matrix(g);
    s.positions = cartesian_positions(g);
    s.kinds.reserve(g.size());
    for (const auto& label : g.species)
        s.kinds.push_back(p.species_index(label));
    return s;
}

double lj_energy_forces(const Structure& s, const DomainParams& p, std::vector<Eigen::Vector3d>* forces)
{
    const LjModel model(s.cell, s.kinds, p);
    return model.energy_forces(s.positions, forces);
}

double lj_energy(const CrystalGenotype& g, const DomainParams& p)
{
    return lj_energy_forces(to_structure(g, p), p, nullptr);
}

std::vector<Eigen::Vector3d> lj_forces(const CrystalGenotype& g, const DomainParams& p)
{
    std::vector<Eigen::Vector3d> forces;
    lj_energy_forces(to_structure(g, p), p, &forces);
    return forces;
}

double max_force_norm(std::span<const Eigen::Vector3d> forces)
{
    double m = 0.0;
    for (const auto& f : forces)
        m = std::max(m, f.norm());
    return m;
}

double magnetism(const CrystalGenotype& g, const DomainParams& p)
{
    const Structure s = to_structure(g, p);
    const std::size_t n = s.positions.size();
    const double width = p.coordination_width;
    const double reach = p.coordination_cutoff + 40.0 * width;
    const double reach2 = reach * reach;
    const double overlap2 = p.overlap_distance * p.overlap_distance;
    const Eigen::Matrix3d inverse = s.cell.inverse();
    auto switching = [&](double r) { return 1.0 / (1.0 + std::exp((r - p.coordination_cutoff) / width)); };

    std::vector<double> coordination(n, 0.0);
    if (p.minimum_image) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = i + 1; j < n; ++j) {
                const double r2 = wrapped_difference(s.cell, inverse, s.positions[j] - s.positions[i]).squaredNorm();
                if (r2 < overlap2)
                    throw OverlapError("atoms closer than the overlap distance");
                const double w = switching(std::sqrt(r2));
                coordination[i] += w;
                coordination[j] += w;
            }
    } else {
        const auto shifts = translations(s.cell, pair_range(s.cell, reach), true);
        const auto self = translations(s.cell, self_range(s.cell, reach), false);
        double self_count = 0.0;
        for (const auto& t : self) {
            const double r2 = t.squaredNorm();
            if (r2 < reach2)
                self_count += switching(std::sqrt(r2));
        }
        for (std::size_t i = 0; i < n; ++i) {
            coordination[i] += self_count;
            for (std::size_t j = i + 1; j < n; ++j) {
                const Eigen::Vector3d d0 = wrapped_difference(s.cell, inverse, s.positions[j] - s.positions[i]);
                for (const auto& t : shifts) {
                    const double r2 = (d0 + t).squaredNorm();
                    if (r2 >= reach2)
                        continue;
                    if (r2 < overlap2)
                        throw OverlapError("atoms closer than the overlap distance");
                    const double w = switching(std::sqrt(r2));
                    coordination[i] += w;
                    coordination[j] += w;
                }
            }
        }
    }

    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        total += p.species[s.kinds[i]].moment * std::exp(-coordination[i] / 4.0);
    return std::abs(total);
}

std::vector<double> nearest_neighbor_distances(const Structure& s)
{
    const std::size_t n = s.positions.size();
    const auto d = pair_min_distances(s);
    std::vector<double> out(n, std::numeric_limits<double>::infinity());
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i] = std::min(out[i], d[i * n + j]);
    return out;
}

double mean_nearest_neighbor_distance(const CrystalGenotype& g)
{
    check_consistent(g);
    Structure s;
    s.cell = cell_matrix(g);
    s.positions = cartesian_positions(g);
    const auto nn = nearest_neighbor_distances(s);
    if (nn.empty())
        return 0.0;
    return std::accumulate(nn.begin(), nn.end(), 0.0) / static_cast<double>(nn.size());
}

std::array<double, 2> raw_features(const CrystalGenotype& g)
{
    const double n = static_cast<double>(std::max<std::size_t>(g.size(), 1));
    return {mean_nearest_neighbor_distance(g), cell_volume(g) / n};
}

FeatureVector compute_features(const CrystalGenotype& g, const DomainParams& p)
{
    return FeatureVector::clamp(raw_features(g), p.feature_bounds);
}

Evaluation evaluate(const CrystalGenotype& g, const DomainParams& p)
{
    const Structure s = to_structure(g, p);
    std::vector<Eigen::Vector3d> forces;
    Evaluation e;
    e.energy = lj_energy_forces(s, p, &forces);
    e.force_norm = max_force_norm(forces);
    e.magnetism = magnetism(g, p);
    e.features = compute_features(g, p);
    return e;
}

bool geometry_ok(const CrystalGenotype& g, const DomainParams& p)
{
    for (double a : g.angles)
        if (!(a > p.min_angle && a < p.max_angle))
            return false;
    const double volume = cell_volume(g);
    if (!(volume >= p.min_volume_per_atom * static_cast<double>(g.size())))
        return false;
    const Structure s = to_structure(g, p);
    const std::size_t n = g.size();
    const auto d = pair_min_distances(s);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) {
            const double limit = std::max(p.min_distance_ratio * p.pair_sigma(s.kinds[i], s.kinds[j]), p.overlap_distance);
            if (d[i * n + j] < limit)
                return false;
        }
    return true;
}

// ---------------------------------------------------------------------------
// Initialization

std::string_view to_string(LatticeTemplate t)
{
    switch (t) {
    case LatticeTemplate::SimpleCubic:
        return "simple_cubic";
    case LatticeTemplate::Bcc:
        return "bcc";
    case LatticeTemplate::Fcc:
        return "fcc";
    case LatticeTemplate::Diamond:
        return "diamond";
    case LatticeTemplate::Rocksalt:
        return "rocksalt";
    case LatticeTemplate::Zincblende:
        return "zincblende";
    case LatticeTemplate::Hcp:
        return "hcp";
    }
    return "unknown";
}

namespace {

struct Basis {
    Vec3 lengths;
    Vec3 angles;
    std::vector<Vec3> sites;
    /// Sublattice per site; only meaningful for two-species templates.
    std::vector<int> sublattice;
};

Basis basis_for(LatticeTemplate t, double d)
{
    const double r3 = std::sqrt(3.0), r2 = std::sqrt(2.0);
    switch (t) {
    case LatticeTemplate::SimpleCubic:
        return {{d, d, d}, {90, 90, 90}, {{0, 0, 0}}, {0}};
    case LatticeTemplate::Bcc: {
        const double a = 2.0 * d / r3;
        return {{a, a, a}, {90, 90, 90}, {{0, 0, 0}, {0.5, 0.5, 0.5}}, {0, 0}};
    }
    case LatticeTemplate::Fcc: {
        const double a = r2 * d;
        return {{a, a, a}, {90, 90, 90}, {{0, 0, 0}, {0, 0.5, 0.5}, {0.5, 0, 0.5}, {0.5, 0.5, 0}}, {0, 0, 0, 0}};
    }
    case LatticeTemplate::Diamond:
    case LatticeTemplate::Zincblende: {
        const double a = 4.0 * d / r3;
        return {{a, a, a},
                {90, 90, 90},
                {{0, 0, 0},
                 {0, 0.5, 0.5},
                 {0.5, 0, 0.5},
                 {0.5, 0.5, 0},
                 {0.25, 0.25, 0.25},
                 {0.25, 0.75, 0.75},
                 {0.75, 0.25, 0.75},
                 {0.75, 0.75, 0.25}},
                {0, 0, 0, 0, 1, 1, 1, 1}};
    }
    case LatticeTemplate::Rocksalt: {
        const double a = 2.0 * d;
        return {{a, a, a},
                {90, 90, 90},
                {{0, 0, 0},
                 {0, 0.5, 0.5},
                 {0.5, 0, 0.5},
                 {0.5, 0.5, 0},
                 {0.5, 0, 0},
                 {0.5, 0.5, 0.5},
                 {0, 0, 0.5},
                 {0, 0.5, 0}},
                {0, 0, 0, 0, 1, 1, 1, 1}};
    }
    case LatticeTemplate::Hcp: {
        const double c = std::sqrt(8.0 / 3.0) * d;
        return {{d, d, c}, {90, 90, 120}, {{1.0 / 3, 2.0 / 3, 0.25}, {2.0 / 3, 1.0 / 3, 0.75}}, {0, 0}};
    }
    }
    throw std::invalid_argument("unknown lattice template");
}

bool two_species_template(LatticeTemplate t)
{
    return t == LatticeTemplate::Rocksalt || t == LatticeTemplate::Zincblende;
}

/// Most balanced (n1 >= n2 >= n3) factorization of m.
std::array<int, 3> balanced_factors(int m)
{
    std::array<int, 3> best{m, 1, 1};
    for (int a = 1; a <= m; ++a) {
        if (m % a)
            continue;
        for (int b = 1; b <= m / a; ++b) {
            if ((m / a) % b)
                continue;
            const int c = m / a / b;
            std::array<int, 3> f{a, b, c};
            std::sort(f.begin(), f.end(), std::greater<>());
            if (f[0] < best[0] || (f[0] == best[0] && f[1] < best[1]))
                best = f;
        }
    }
    return best;
}

} // namespace

CrystalGenotype make_template(LatticeTemplate t, double spacing, const DomainParams& p)
{
    const Basis basis = basis_for(t, spacing);
    const std::size_t n = p.num_atoms();
    const std::size_t per_cell = basis.sites.size();
    if (n % per_cell != 0)
        throw std::invalid_argument("template " + std::string(to_string(t)) + " cannot hold this many atoms");
    const bool two = two_species_template(t);
    if (two && (p.species.size() != 2 || p.species[0].count != p.species[1].count))
        throw std::invalid_argument("template " + std::string(to_string(t)) + " needs a 1:1 two-species composition");

    const auto reps = balanced_factors(static_cast<int>(n / per_cell));
    CrystalGenotype g;
    g.angles = basis.angles;
    for (std::size_t k = 0; k < 3; ++k)
        g.lengths[k] = basis.lengths[k] * reps[k];

    std::vector<std::string> labels;
    for (const auto& s : p.species)
        labels.insert(labels.end(), s.count, s.label);

    std::size_t next_label = 0;
    for (int i = 0; i < reps[0]; ++i)
        for (int j = 0; j < reps[1]; ++j)
            for (int k = 0; k < reps[2]; ++k)
                for (std::size_t s = 0; s < per_cell; ++s) {
                    const Vec3& b = basis.sites[s];
                    g.frac.push_back({(b[0] + i) / reps[0], (b[1] + j) / reps[1], (b[2] + k) / reps[2]});
                    if (two)
                        g.species.push_back(p.species[static_cast<std::size_t>(basis.sublattice[s])].label);
                    else
                        g.species.push_back(labels[next_label++]);
                }
    return g;
}

std::vector<LatticeTemplate> eligible_templates(const DomainParams& p)
{
    const std::size_t n = p.num_atoms();
    const bool one_to_one = p.species.size() == 2 && p.species[0].count == p.species[1].count;
    std::vector<LatticeTemplate> out;
    if (one_to_one) {
        for (auto t : {LatticeTemplate::Rocksalt, LatticeTemplate::Zincblende})
            if (n % 8 == 0)
                out.push_back(t);
        if (!out.empty())
            return out;
    }
    for (auto t : {LatticeTemplate::SimpleCubic, LatticeTemplate::Bcc, LatticeTemplate::Fcc, LatticeTemplate::Diamond})
        if (n % basis_for(t, 1.0).sites.size() == 0)
            out.push_back(t);
    return out;
}

std::vector<CrystalGenotype> initialize_population(std::size_t n, const DomainParams& p, Rng& rng)
{
    p.validate();
    const auto templates = eligible_templates(p);
    const std::size_t atoms = p.num_atoms();
    const bool multi = p.species.size() > 1;
    std::vector<CrystalGenotype> population;
    population.reserve(n);

    constexpr int max_attempts = 1000;
    while (population.size() < n) {
        CrystalGenotype g;
        bool ok = false;
        for (int attempt = 0; attempt < max_attempts && !ok; ++attempt) {
            const double target = p.initial_volume_per_atom *
                                  rng.uniform(1.0 - p.initial_volume_spread, 1.0 + p.initial_volume_spread) *
                                  static_cast<double>(atoms);
            if (templates.empty()) {
                const double edge = std::cbrt(target);
                g = CrystalGenotype{};
                g.lengths = {edge, edge, edge};
                for (const auto& s : p.species)
                    for (std::size_t k = 0; k < s.count; ++k) {
                        g.frac.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
                        g.species.push_back(s.label);
                    }
            } else {
                const auto t = templates[rng.index(templates.size())];
                g = make_template(t, 1.0, p);
                const double scale = std::cbrt(target / cell_volume(g));
                for (auto& l : g.lengths)
                    l *= scale;
                for (auto& f : g.frac)
                    for (auto& x : f)
                        x = wrap_unit(x + rng.normal(0.0, p.initial_jitter));
                if (multi && !two_species_template(t)) {
                    // Fisher-Yates on labels so the composition is kept
                    for (std::size_t i = g.species.size(); i > 1; --i)
                        std::swap(g.species[i - 1], g.species[rng.index(i)]);
                }
            }
            ok = geometry_ok(g, p);
        }
        if (!ok)
            throw std::runtime_error("initialize_population: could not build a valid structure");
        population.push_back(std::move(g));
    }
    return population;
}

// ---------------------------------------------------------------------------
// Variation

CrystalGenotype apply_strain(const CrystalGenotype& g, const Eigen::Matrix3d& strain)
{
    if (strain.isZero(0.0))
        return g;
    const Eigen::Matrix3d deformed = (Eigen::Matrix3d::Identity() + strain) * cell_matrix(g);
    CrystalGenotype child = g;
    cell_parameters(deformed, child.lengths, child.angles);
    return child;
}

CrystalGenotype strain_mutation(const CrystalGenotype& g, double sigma, const DomainParams& p, Rng& rng)
{
    if (sigma < 0.0)
        throw std::invalid_argument("strain_mutation: sigma must be non-negative");
    if (sigma == 0.0)
        return g;
    constexpr int max_retries = 10;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        Eigen::Matrix3d raw;
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                raw(r, c) = rng.normal(0.0, sigma);
        const Eigen::Matrix3d strain = 0.5 * (raw + raw.transpose());
        CrystalGenotype child = apply_strain(g, strain);
        if (cell_volume(child) > 0.0 && geometry_ok(child, p))
            return child;
    }
    return g;
}

CrystalGenotype permutation_mutation(const CrystalGenotype& g, Rng& rng)
{
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t j = i + 1; j < g.size(); ++j)
            if (g.species[i] != g.species[j])
                candidates.emplace_back(i, j);
    if (candidates.empty())
        throw NotApplicableError("permutation_mutation: genotype has a single species");
    const auto [i, j] = candidates[rng.index(candidates.size())];
    CrystalGenotype child = g;
    std::swap(child.species[i], child.species[j]);
    return child;
}

// ---------------------------------------------------------------------------
// Relaxation and filtering

RelaxResult relax(const CrystalGenotype& g, std::size_t max_steps, const DomainParams& p, const RelaxSettings& settings)
{
    const Structure s = to_structure(g, p);
    const LjModel model(s.cell, s.kinds, p);

    std::vector<Eigen::Vector3d> x = s.positions;
    std::vector<Eigen::Vector3d> forces;
    std::vector<Eigen::Vector3d> trial(x.size());
    std::vector<Eigen::Vector3d> trial_forces;

    RelaxResult result;
    double energy = model.energy_forces(x, &forces);
    result.energy_calls = 1;
    result.energy_trace.push_back(energy);

    for (std::size_t step = 0; step < max_steps; ++step) {
        if (max_force_norm(forces) < settings.force_tolerance)
            break;
        double grad2 = 0.0;
        for (const auto& f : forces)
            grad2 += f.squaredNorm();

        double alpha = settings.initial_step;
        bool accepted = false;
        for (std::size_t h = 0; h <= settings.max_halvings; ++h, alpha *= 0.5) {
            for (std::size_t i = 0; i < x.size(); ++i)
                trial[i] = x[i] + alpha * forces[i];
            double trial_energy = 0.0;
            try {
                ++result.energy_calls;
                trial_energy = model.energy_forces(trial, &trial_forces);
            } catch (const OverlapError&) {
                continue;
            }
            if (trial_energy <= energy - settings.armijo_c1 * alpha * grad2) {
                x.swap(trial);
                forces.swap(trial_forces);
                energy = trial_energy;
                accepted = true;
                break;
            }
        }
        if (!accepted)
            break;
        ++result.steps;
        result.energy_trace.push_back(energy);
    }

    result.force_norm = max_force_norm(forces);
    result.genotype = g;
    if (result.steps > 0) {
        const Eigen::Matrix3d inverse = s.cell.inverse();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const Eigen::Vector3d f = inverse * x[i];
            result.genotype.frac[i] = {wrap_unit(f[0]), wrap_unit(f[1]), wrap_unit(f[2])};
        }
    }
    return result;
}

bool filter_solution(const EvaluatedSolution& s, double force_threshold, const ObjectiveVector& ref)
{
    if (!(s.force_norm <= force_threshold))
        return false;
    if (s.objectives.size() != ref.size())
        throw std::invalid_argument("filter_solution: reference point has the wrong length");
    for (std::size_t i = 0; i < ref.size(); ++i)
        if (s.objectives[i] < ref[i])
            return false;
    return true;
}

} // namespace moqd
