#include "moqd/matcher.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>


namespace moqd {

void MatchTolerances::validate() const
{
    if (!(ltol > 0.0) || !(atol > 0.0) || !(stol > 0.0))
        throw std::invalid_argument("match tolerances must be positive");
}

namespace {

std::map<std::string, std::size_t> composition(const CrystalGenotype& g)
{
    std::map<std::string, std::size_t> counts;
    for (const auto& s : g.species)
        ++counts[s];
    return counts;
}

/// Fewest atoms first, then the smallest label.
std::string rarest_species(const std::map<std::string, std::size_t>& counts)
{
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second < best->second)
            best = it;
    return best->first;
}

double minimum_image_distance(const Eigen::Matrix3d& cell, Eigen::Vector3d df)
{
    for (int k = 0; k < 3; ++k)
        df[k] -= std::round(df[k]);
    double best = std::numeric_limits<double>::infinity();
    // the rounded difference is not always the closest image in a skewed cell
    for (int i = -1; i <= 1; ++i)
        for (int j = -1; j <= 1; ++j)
            for (int k = -1; k <= 1; ++k)
                best = std::min(best, (cell * (df + Eigen::Vector3d(i, j, k))).norm());
    return best;
}

CrystalGenotype permute_axes(const CrystalGenotype& g, const std::array<std::size_t, 3>& perm)
{
    CrystalGenotype out = g;
    for (std::size_t k = 0; k < 3; ++k) {
        out.lengths[k] = g.lengths[perm[k]];
        out.angles[k] = g.angles[perm[k]];
    }
    for (std::size_t i = 0; i < g.size(); ++i)
        for (std::size_t k = 0; k < 3; ++k)
            out.frac[i][k] = g.frac[i][perm[k]];
    return out;
}

bool lengths_close(double x, double y, double ltol)
{
    return std::abs(x - y) <= ltol * 0.5 * (x + y);
}

bool lattice_gate(const CrystalGenotype& a, const CrystalGenotype& b, const MatchTolerances& tol)
{
    auto la = a.lengths, lb = b.lengths, aa = a.angles, ab = b.angles;
    std::sort(la.begin(), la.end());
    std::sort(lb.begin(), lb.end());
    std::sort(aa.begin(), aa.end());
    std::sort(ab.begin(), ab.end());
    for (std::size_t k = 0; k < 3; ++k)
        if (!lengths_close(la[k], lb[k], tol.ltol) || std::abs(aa[k] - ab[k]) > tol.atol)
            return false;
    return true;
}

bool axes_agree(const CrystalGenotype& a, const CrystalGenotype& b, const MatchTolerances& tol)
{
    for (std::size_t k = 0; k < 3; ++k)
        if (!lengths_close(a.lengths[k], b.lengths[k], tol.ltol) || std::abs(a.angles[k] - b.angles[k]) > tol.atol)
            return false;
    return true;
}

std::array<std::size_t, 3> inverse(const std::array<std::size_t, 3>& perm)
{
    std::array<std::size_t, 3> inv{};
    for (std::size_t k = 0; k < 3; ++k)
        inv[perm[k]] = k;
    return inv;
}

} // namespace

std::optional<double> site_mismatch(const CrystalGenotype& from, const CrystalGenotype& onto)
{
    if (from.size() != onto.size())
        return std::nullopt;
    const auto counts = composition(from);
    if (counts != composition(onto))
        return std::nullopt;
    const std::size_t n = from.size();
    if (n == 0)
        return 0.0;

    const Eigen::Matrix3d cell = cell_matrix(onto);
    const std::string anchor = rarest_species(counts);
    const std::size_t i0 = static_cast<std::size_t>(
        std::find(from.species.begin(), from.species.end(), anchor) - from.species.begin());

    struct Pair {
        double d;
        std::size_t i, j;
    };
    std::vector<Pair> pairs;
    std::vector<char> used_i(n), used_j(n);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j0 = 0; j0 < n; ++j0) {
        if (onto.species[j0] != anchor)
            continue;
        Eigen::Vector3d shift;
        for (int k = 0; k < 3; ++k)
            shift[k] = onto.frac[j0][static_cast<std::size_t>(k)] - from.frac[i0][static_cast<std::size_t>(k)];

        pairs.clear();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (from.species[i] != onto.species[j])
                    continue;
                Eigen::Vector3d df;
                for (int k = 0; k < 3; ++k)
                    df[k] = from.frac[i][static_cast<std::size_t>(k)] + shift[k] -
                            onto.frac[j][static_cast<std::size_t>(k)];
                pairs.push_back({minimum_image_distance(cell, df), i, j});
            }
        std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.d < y.d; });
        std::fill(used_i.begin(), used_i.end(), 0);
        std::fill(used_j.begin(), used_j.end(), 0);
        double worst = 0.0;
        std::size_t assigned = 0;
        for (const auto& pr : pairs) {
            if (used_i[pr.i] || used_j[pr.j])
                continue;
            used_i[pr.i] = used_j[pr.j] = 1;
            worst = std::max(worst, pr.d);
            if (++assigned == n || worst >= best)
                break;
        }
        best = std::min(best, worst);
    }
    return best;
}

bool structures_match(const CrystalGenotype& a, const CrystalGenotype& b, const MatchTolerances& tol)
{
    if (a.size() != b.size() || composition(a) != composition(b))
        return false;
    if (!lattice_gate(a, b, tol))
        return false;

    const double reach_b = tol.stol * mean_nearest_neighbor_distance(b);
    const double reach_a = tol.stol * mean_nearest_neighbor_distance(a);
    std::array<std::size_t, 3> perm{0, 1, 2};
    do {
        const CrystalGenotype pa = permute_axes(a, perm);
        if (!axes_agree(pa, b, tol))
            continue;
        const auto forward = site_mismatch(pa, b);
        if (!forward || *forward > reach_b)
            continue;
        const auto backward = site_mismatch(permute_axes(b, inverse(perm)), a);
        if (backward && *backward <= reach_a)
            return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

// ---------------------------------------------------------------------------
// Reference file

std::vector<ReferenceStructure> read_references(std::istream& in)
{
    std::vector<ReferenceStructure> refs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line[0] == '#' || line.rfind("name\t", 0) == 0)
            continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, '\t'))
            fields.push_back(field);
        if (fields.size() != 2 && fields.size() != 4)
            throw std::runtime_error("references line " + std::to_string(lineno) + ": expected 2 or 4 fields");
        try {
            ReferenceStructure r;
            r.name = fields[0];
            r.genotype = decode_genotype(fields[1]);
            if (fields.size() == 4)
                r.objectives = ObjectiveVector{parse_double(fields[2]), parse_double(fields[3])};
            refs.push_back(std::move(r));
        } catch (const std::exception& e) {
            throw std::runtime_error("references line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return refs;
}

void write_references(std::ostream& out, const std::vector<ReferenceStructure>& refs)
{
    out << "name\tgenotype\tobjective_0\tobjective_1\n";
    for (const auto& r : refs) {
        out << r.name << '\t' << encode_genotype(r.genotype);
        if (r.objectives)
            out << '\t' << format_double((*r.objectives)[0]) << '\t' << format_double((*r.objectives)[1]);
        out << '\n';
    }
}

double optimal_spacing(LatticeTemplate t, const DomainParams& p)
{
    const double sigma = p.species.front().sigma;
    auto energy = [&](double d) { return lj_energy(make_template(t, d, p), p); };
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = 0.8 * sigma, hi = 1.6 * sigma;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double e1 = energy(x1), e2 = energy(x2);
    while (hi - lo > 1e-9 * sigma) {
        if (e1 < e2) {
            hi = x2;
            x2 = x1;
            e2 = e1;
            x1 = hi - phi * (hi - lo);
            e1 = energy(x1);
        } else {
            lo = x1;
            x1 = x2;
            e1 = e2;
            x2 = lo + phi * (hi - lo);
            e2 = energy(x2);
        }
    }
    return 0.5 * (lo + hi);
}

std::vector<ReferenceStructure> build_reference_structures(const DomainParams& p)
{
    std::vector<ReferenceStructure> refs;
    for (auto t : {LatticeTemplate::Fcc, LatticeTemplate::Hcp}) {
        ReferenceStructure r;
        r.name = std::string(to_string(t));
        r.genotype = make_template(t, optimal_spacing(t, p), p);
        r.objectives = evaluate(r.genotype, p).objectives();
        refs.push_back(std::move(r));
    }
    return refs;
}

// ---------------------------------------------------------------------------
// Archive report

std::vector<ReferenceMatch> match_archive(const MomeArchive& archive, const std::vector<ReferenceStructure>& refs,
                                          const MatchTolerances& tol, const DomainParams& p)
{
    tol.validate();
    std::vector<ReferenceMatch> report;
    for (const auto& ref : refs) {
        const Evaluation ev = evaluate(ref.genotype, p);
        ReferenceMatch m;
        m.name = ref.name;
        m.cell = assign_cell(ev.features, archive.tessellation());
        m.objectives = ref.objectives ? *ref.objectives : ev.objectives();
        archive.cell(m.cell).for_each([&](const EvaluatedSolution& s) {
            if (structures_match(s.genotype, ref.genotype, tol))
                m.matches.push_back(s.provenance.id);
            m.outperforms_stability = m.outperforms_stability || s.objectives[0] > m.objectives[0];
            m.outperforms_magnetism = m.outperforms_magnetism || s.objectives[1] > m.objectives[1];
        });
        report.push_back(std::move(m));
    }
    return report;
}

void write_match_report(std::ostream& out, const std::vector<ReferenceMatch>& report)
{
    out << "reference\tcell\tobjective_0\tobjective_1\tmatch_count\tmatching_ids\toutperforms_stability"
           "\toutperforms_magnetism\n";
    for (const auto& m : report) {
        out << m.name << '\t' << m.cell << '\t' << format_double(m.objectives[0]) << '\t'
            << format_double(m.objectives[1]) << '\t' << m.matches.size() << '\t';
        for (std::size_t i = 0; i < m.matches.size(); ++i)
            out << (i ? "," : "") << m.matches[i];
        out << '\t' << (m.outperforms_stability ? "true" : "false") << '\t'
            << (m.outperforms_magnetism ? "true" : "false") << '\n';
    }
}

} // namespace moqd
