#include "moqd/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

namespace moqd {

using nlohmann::json;

std::string_view to_string(Algorithm a)
{
    switch (a) {
    case Algorithm::MomeX:
        return "mome_x";
    case Algorithm::MeStability:
        return "me_stability";
    case Algorithm::MeMagnetism:
        return "me_magnetism";
    case Algorithm::MeSum:
        return "me_sum";
    }
    return "?";
}

Algorithm parse_algorithm(std::string_view text)
{
    for (auto a : all_algorithms())
        if (to_string(a) == text)
            return a;
    throw std::invalid_argument("unknown algorithm '" + std::string(text) + "'");
}

const std::vector<Algorithm>& all_algorithms()
{
    static const std::vector<Algorithm> all{Algorithm::MomeX, Algorithm::MeStability, Algorithm::MeMagnetism,
                                            Algorithm::MeSum};
    return all;
}

std::string_view to_string(QdScoreVariant v)
{
    return v == QdScoreVariant::AllSolutions ? "all_solutions" : "best_per_cell";
}

QdScoreVariant parse_qd_variant(std::string_view text)
{
    if (text == "all_solutions")
        return QdScoreVariant::AllSolutions;
    if (text == "best_per_cell")
        return QdScoreVariant::BestPerCell;
    throw std::invalid_argument("unknown qd score variant '" + std::string(text) + "'");
}

void RunConfig::validate() const
{
    if (batch_size < 1 || total_evaluations < batch_size)
        throw std::invalid_argument("config: need total_evaluations >= batch_size >= 1");
    if (cells < 1 || front_size < 1)
        throw std::invalid_argument("config: cells and front_size must be at least 1");
    if (cvt_samples < 10 * cells * front_size && algorithm != Algorithm::MomeX)
        throw std::invalid_argument("config: cvt_samples must be at least 10 x the baseline cell count");
    if (cvt_samples < 10 * cells)
        throw std::invalid_argument("config: cvt_samples must be at least 10 x cells");
    if (!(strain_sigma >= 0.0))
        throw std::invalid_argument("config: strain_sigma must be non-negative");
    if (!(permutation_probability >= 0.0 && permutation_probability <= 1.0))
        throw std::invalid_argument("config: permutation_probability must lie in [0, 1]");
    if (!(force_threshold >= 0.0))
        throw std::invalid_argument("config: force_threshold must be non-negative");
    if (reference_point.size() != 2)
        throw std::invalid_argument("config: reference_point must have two entries");
    (void)reference();
    if (evaluation_threads < 1)
        throw std::invalid_argument("config: evaluation_threads must be at least 1");
    domain.validate();
}

std::string RunConfig::run_id() const
{
    return std::string(to_string(algorithm)) + "_seed" + std::to_string(seed);
}

namespace {

/// Reads known keys of one object and rejects the rest.
class Reader {
public:
    Reader(const json& j, std::string section) : j_(j), section_(std::move(section))
    {
        if (!j_.is_object())
            throw std::invalid_argument("config: '" + section_ + "' must be an object");
    }

    template <typename T>
    void get(const char* key, T& out)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        if (it == j_.end())
            return;
        try {
            out = it->template get<T>();
        } catch (const json::exception& e) {
            throw std::invalid_argument("config: bad value for '" + section_ + "." + key + "': " + e.what());
        }
    }

    const json* child(const char* key)
    {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (const auto& [key, value] : j_.items())
            if (!seen_.count(key))
                throw std::invalid_argument("config: unknown key '" + section_ + "." + key + "'");
    }

private:
    const json& j_;
    std::string section_;
    std::set<std::string> seen_;
};

} // namespace

void to_json(json& j, const DomainParams& p)
{
    json species = json::array();
    for (const auto& s : p.species)
        species.push_back(
            {{"label", s.label}, {"sigma", s.sigma}, {"epsilon", s.epsilon}, {"moment", s.moment}, {"count", s.count}});
    j = json{{"species", species},
             {"cutoff", p.cutoff},
             {"minimum_image", p.minimum_image},
             {"coordination_cutoff", p.coordination_cutoff},
             {"coordination_width", p.coordination_width},
             {"feature_bounds", {{"lo", p.feature_bounds.lo}, {"hi", p.feature_bounds.hi}}},
             {"initial_volume_per_atom", p.initial_volume_per_atom},
             {"initial_volume_spread", p.initial_volume_spread},
             {"initial_jitter", p.initial_jitter},
             {"min_volume_per_atom", p.min_volume_per_atom},
             {"min_distance_ratio", p.min_distance_ratio},
             {"overlap_distance", p.overlap_distance},
             {"min_angle", p.min_angle},
             {"max_angle", p.max_angle}};
}

void from_json(const json& j, DomainParams& p)
{
    Reader r(j, "domain");
    if (const json* species = r.child("species")) {
        if (!species->is_array())
            throw std::invalid_argument("config: 'domain.species' must be an array");
        p.species.clear();
        for (const auto& item : *species) {
            SpeciesParams s;
            Reader sr(item, "domain.species[]");
            sr.get("label", s.label);
            sr.get("sigma", s.sigma);
            sr.get("epsilon", s.epsilon);
            sr.get("moment", s.moment);
            sr.get("count", s.count);
            sr.finish();
            p.species.push_back(std::move(s));
        }
    }
    r.get("cutoff", p.cutoff);
    r.get("minimum_image", p.minimum_image);
    r.get("coordination_cutoff", p.coordination_cutoff);
    r.get("coordination_width", p.coordination_width);
    if (const json* fb = r.child("feature_bounds")) {
        Reader br(*fb, "domain.feature_bounds");
        br.get("lo", p.feature_bounds.lo);
        br.get("hi", p.feature_bounds.hi);
        br.finish();
    }
    r.get("initial_volume_per_atom", p.initial_volume_per_atom);
    r.get("initial_volume_spread", p.initial_volume_spread);
    r.get("initial_jitter", p.initial_jitter);
    r.get("min_volume_per_atom", p.min_volume_per_atom);
    r.get("min_distance_ratio", p.min_distance_ratio);
    r.get("overlap_distance", p.overlap_distance);
    r.get("min_angle", p.min_angle);
    r.get("max_angle", p.max_angle);
    r.finish();
}

void to_json(json& j, const RunConfig& c)
{
    j = json{{"algorithm", std::string(to_string(c.algorithm))},
             {"seed", c.seed},
             {"budget",
              {{"total_evaluations", c.total_evaluations},
               {"batch_size", c.batch_size},
               {"charge_relaxation", c.charge_relaxation}}},
             {"archive",
              {{"cells", c.cells}, {"front_size", c.front_size}, {"cvt_samples", c.cvt_samples},
               {"cvt_seed", c.cvt_seed}}},
             {"variation", {{"strain_sigma", c.strain_sigma}, {"permutation_probability", c.permutation_probability}}},
             {"relaxation", {{"max_steps", c.relaxation_steps}, {"force_threshold", c.force_threshold}}},
             {"metrics",
              {{"reference_point", c.reference_point}, {"qd_score_variant", std::string(to_string(c.qd_variant))}}},
             {"evaluation_threads", c.evaluation_threads},
             {"domain", c.domain}};
}

void from_json(const json& j, RunConfig& c)
{
    Reader r(j, "config");
    std::string algorithm(to_string(c.algorithm));
    r.get("algorithm", algorithm);
    c.algorithm = parse_algorithm(algorithm);
    r.get("seed", c.seed);
    if (const json* b = r.child("budget")) {
        Reader br(*b, "budget");
        br.get("total_evaluations", c.total_evaluations);
        br.get("batch_size", c.batch_size);
        br.get("charge_relaxation", c.charge_relaxation);
        br.finish();
    }
    if (const json* a = r.child("archive")) {
        Reader ar(*a, "archive");
        ar.get("cells", c.cells);
        ar.get("front_size", c.front_size);
        ar.get("cvt_samples", c.cvt_samples);
        ar.get("cvt_seed", c.cvt_seed);
        ar.finish();
    }
    if (const json* v = r.child("variation")) {
        Reader vr(*v, "variation");
        vr.get("strain_sigma", c.strain_sigma);
        vr.get("permutation_probability", c.permutation_probability);
        vr.finish();
    }
    if (const json* x = r.child("relaxation")) {
        Reader xr(*x, "relaxation");
        xr.get("max_steps", c.relaxation_steps);
        xr.get("force_threshold", c.force_threshold);
        xr.finish();
    }
    if (const json* m = r.child("metrics")) {
        Reader mr(*m, "metrics");
        mr.get("reference_point", c.reference_point);
        std::string variant(to_string(c.qd_variant));
        mr.get("qd_score_variant", variant);
        c.qd_variant = parse_qd_variant(variant);
        mr.finish();
    }
    r.get("evaluation_threads", c.evaluation_threads);
    if (const json* d = r.child("domain"))
        from_json(*d, c.domain);
    r.finish();
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot open config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::invalid_argument("config '" + path + "': " + e.what());
    }
    RunConfig c = j.get<RunConfig>();
    c.validate();
    return c;
}

} // namespace moqd
