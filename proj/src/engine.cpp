#include "moqd/engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "moqd/crystal.hpp"
#include "moqd/domain.hpp"

namespace moqd {

// ---------------------------------------------------------------------------
// Selection

std::vector<double> selection_weights(std::span<const double> crowding)
{
    double largest = 0.0;
    for (double d : crowding)
        if (std::isfinite(d))
            largest = std::max(largest, d);
    std::vector<double> w(crowding.size(), 1.0);
    if (!(largest > 0.0))
        return w;
    for (std::size_t i = 0; i < crowding.size(); ++i)
        w[i] = std::isfinite(crowding[i]) ? crowding[i] : 2.0 * largest;
    return w;
}

namespace {

std::size_t weighted_index(std::span<const double> w, Rng& rng)
{
    double total = 0.0;
    for (double x : w)
        total += x;
    if (!(total > 0.0))
        return static_cast<std::size_t>(rng.index(w.size()));
    const double u = rng.uniform() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        acc += w[i];
        if (u < acc)
            return i;
    }
    // rounding can leave u at the very top; take the last positive weight
    for (std::size_t i = w.size(); i-- > 0;)
        if (w[i] > 0.0)
            return i;
    return w.size() - 1;
}

} // namespace

std::vector<const EvaluatedSolution*> select_batch(const MomeArchive& archive, std::size_t n, Rng& rng)
{
    const auto cells = archive.occupied_cells();
    if (cells.empty())
        throw std::invalid_argument("select_batch: archive is empty");
    // weights depend only on the front, so compute each once per batch
    std::map<std::size_t, std::vector<double>> weights;
    std::vector<const EvaluatedSolution*> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t c = cells[static_cast<std::size_t>(rng.index(cells.size()))];
        const auto& front = archive.cell(c);
        auto it = weights.find(c);
        if (it == weights.end())
            it = weights.emplace(c, selection_weights(crowding_distances(front.objectives()))).first;
        out.push_back(&front[weighted_index(it->second, rng)]);
    }
    return out;
}

std::vector<const EvaluatedSolution*> select_batch(const MapElitesArchive& archive, std::size_t n, Rng& rng)
{
    const auto cells = archive.occupied_cells();
    if (cells.empty())
        throw std::invalid_argument("select_batch: archive is empty");
    std::vector<const EvaluatedSolution*> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k)
        out.push_back(&*archive.cell(cells[static_cast<std::size_t>(rng.index(cells.size()))]));
    return out;
}

// ---------------------------------------------------------------------------
// Run loop

namespace {

ScalarRule rule_for(Algorithm a)
{
    switch (a) {
    case Algorithm::MeStability:
        return ScalarRule::Stability;
    case Algorithm::MeMagnetism:
        return ScalarRule::Magnetism;
    case Algorithm::MeSum:
        return ScalarRule::Sum;
    case Algorithm::MomeX:
        break;
    }
    throw std::logic_error("rule_for: not a MAP-Elites algorithm");
}

struct Candidate {
    CrystalGenotype genotype;
    Provenance provenance;
};

struct Developed {
    std::optional<EvaluatedSolution> solution;
    std::size_t cost = 1;
};

Developed develop(const Candidate& c, const RunConfig& config)
{
    Developed d;
    try {
        RelaxResult r = relax(c.genotype, config.relaxation_steps, config.domain);
        const Evaluation ev = evaluate(r.genotype, config.domain);
        if (config.charge_relaxation)
            d.cost += r.energy_calls;
        d.solution = EvaluatedSolution{std::move(r.genotype), ev.objectives(), ev.features, ev.force_norm, c.provenance};
    } catch (const OverlapError&) {
        // collapsed geometry: charged, never stored
    }
    return d;
}

std::vector<Developed> develop_all(const std::vector<Candidate>& batch, const RunConfig& config)
{
    std::vector<Developed> out(batch.size());
    const std::size_t threads = std::min(config.evaluation_threads, batch.size());
    if (threads <= 1) {
        for (std::size_t i = 0; i < batch.size(); ++i)
            out[i] = develop(batch[i], config);
        return out;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t)
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < batch.size(); i += threads)
                    out[i] = develop(batch[i], config);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    for (auto& th : pool)
        th.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    return out;
}

} // namespace

RunRecord run(const RunConfig& config, const Observer& observer)
{
    config.validate();
    const DomainParams& domain = config.domain;
    const ObjectiveVector ref = config.reference();
    const bool mome = config.algorithm == Algorithm::MomeX;
    const bool multi_species = domain.species.size() > 1;

    RunRecord record;
    record.config = config;
    record.archive.emplace(shared_cvt(config.cells, domain.feature_bounds, config.cvt_samples, config.cvt_seed),
                           config.front_size);
    if (!mome)
        record.me_archive.emplace(
            shared_cvt(config.cells * config.front_size, domain.feature_bounds, config.cvt_samples, config.cvt_seed),
            rule_for(config.algorithm));
    MomeArchive& archive = *record.archive;

    Rng rng(config.seed);
    std::uint64_t next_id = 0;
    std::vector<EvaluatedSolution> accepted;

    auto absorb = [&](std::vector<Developed> developed) {
        accepted.clear();
        for (auto& d : developed) {
            if (record.evaluations >= config.total_evaluations)
                break;
            record.evaluations += d.cost;
            if (!d.solution)
                continue;
            if (!filter_solution(*d.solution, config.force_threshold, ref)) {
                ++record.filtered;
                continue;
            }
            accepted.push_back(*d.solution);
            if (mome)
                (void)archive.insert(std::move(*d.solution));
            else
                (void)record.me_archive->insert(std::move(*d.solution));
        }
        if (!mome)
            (void)passive_sync(archive, *record.me_archive);
        record.metrics.push_back(compute_metrics(archive, ref, record.evaluations, config.qd_variant));
        if (observer)
            observer(IterationView{record.iterations, record.evaluations, &archive,
                                   record.me_archive ? &*record.me_archive : nullptr, accepted,
                                   &record.metrics.back()});
    };

    // Iteration 0: initial population.
    {
        Rng init_rng(rng.split());
        const std::size_t n = std::min(config.batch_size, config.total_evaluations);
        std::vector<Candidate> batch;
        for (auto& g : initialize_population(n, domain, init_rng))
            batch.push_back({std::move(g), Provenance{next_id++, 0, -1, VariationOperator::Initialization}});
        absorb(develop_all(batch, config));
    }

    while (record.evaluations < config.total_evaluations) {
        ++record.iterations;
        const std::size_t n = std::min(config.batch_size, config.total_evaluations - record.evaluations);
        const bool have_parents = mome ? !archive.empty() : record.me_archive->size() > 0;
        std::vector<Candidate> batch;
        batch.reserve(n);
        if (!have_parents) {
            // everything so far was filtered out; reseed rather than stall
            for (auto& g : initialize_population(n, domain, rng))
                batch.push_back(
                    {std::move(g), Provenance{next_id++, record.iterations, -1, VariationOperator::Initialization}});
        } else {
            const auto parents = mome ? select_batch(archive, n, rng) : select_batch(*record.me_archive, n, rng);
            for (const EvaluatedSolution* parent : parents) {
                const bool permute = multi_species && rng.bernoulli(config.permutation_probability);
                Candidate c;
                c.provenance = Provenance{next_id++, record.iterations, static_cast<std::int64_t>(parent->provenance.id),
                                          permute ? VariationOperator::Permutation : VariationOperator::Strain};
                c.genotype = permute ? permutation_mutation(parent->genotype, rng)
                                     : strain_mutation(parent->genotype, config.strain_sigma, domain, rng);
                batch.push_back(std::move(c));
            }
        }
        absorb(develop_all(batch, config));
    }
    return record;
}

// ---------------------------------------------------------------------------
// Files

void write_metrics(std::ostream& out, std::span<const MetricsRow> rows)
{
    out << "evaluations";
    for (const auto& name : metric_names())
        out << '\t' << name;
    out << '\n';
    for (const auto& r : rows) {
        out << r.evaluations;
        for (std::size_t i = 0; i < metric_names().size(); ++i)
            out << '\t' << format_double(metric_value(r, i));
        out << '\n';
    }
}

std::vector<MetricsRow> read_metrics(std::istream& in)
{
    std::vector<MetricsRow> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line.rfind("evaluations", 0) == 0)
            continue;
        std::vector<std::string> f;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, '\t'))
            f.push_back(tok);
        if (f.size() != 1 + metric_names().size())
            throw std::runtime_error("metrics line " + std::to_string(lineno) + ": wrong column count");
        try {
            MetricsRow r;
            r.evaluations = static_cast<std::size_t>(std::stoull(f[0]));
            r.moqd_score = parse_double(f[1]);
            r.energy_qd_score = parse_double(f[2]);
            r.magnetism_qd_score = parse_double(f[3]);
            r.coverage = parse_double(f[4]);
            r.global_hypervolume = parse_double(f[5]);
            rows.push_back(r);
        } catch (const std::exception& e) {
            throw std::runtime_error("metrics line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p)
{
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
}

} // namespace

void write_run(const std::filesystem::path& dir, const RunRecord& record)
{
    std::filesystem::create_directories(dir);
    {
        auto out = open_out(dir / "config.json");
        out << nlohmann::json(record.config).dump(2) << '\n';
    }
    {
        auto out = open_out(dir / "metrics.tsv");
        write_metrics(out, record.metrics);
    }
    if (record.archive) {
        auto out = open_out(dir / "archive.tsv");
        write_snapshot(out, *record.archive, record.run_id(), record.iterations);
    }
    if (record.me_archive) {
        auto out = open_out(dir / "me_archive.tsv");
        write_snapshot(out, *record.me_archive, record.run_id(), record.iterations);
    }
}

std::vector<RunConfig> suite_configs(const RunConfig& base, std::span<const Algorithm> algorithms,
                                     std::uint64_t first_seed, std::size_t count)
{
    std::vector<RunConfig> out;
    for (auto a : algorithms)
        for (std::size_t k = 0; k < count; ++k) {
            RunConfig c = base;
            c.algorithm = a;
            c.seed = first_seed + k;
            out.push_back(std::move(c));
        }
    return out;
}

std::vector<SuiteResult> run_suite(const std::vector<RunConfig>& configs, const std::filesystem::path& out_dir,
                                   const SuiteOptions& options)
{
    if (configs.empty())
        throw std::invalid_argument("run_suite: no configurations");
    for (const auto& c : configs) {
        const auto dir = out_dir / c.run_id();
        if (!options.force && std::filesystem::exists(dir))
            throw std::runtime_error("run directory '" + dir.string() + "' exists; pass --force to overwrite");
    }
    std::filesystem::create_directories(out_dir);

    std::vector<SuiteResult> results(configs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) {
            const auto& c = configs[i];
            SuiteResult& r = results[i];
            r.run_id = c.run_id();
            const auto start = std::chrono::steady_clock::now();
            try {
                const auto dir = out_dir / r.run_id;
                if (std::filesystem::exists(dir))
                    std::filesystem::remove_all(dir);
                const RunRecord record = run(c);
                write_run(dir, record);
                r.final_metrics = record.metrics.back();
                r.ok = true;
            } catch (const std::exception& e) {
                r.error = e.what();
            }
            r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            if (options.log) {
                std::lock_guard lock(log_mutex);
                *options.log << "[" << (i + 1) << "/" << configs.size() << "] " << r.run_id << " "
                             << (r.ok ? "ok" : "FAILED: " + r.error) << " (" << r.seconds << " s)" << std::endl;
            }
        }
    };
    const std::size_t jobs = std::max<std::size_t>(1, std::min(options.jobs, configs.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 1; t < jobs; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& th : pool)
        th.join();
    return results;
}

std::vector<LoadedRun> load_run_directory(const std::filesystem::path& root)
{
    if (!std::filesystem::is_directory(root))
        throw std::runtime_error("'" + root.string() + "' is not a directory");
    std::vector<LoadedRun> runs;
    for (const auto& entry : std::filesystem::directory_iterator(root)) {
        const auto dir = entry.path();
        if (!entry.is_directory() || !std::filesystem::exists(dir / "config.json") ||
            !std::filesystem::exists(dir / "metrics.tsv"))
            continue;
        LoadedRun r;
        r.dir = dir;
        std::ifstream cfg(dir / "config.json");
        r.config = nlohmann::json::parse(cfg).get<RunConfig>();
        std::ifstream met(dir / "metrics.tsv");
        r.metrics = read_metrics(met);
        runs.push_back(std::move(r));
    }
    std::sort(runs.begin(), runs.end(),
              [](const LoadedRun& a, const LoadedRun& b) { return a.config.run_id() < b.config.run_id(); });
    return runs;
}

std::map<std::string, SeedResults> final_results(const std::vector<LoadedRun>& runs)
{
    std::map<std::string, SeedResults> out;
    for (const auto& r : runs) {
        if (r.metrics.empty())
            continue;
        auto& seeds = out[std::string(to_string(r.config.algorithm))];
        if (!seeds.emplace(r.config.seed, r.metrics.back()).second)
            throw std::runtime_error("duplicate run for " + r.config.run_id());
    }
    return out;
}

} // namespace moqd
