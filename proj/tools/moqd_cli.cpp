// Command-line front end: run, suite, compare, illuminate, match, references, config.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "moqd/config.hpp"
#include "moqd/crystal.hpp"
#include "moqd/engine.hpp"
#include "moqd/illumination.hpp"
#include "moqd/matcher.hpp"
#include "moqd/metrics.hpp"

namespace fs = std::filesystem;
using namespace moqd;

namespace {

RunConfig base_config(const std::string& path)
{
    return path.empty() ? RunConfig{} : load_config(path);
}

std::ofstream open_out(const fs::path& p)
{
    if (p.has_parent_path())
        fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write '" + p.string() + "'");
    return out;
}

Snapshot load_snapshot(const fs::path& p)
{
    std::ifstream in(p);
    if (!in)
        throw std::runtime_error("cannot open snapshot '" + p.string() + "'");
    return read_snapshot(in);
}

/// Domain parameters for a snapshot: an explicit config, else the run's own config.json.
DomainParams snapshot_domain(const std::string& config_path, const fs::path& snapshot)
{
    if (!config_path.empty())
        return load_config(config_path).domain;
    const auto sibling = snapshot.parent_path() / "config.json";
    if (fs::exists(sibling))
        return load_config(sibling.string()).domain;
    return DomainParams{};
}

void print_comparison(std::ostream& out, const std::vector<ComparisonEntry>& table)
{
    out << "metric\talgorithm\tn\tmedian\tq1\tq3\tp_value\tadjusted_p\treject\n";
    for (const auto& e : table) {
        out << e.metric << '\t' << e.algorithm << '\t' << e.summary.n << '\t' << format_double(e.summary.median) << '\t'
            << format_double(e.summary.q1) << '\t' << format_double(e.summary.q3) << '\t';
        if (e.tested)
            out << format_double(e.p_value) << '\t' << format_double(e.adjusted_p) << '\t'
                << (e.reject ? "true" : "false");
        else
            out << "\t\t";
        out << '\n';
    }
}

void write_traces(std::ostream& out, const std::vector<LoadedRun>& runs)
{
    // algorithm -> evaluations -> metric -> values across seeds
    std::map<std::string, std::map<std::size_t, std::vector<std::vector<double>>>> grouped;
    for (const auto& r : runs)
        for (const auto& row : r.metrics) {
            auto& cols = grouped[std::string(to_string(r.config.algorithm))][row.evaluations];
            cols.resize(metric_names().size());
            for (std::size_t m = 0; m < metric_names().size(); ++m)
                cols[m].push_back(metric_value(row, m));
        }
    out << "algorithm\tevaluations\tn";
    for (const auto& name : metric_names())
        out << '\t' << name << "_median\t" << name << "_q1\t" << name << "_q3";
    out << '\n';
    for (const auto& [algo, by_eval] : grouped)
        for (const auto& [evals, cols] : by_eval) {
            out << algo << '\t' << evals << '\t' << cols[0].size();
            for (const auto& values : cols) {
                const Summary s = summarize(values);
                out << '\t' << format_double(s.median) << '\t' << format_double(s.q1) << '\t' << format_double(s.q3);
            }
            out << '\n';
        }
}

std::vector<Algorithm> parse_algorithms(const std::vector<std::string>& names)
{
    if (names.empty())
        return all_algorithms();
    std::vector<Algorithm> out;
    for (const auto& n : names)
        out.push_back(parse_algorithm(n));
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multi-objective quality-diversity search over a toy crystal domain"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_path;
    bool force = false;

    // run
    auto* run_cmd = app.add_subcommand("run", "Run one configuration");
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> evaluations;
    std::string algorithm;
    run_cmd->add_option("-c,--config", config_path, "JSON config (defaults apply to missing keys)");
    run_cmd->add_option("-o,--out", out_path, "Output root; the run goes to <out>/<run_id>")->required();
    run_cmd->add_option("--seed", seed, "Override the seed");
    run_cmd->add_option("--evaluations", evaluations, "Override the evaluation budget");
    run_cmd->add_option("--algorithm", algorithm, "mome_x | me_stability | me_magnetism | me_sum");
    run_cmd->add_flag("--force", force, "Overwrite an existing run directory");

    // suite
    auto* suite_cmd = app.add_subcommand("suite", "Run seeds x algorithms");
    std::size_t seeds = 15;
    std::uint64_t first_seed = 0;
    std::size_t jobs = 1;
    std::vector<std::string> algorithms;
    suite_cmd->add_option("-c,--config", config_path, "Base JSON config");
    suite_cmd->add_option("-o,--out", out_path, "Output root")->required();
    suite_cmd->add_option("--seeds", seeds, "Number of seeds")->capture_default_str();
    suite_cmd->add_option("--first-seed", first_seed, "First seed")->capture_default_str();
    suite_cmd->add_option("--algorithms", algorithms, "Subset of algorithms")->delimiter(',');
    suite_cmd->add_option("--evaluations", evaluations, "Override the evaluation budget");
    suite_cmd->add_option("-j,--jobs", jobs, "Concurrent runs")->capture_default_str();
    suite_cmd->add_flag("--force", force, "Overwrite existing run directories");

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "Compare finished runs");
    std::string runs_dir;
    std::string reference = "mome_x";
    double alpha = 0.05;
    compare_cmd->add_option("runs", runs_dir, "Directory holding run directories")->required();
    compare_cmd->add_option("--reference", reference, "Algorithm tested against the others")->capture_default_str();
    compare_cmd->add_option("--alpha", alpha, "Family-wise significance level")->capture_default_str();
    compare_cmd->add_option("-o,--out", out_path, "Write comparison.tsv and traces.tsv here instead of stdout");

    // illuminate
    auto* illum_cmd = app.add_subcommand("illuminate", "Per-cell best magnetism under stability thresholds");
    std::string snapshot_path;
    std::vector<double> levels = default_illumination_levels();
    illum_cmd->add_option("snapshot", snapshot_path, "MOME archive snapshot")->required();
    illum_cmd->add_option("-o,--out", out_path, "Output directory")->required();
    illum_cmd->add_option("--levels", levels, "Interpolation levels in [0, 1]")->delimiter(',');

    // match
    auto* match_cmd = app.add_subcommand("match", "Match an archive against reference structures");
    std::string refs_path;
    MatchTolerances tol;
    match_cmd->add_option("snapshot", snapshot_path, "MOME archive snapshot")->required();
    match_cmd->add_option("-r,--references", refs_path, "Reference structure file")->required();
    match_cmd->add_option("-c,--config", config_path, "Config supplying domain parameters");
    match_cmd->add_option("--ltol", tol.ltol)->capture_default_str();
    match_cmd->add_option("--atol", tol.atol)->capture_default_str();
    match_cmd->add_option("--stol", tol.stol)->capture_default_str();
    match_cmd->add_option("-o,--out", out_path, "Report file (stdout if omitted)");

    // references
    auto* refs_cmd = app.add_subcommand("references", "Write FCC/HCP ground-state references");
    refs_cmd->add_option("-c,--config", config_path, "Config supplying domain parameters");
    refs_cmd->add_option("-o,--out", out_path, "Reference file (stdout if omitted)");

    // config
    auto* config_cmd = app.add_subcommand("config", "Print the effective configuration as JSON");
    config_cmd->add_option("-c,--config", config_path, "Config to merge over the defaults");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            RunConfig c = base_config(config_path);
            if (seed)
                c.seed = *seed;
            if (evaluations)
                c.total_evaluations = *evaluations;
            if (!algorithm.empty())
                c.algorithm = parse_algorithm(algorithm);
            c.validate();
            const auto results = run_suite({c}, out_path, SuiteOptions{force, 1, &std::cerr});
            if (!results[0].ok)
                return 1;
            const MetricsRow& m = *results[0].final_metrics;
            std::cout << results[0].run_id << "\tevaluations=" << m.evaluations
                      << "\tmoqd_score=" << format_double(m.moqd_score) << "\tcoverage=" << format_double(m.coverage)
                      << "\tglobal_hypervolume=" << format_double(m.global_hypervolume) << '\n';
        } else if (*suite_cmd) {
            RunConfig base = base_config(config_path);
            if (evaluations)
                base.total_evaluations = *evaluations;
            const auto algos = parse_algorithms(algorithms);
            const auto configs = suite_configs(base, algos, first_seed, seeds);
            for (const auto& c : configs)
                c.validate();
            const auto results = run_suite(configs, out_path, SuiteOptions{force, jobs, &std::cerr});
            std::size_t failed = 0;
            for (const auto& r : results)
                failed += r.ok ? 0 : 1;
            std::cout << results.size() - failed << " of " << results.size() << " runs succeeded\n";
            return failed ? 1 : 0;
        } else if (*compare_cmd) {
            const auto runs = load_run_directory(runs_dir);
            const auto table = compare_runs(final_results(runs), reference, alpha);
            if (out_path.empty()) {
                print_comparison(std::cout, table);
            } else {
                auto cmp = open_out(fs::path(out_path) / "comparison.tsv");
                print_comparison(cmp, table);
                auto tr = open_out(fs::path(out_path) / "traces.tsv");
                write_traces(tr, runs);
            }
        } else if (*illum_cmd) {
            const Snapshot snap = load_snapshot(snapshot_path);
            const MomeArchive archive = restore_archive(snap);
            const IlluminationTable table = illuminate(archive, levels);
            for (std::size_t l = 0; l < levels.size(); ++l) {
                std::ostringstream name;
                name << "illumination_" << format_double(levels[l]) << ".tsv";
                auto out = open_out(fs::path(out_path) / name.str());
                write_illumination_level(out, table, l, archive.tessellation());
                std::cout << name.str() << "\tthreshold=" << format_double(table.thresholds[l])
                          << "\tpopulated=" << table.populated(l) << '\n';
            }
        } else if (*match_cmd) {
            const Snapshot snap = load_snapshot(snapshot_path);
            const MomeArchive archive = restore_archive(snap);
            std::ifstream rin(refs_path);
            if (!rin)
                throw std::runtime_error("cannot open references '" + refs_path + "'");
            const auto refs = read_references(rin);
            const auto report = match_archive(archive, refs, tol, snapshot_domain(config_path, snapshot_path));
            if (out_path.empty()) {
                write_match_report(std::cout, report);
            } else {
                auto out = open_out(out_path);
                write_match_report(out, report);
            }
        } else if (*refs_cmd) {
            const DomainParams domain = base_config(config_path).domain;
            const auto refs = build_reference_structures(domain);
            if (out_path.empty()) {
                write_references(std::cout, refs);
            } else {
                auto out = open_out(out_path);
                write_references(out, refs);
            }
        } else if (*config_cmd) {
            std::cout << nlohmann::json(base_config(config_path)).dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
