#pragma once

/// @file config.hpp
/// Run configuration and its JSON form. Every key is optional and defaults to
/// the values below; unknown keys are rejected so typos do not pass silently.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "moqd/domain.hpp"
#include "moqd/metrics.hpp"

namespace moqd {

enum class Algorithm : std::uint8_t { MomeX, MeStability, MeMagnetism, MeSum };

[[nodiscard]] std::string_view to_string(Algorithm a);
/// Accepts "mome_x", "me_stability", "me_magnetism", "me_sum".
[[nodiscard]] Algorithm parse_algorithm(std::string_view text);
[[nodiscard]] const std::vector<Algorithm>& all_algorithms();

[[nodiscard]] std::string_view to_string(QdScoreVariant v);
[[nodiscard]] QdScoreVariant parse_qd_variant(std::string_view text);

struct RunConfig {
    Algorithm algorithm = Algorithm::MomeX;
    std::uint64_t seed = 0;

    std::size_t total_evaluations = 5000;
    std::size_t batch_size = 100;
    /// Charge relaxation energy calls to the budget as well.
    bool charge_relaxation = false;

    /// MOME cells c and front length p; MAP-Elites baselines use c * p cells.
    std::size_t cells = 200;
    std::size_t front_size = 10;
    std::size_t cvt_samples = 50000;
    std::uint64_t cvt_seed = 2024;

    double strain_sigma = 0.1;
    /// Chance of a permutation (instead of a strain) for multi-species systems.
    double permutation_probability = 0.5;

    std::size_t relaxation_steps = 100;
    double force_threshold = 1.0;

    std::vector<double> reference_point{0.0, 0.0};
    QdScoreVariant qd_variant = QdScoreVariant::AllSolutions;

    /// Worker threads for offspring relaxation and evaluation within a run.
    std::size_t evaluation_threads = 1;

    DomainParams domain;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;

    /// `<algorithm>_seed<seed>`, used as the run directory name.
    [[nodiscard]] std::string run_id() const;
    [[nodiscard]] ObjectiveVector reference() const { return ObjectiveVector{reference_point}; }
};

void to_json(nlohmann::json& j, const RunConfig& c);
/// Throws std::invalid_argument on unknown keys or wrongly typed values.
void from_json(const nlohmann::json& j, RunConfig& c);

void to_json(nlohmann::json& j, const DomainParams& p);
void from_json(const nlohmann::json& j, DomainParams& p);

[[nodiscard]] RunConfig load_config(const std::string& path);

} // namespace moqd
