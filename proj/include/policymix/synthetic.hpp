#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <nlohmann/json_fwd.hpp>
#include <string>
#include <vector>

#include "policymix/lattice.hpp"
#include "policymix/matching.hpp"
#include "policymix/record.hpp"

namespace policymix::synthetic {

using lattice::TreatmentCell;

struct CovariateSpec {
    enum class Kind { Normal, LogNormal, Bernoulli };
    Kind kind = Kind::Normal;
    double mean = 0.0;
    double sd = 1.0;
    double log_mean = 0.0;
    double log_sd = 1.0;
    double p = 0.5;
    double min = -1e300;
    double max = 1e300;
    bool integer = false;
};

// A population with a known assignment mechanism and known true effects.
// Assignment and outcome coefficients are keyed by design-matrix column
// name and act on sample-standardized covariates (region dummies raw);
// unset names mean zero. Effects are additive on the probability scale and
// every probability is clamped to [0.01, 0.99].
struct ScenarioConfig {
    long n = 0;
    std::uint64_t seed = 0;
    std::map<std::string, CovariateSpec> covariates;
    std::array<double, kNumRegions> region_shares{};
    std::array<std::map<std::string, double>, lattice::kNumCells> assignment;
    std::map<std::string, double> outcome_baseline;
    std::array<double, lattice::kNumCells> effects{};

    void validate() const;
};

ScenarioConfig scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const ScenarioConfig& config);
ScenarioConfig load_scenario(const std::string& path);

// Packaged scenarios: "default" (paper-shaped covariates, mixed policies),
// "strong_selection" (one dominant confounder), "zero_effect" (null for
// calibration), "demo" (small, with an intentionally empty all_three cell).
ScenarioConfig builtin_scenario(const std::string& name);
const std::vector<std::string>& builtin_scenario_names();

// Accepts "builtin:<name>", a JSON file path, or a bare builtin name (when
// no file of that name exists).
ScenarioConfig resolve_scenario(const std::string& ref);

struct GenerateResult {
    std::vector<HouseholdRecord> records;
    std::map<int, double> truth;  // contrast id -> true ATT among its treated
    std::array<double, lattice::kNumCells> expected_cell_counts{};
    std::array<long, lattice::kNumCells> realized_cell_counts{};
    std::vector<std::string> warnings;
};

GenerateResult generate(const ScenarioConfig& config);

// Naive re-derivation of the matching estimator for small fixtures, written
// independently of the matching module (its own support rule, kernels, tie
// handling, and averaging).
double brute_force_att(const std::vector<double>& treated_scores,
                       const std::vector<double>& treated_outcomes,
                       const std::vector<double>& control_scores,
                       const std::vector<double>& control_outcomes,
                       const matching::MatchSpec& spec);

}  // namespace policymix::synthetic
