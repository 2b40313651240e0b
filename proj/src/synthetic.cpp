#include "policymix/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "policymix/error.hpp"
#include "policymix/propensity.hpp"
#include "policymix/rng.hpp"

namespace policymix::synthetic {

namespace {

// the 11 numeric/binary covariates, in design-column order
const std::vector<std::string>& covariate_names() {
    static const std::vector<std::string> names(propensity::design_column_names().begin() + 1,
                                                propensity::design_column_names().begin() + 12);
    return names;
}

const std::array<const char*, kNumRegions> kRegionKeys = {"north", "northeast", "central_west",
                                                          "southeast", "south"};

double clamp_probability(double p) { return std::clamp(p, 0.01, 0.99); }

double sigmoid(double eta) {
    if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

double draw_normal(std::mt19937_64& rng) {
    while (true) {
        const double u = 2.0 * uniform01(rng) - 1.0;
        const double v = 2.0 * uniform01(rng) - 1.0;
        const double s = u * u + v * v;
        if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
    }
}

double draw_covariate(const CovariateSpec& spec, std::mt19937_64& rng) {
    double value = 0.0;
    switch (spec.kind) {
        case CovariateSpec::Kind::Normal:
            value = spec.mean + spec.sd * draw_normal(rng);
            break;
        case CovariateSpec::Kind::LogNormal:
            value = std::exp(spec.log_mean + spec.log_sd * draw_normal(rng));
            break;
        case CovariateSpec::Kind::Bernoulli:
            value = uniform01(rng) < spec.p ? 1.0 : 0.0;
            break;
    }
    value = std::clamp(value, spec.min, spec.max);
    if (spec.integer) value = double(std::llround(value));
    return std::clamp(value, spec.min, spec.max);
}

}  // namespace

void ScenarioConfig::validate() const {
    if (n < 1) throw ConfigError("scenario population size must be at least 1");
    for (const auto& name : covariate_names()) {
        if (!covariates.count(name)) {
            throw ConfigError("scenario is missing covariate '" + name + "'");
        }
    }
    for (const auto& [name, spec] : covariates) {
        if (std::find(covariate_names().begin(), covariate_names().end(), name) ==
            covariate_names().end()) {
            throw ConfigError("unknown scenario covariate '" + name + "'");
        }
        if (spec.sd < 0 || spec.log_sd < 0) {
            throw ConfigError("covariate '" + name + "' has a negative spread");
        }
        if (spec.p < 0 || spec.p > 1) {
            throw ConfigError("covariate '" + name + "' has probability outside [0, 1]");
        }
        if (spec.min > spec.max) {
            throw ConfigError("covariate '" + name + "' has min above max");
        }
    }
    double share_sum = 0.0;
    for (double s : region_shares) {
        if (s < 0) throw ConfigError("region shares must be non-negative");
        share_sum += s;
    }
    if (std::abs(share_sum - 1.0) > 1e-6) {
        throw ConfigError("region shares must sum to 1");
    }
    const auto& feature_names = propensity::design_column_names();
    auto check_coefficients = [&](const std::map<std::string, double>& coef,
                                  const std::string& where) {
        for (const auto& [name, value] : coef) {
            (void)value;
            if (std::find(feature_names.begin(), feature_names.end(), name) ==
                feature_names.end()) {
                throw ConfigError("unknown coefficient '" + name + "' in " + where);
            }
        }
    };
    for (int c = 0; c < lattice::kNumCells; ++c) {
        check_coefficients(assignment[size_t(c)],
                           std::string("assignment for ") +
                               lattice::to_string(TreatmentCell(c)));
    }
    check_coefficients(outcome_baseline, "the outcome baseline");
}

namespace {

CovariateSpec covariate_from_json(const std::string& name, const nlohmann::json& j) {
    CovariateSpec spec;
    if (!j.is_object() || !j.count("kind")) {
        throw ConfigError("covariate '" + name + "' needs a 'kind'");
    }
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "normal") {
        spec.kind = CovariateSpec::Kind::Normal;
    } else if (kind == "lognormal") {
        spec.kind = CovariateSpec::Kind::LogNormal;
    } else if (kind == "bernoulli") {
        spec.kind = CovariateSpec::Kind::Bernoulli;
    } else {
        throw ConfigError("covariate '" + name + "' has unknown kind '" + kind + "'");
    }
    for (const auto& [key, value] : j.items()) {
        if (key == "kind") continue;
        if (key == "mean") spec.mean = value.get<double>();
        else if (key == "sd") spec.sd = value.get<double>();
        else if (key == "log_mean") spec.log_mean = value.get<double>();
        else if (key == "log_sd") spec.log_sd = value.get<double>();
        else if (key == "p") spec.p = value.get<double>();
        else if (key == "min") spec.min = value.get<double>();
        else if (key == "max") spec.max = value.get<double>();
        else if (key == "integer") spec.integer = value.get<bool>();
        else throw ConfigError("covariate '" + name + "' has unknown key '" + key + "'");
    }
    return spec;
}

nlohmann::json covariate_to_json(const CovariateSpec& spec) {
    nlohmann::json j;
    switch (spec.kind) {
        case CovariateSpec::Kind::Normal:
            j["kind"] = "normal";
            j["mean"] = spec.mean;
            j["sd"] = spec.sd;
            break;
        case CovariateSpec::Kind::LogNormal:
            j["kind"] = "lognormal";
            j["log_mean"] = spec.log_mean;
            j["log_sd"] = spec.log_sd;
            break;
        case CovariateSpec::Kind::Bernoulli:
            j["kind"] = "bernoulli";
            j["p"] = spec.p;
            break;
    }
    if (spec.min > -1e300) j["min"] = spec.min;
    if (spec.max < 1e300) j["max"] = spec.max;
    if (spec.integer) j["integer"] = true;
    return j;
}

std::map<std::string, double> coefficients_from_json(const nlohmann::json& j) {
    std::map<std::string, double> coef;
    for (const auto& [key, value] : j.items()) coef[key] = value.get<double>();
    return coef;
}

}  // namespace

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig config;
    for (const auto& [key, value] : j.items()) {
        if (key == "n") {
            config.n = value.get<long>();
        } else if (key == "seed") {
            config.seed = value.get<std::uint64_t>();
        } else if (key == "covariates") {
            for (const auto& [name, spec] : value.items()) {
                config.covariates[name] = covariate_from_json(name, spec);
            }
        } else if (key == "region_shares") {
            for (int r = 0; r < kNumRegions; ++r) {
                config.region_shares[size_t(r)] = value.value(kRegionKeys[size_t(r)], 0.0);
            }
            for (const auto& [name, share] : value.items()) {
                (void)share;
                if (std::find(kRegionKeys.begin(), kRegionKeys.end(), name) == kRegionKeys.end()) {
                    throw ConfigError("unknown region '" + name + "' in region_shares");
                }
            }
        } else if (key == "assignment") {
            for (const auto& [cell_name, coef] : value.items()) {
                const TreatmentCell cell = lattice::cell_from_string(cell_name);
                config.assignment[size_t(cell)] = coefficients_from_json(coef);
            }
        } else if (key == "outcome") {
            for (const auto& [sub, content] : value.items()) {
                if (sub == "baseline") {
                    config.outcome_baseline = coefficients_from_json(content);
                } else if (sub == "effects") {
                    for (const auto& [cell_name, effect] : content.items()) {
                        const TreatmentCell cell = lattice::cell_from_string(cell_name);
                        config.effects[size_t(cell)] = effect.get<double>();
                    }
                } else {
                    throw ConfigError("unknown outcome key '" + sub + "'");
                }
            }
        } else {
            throw ConfigError("unknown scenario key '" + key + "'");
        }
    }
    config.validate();
    return config;
}

nlohmann::json scenario_to_json(const ScenarioConfig& config) {
    nlohmann::json j;
    j["n"] = config.n;
    j["seed"] = config.seed;
    nlohmann::json cov = nlohmann::json::object();
    for (const auto& [name, spec] : config.covariates) cov[name] = covariate_to_json(spec);
    j["covariates"] = cov;
    nlohmann::json regions = nlohmann::json::object();
    for (int r = 0; r < kNumRegions; ++r) {
        regions[kRegionKeys[size_t(r)]] = config.region_shares[size_t(r)];
    }
    j["region_shares"] = regions;
    nlohmann::json assignment = nlohmann::json::object();
    for (int c = 0; c < lattice::kNumCells; ++c) {
        if (config.assignment[size_t(c)].empty()) continue;
        assignment[lattice::to_string(TreatmentCell(c))] = config.assignment[size_t(c)];
    }
    j["assignment"] = assignment;
    nlohmann::json outcome;
    outcome["baseline"] = config.outcome_baseline;
    nlohmann::json effects = nlohmann::json::object();
    for (int c = 0; c < lattice::kNumCells; ++c) {
        if (config.effects[size_t(c)] == 0.0) continue;
        effects[lattice::to_string(TreatmentCell(c))] = config.effects[size_t(c)];
    }
    outcome["effects"] = effects;
    j["outcome"] = outcome;
    return j;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scenario file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("scenario file '" + path + "' is not valid JSON: " + e.what());
    }
    return scenario_from_json(j);
}

ScenarioConfig resolve_scenario(const std::string& ref) {
    if (ref.rfind("builtin:", 0) == 0) return builtin_scenario(ref.substr(8));
    std::ifstream probe(ref);
    if (probe) return load_scenario(ref);
    const auto& names = builtin_scenario_names();
    if (std::find(names.begin(), names.end(), ref) != names.end()) return builtin_scenario(ref);
    throw ConfigError("scenario '" + ref + "' is neither a readable file nor a builtin name");
}

GenerateResult generate(const ScenarioConfig& config) {
    config.validate();
    const size_t n = size_t(config.n);
    std::mt19937_64 rng(config.seed);

    const auto& names = covariate_names();
    const size_t nc = names.size();

    // pass 1: covariates and regions, in a fixed draw order
    std::vector<std::vector<double>> values(nc, std::vector<double>(n));
    std::vector<MacroRegion> regions(n);
    for (size_t i = 0; i < n; ++i) {
        for (size_t c = 0; c < nc; ++c) {
            values[c][i] = draw_covariate(config.covariates.at(names[c]), rng);
        }
        const double u = uniform01(rng);
        double cum = 0.0;
        regions[i] = MacroRegion::South;
        for (int r = 0; r < kNumRegions; ++r) {
            cum += config.region_shares[size_t(r)];
            if (u < cum) {
                regions[i] = MacroRegion(r);
                break;
            }
        }
    }

    // features: intercept, sample-standardized covariates, raw region dummies
    std::vector<double> mean(nc), scale(nc, 1.0);
    for (size_t c = 0; c < nc; ++c) {
        double sum = 0.0;
        for (double v : values[c]) sum += v;
        mean[c] = sum / double(n);
        double ss = 0.0;
        for (double v : values[c]) ss += (v - mean[c]) * (v - mean[c]);
        const double sd = std::sqrt(ss / double(n));
        if (sd > 0) scale[c] = sd;
    }
    const size_t nf = 1 + nc + 4;
    const auto& feature_names = propensity::design_column_names();
    auto features_of = [&](size_t i, std::vector<double>& f) {
        f[0] = 1.0;
        for (size_t c = 0; c < nc; ++c) f[1 + c] = (values[c][i] - mean[c]) / scale[c];
        f[1 + nc + 0] = regions[i] == MacroRegion::North ? 1.0 : 0.0;
        f[1 + nc + 1] = regions[i] == MacroRegion::CentralWest ? 1.0 : 0.0;
        f[1 + nc + 2] = regions[i] == MacroRegion::Southeast ? 1.0 : 0.0;
        f[1 + nc + 3] = regions[i] == MacroRegion::South ? 1.0 : 0.0;
    };
    auto dot = [&](const std::vector<double>& f, const std::map<std::string, double>& coef) {
        double eta = 0.0;
        for (size_t c = 0; c < nf; ++c) {
            const auto it = coef.find(feature_names[c]);
            if (it != coef.end()) eta += f[c] * it->second;
        }
        return eta;
    };

    GenerateResult result;
    result.records.reserve(n);

    // pass 2: assignment and outcome draws plus per-record probabilities
    std::vector<std::array<double, lattice::kNumCells>> pi(n);
    std::vector<double> p_baseline(n);
    std::vector<TreatmentCell> cells(n);
    std::vector<double> f(nf);
    for (size_t i = 0; i < n; ++i) {
        features_of(i, f);

        std::array<double, lattice::kNumCells> eta;
        double eta_max = -1e300;
        for (int c = 0; c < lattice::kNumCells; ++c) {
            eta[size_t(c)] = dot(f, config.assignment[size_t(c)]);
            eta_max = std::max(eta_max, eta[size_t(c)]);
        }
        double denom = 0.0;
        for (int c = 0; c < lattice::kNumCells; ++c) {
            eta[size_t(c)] = std::exp(eta[size_t(c)] - eta_max);
            denom += eta[size_t(c)];
        }
        for (int c = 0; c < lattice::kNumCells; ++c) {
            pi[i][size_t(c)] = eta[size_t(c)] / denom;
            result.expected_cell_counts[size_t(c)] += pi[i][size_t(c)];
        }

        const double u_cell = uniform01(rng);
        double cum = 0.0;
        TreatmentCell cell = TreatmentCell::AllThree;
        for (int c = 0; c < lattice::kNumCells; ++c) {
            cum += pi[i][size_t(c)];
            if (u_cell < cum) {
                cell = TreatmentCell(c);
                break;
            }
        }
        cells[i] = cell;
        result.realized_cell_counts[size_t(cell)] += 1;

        p_baseline[i] = clamp_probability(sigmoid(dot(f, config.outcome_baseline)));
        const double p_own =
            clamp_probability(p_baseline[i] + config.effects[size_t(cell)]);
        const int sold = uniform01(rng) < p_own ? 1 : 0;

        HouseholdRecord rec;
        rec.id = "syn-" + std::to_string(i + 1);
        rec.age = int(values[0][i]);
        rec.gender_man = int(values[1][i]);
        rec.farm_area = values[2][i];
        rec.race_white = int(values[3][i]);
        rec.education = int(values[4][i]);
        rec.household_size = std::max(1, int(values[5][i]));
        rec.mobile_phone = int(values[6][i]);
        rec.internet = int(values[7][i]);
        rec.transport = int(values[8][i]);
        rec.farm_income = values[9][i];
        rec.other_income = values[10][i];
        rec.macro_region = regions[i];
        rec.pronaf = lattice::cell_has_pronaf(cell) ? 1 : 0;
        rec.ater = lattice::cell_has_ater(cell) ? 1 : 0;
        rec.seeds = lattice::cell_has_seeds(cell) ? 1 : 0;
        rec.private_credit = 0;
        rec.private_assistance = 0;
        rec.hired_workers = 0;
        rec.employment_class = EmploymentClass::Entrepreneur;
        rec.state = "SYN";
        rec.annual_gross_income = 12.0 * (values[9][i] + values[10][i]);
        rec.sold_output = sold;
        result.records.push_back(std::move(rec));
    }

    // true ATT per contrast: treated-cell probability minus the probability
    // under the contrast's control condition (mixture for total contrasts)
    for (const auto& contrast : lattice::standard_contrasts()) {
        double sum = 0.0;
        long count = 0;
        for (size_t i = 0; i < n; ++i) {
            if (!contrast.is_treated(cells[i])) continue;
            const double p_own =
                clamp_probability(p_baseline[i] + config.effects[size_t(cells[i])]);
            double mix = 0.0;
            double mass = 0.0;
            for (int c = 0; c < lattice::kNumCells; ++c) {
                if (!contrast.is_control(TreatmentCell(c))) continue;
                mix += pi[i][size_t(c)] *
                       clamp_probability(p_baseline[i] + config.effects[size_t(c)]);
                mass += pi[i][size_t(c)];
            }
            if (mass <= 0) continue;
            sum += p_own - mix / mass;
            count += 1;
        }
        if (count > 0) result.truth[contrast.id] = sum / double(count);
    }

    for (int c = 0; c < lattice::kNumCells; ++c) {
        if (result.expected_cell_counts[size_t(c)] < 1.0) {
            std::ostringstream msg;
            msg << "cell '" << lattice::to_string(TreatmentCell(c)) << "' expects "
                << result.expected_cell_counts[size_t(c)] << " of " << config.n
                << " records and will likely be empty";
            result.warnings.push_back(msg.str());
        }
    }
    return result;
}

double brute_force_att(const std::vector<double>& treated_scores,
                       const std::vector<double>& treated_outcomes,
                       const std::vector<double>& control_scores,
                       const std::vector<double>& control_outcomes,
                       const matching::MatchSpec& spec) {
    if (treated_scores.size() + control_scores.size() > 1000) {
        throw EstimationError("brute-force oracle is capped at 1000 units");
    }
    if (treated_scores.empty() || control_scores.empty()) {
        throw EstimationError("brute-force oracle needs both groups");
    }

    // support interval, recomputed from scratch
    double lo = -1e300;
    double hi = 1e300;
    if (spec.common_support) {
        auto bound = [](const std::vector<double>& v, bool upper) {
            double b = v[0];
            for (double x : v) b = upper ? std::max(b, x) : std::min(b, x);
            return b;
        };
        auto percentile = [](std::vector<double> v, double q) {
            std::sort(v.begin(), v.end());
            const double pos = q * double(v.size() - 1);
            const size_t below = size_t(pos);
            const size_t above = below + 1 < v.size() ? below + 1 : below;
            return v[below] + (pos - double(below)) * (v[above] - v[below]);
        };
        if (spec.support_trim_percentile > 0) {
            const double q = spec.support_trim_percentile;
            lo = std::max(percentile(treated_scores, q), percentile(control_scores, q));
            hi = std::min(percentile(treated_scores, 1 - q), percentile(control_scores, 1 - q));
        } else {
            lo = std::max(bound(treated_scores, false), bound(control_scores, false));
            hi = std::min(bound(treated_scores, true), bound(control_scores, true));
        }
        if (lo > hi) throw EstimationError("score ranges do not overlap");
    }

    double att_sum = 0.0;
    long used = 0;
    for (size_t i = 0; i < treated_scores.size(); ++i) {
        const double p = treated_scores[i];
        if (spec.common_support && (p < lo || p > hi)) continue;

        double counterfactual = 0.0;
        bool matched = false;
        switch (spec.algorithm) {
            case matching::Algorithm::Kernel: {
                double num = 0.0;
                double den = 0.0;
                for (size_t j = 0; j < control_scores.size(); ++j) {
                    const double u = (p - control_scores[j]) / spec.bandwidth;
                    double w = 0.0;
                    if (spec.kernel_kind == matching::KernelKind::Epanechnikov) {
                        if (std::abs(u) < 1.0) w = 0.75 * (1.0 - u * u);
                    } else {
                        w = std::exp(-0.5 * u * u);
                    }
                    if (w <= 0.0) continue;
                    num += w * control_outcomes[j];
                    den += w;
                }
                if (den > 0.0) {
                    counterfactual = num / den;
                    matched = true;
                }
                break;
            }
            case matching::Algorithm::NearestNeighbour: {
                std::vector<double> dist;
                dist.reserve(control_scores.size());
                for (double cs : control_scores) dist.push_back(std::abs(p - cs));
                std::vector<double> sorted = dist;
                std::sort(sorted.begin(), sorted.end());
                const size_t kth = std::min(size_t(spec.k), sorted.size()) - 1;
                const double cutoff = sorted[kth];
                double sum = 0.0;
                long m = 0;
                for (size_t j = 0; j < dist.size(); ++j) {
                    if (dist[j] <= cutoff) {
                        sum += control_outcomes[j];
                        m += 1;
                    }
                }
                counterfactual = sum / double(m);
                matched = true;
                break;
            }
            case matching::Algorithm::Radius: {
                double sum = 0.0;
                long m = 0;
                for (size_t j = 0; j < control_scores.size(); ++j) {
                    if (std::abs(p - control_scores[j]) <= spec.radius) {
                        sum += control_outcomes[j];
                        m += 1;
                    }
                }
                if (m > 0) {
                    counterfactual = sum / double(m);
                    matched = true;
                }
                break;
            }
        }
        if (!matched) continue;
        att_sum += treated_outcomes[i] - counterfactual;
        used += 1;
    }
    if (used == 0) {
        throw EstimationError("no treated observations remain on common support with a match");
    }
    return att_sum / double(used);
}

namespace {

ScenarioConfig paper_shaped_base() {
    ScenarioConfig config;
    auto normal = [](double mean, double sd, double lo, double hi, bool integer) {
        CovariateSpec s;
        s.kind = CovariateSpec::Kind::Normal;
        s.mean = mean;
        s.sd = sd;
        s.min = lo;
        s.max = hi;
        s.integer = integer;
        return s;
    };
    auto lognormal = [](double log_mean, double log_sd, double hi) {
        CovariateSpec s;
        s.kind = CovariateSpec::Kind::LogNormal;
        s.log_mean = log_mean;
        s.log_sd = log_sd;
        s.min = 0;
        s.max = hi;
        return s;
    };
    auto bernoulli = [](double p) {
        CovariateSpec s;
        s.kind = CovariateSpec::Kind::Bernoulli;
        s.p = p;
        s.min = 0;
        s.max = 1;
        return s;
    };
    config.covariates["age"] = normal(48.36, 14.05, 16, 95, true);
    config.covariates["gender_man"] = bernoulli(0.85);
    config.covariates["farm_area"] = lognormal(8.18, 1.55, 2000000);
    config.covariates["race_white"] = bernoulli(0.36);
    config.covariates["education"] = normal(5.44, 3.92, 0, 16, true);
    config.covariates["household_size"] = normal(3.52, 1.75, 1, 14, true);
    config.covariates["mobile_phone"] = bernoulli(0.78);
    config.covariates["internet"] = bernoulli(0.20);
    config.covariates["transport"] = bernoulli(0.64);
    config.covariates["farm_income"] = lognormal(6.22, 1.08, 40000);
    config.covariates["other_income"] = lognormal(4.64, 1.39, 20000);
    config.region_shares = {0.2585, 0.4018, 0.0661, 0.1368, 0.1368};
    config.outcome_baseline = {{"intercept", 0.944}, {"education", 0.25},  {"transport", 0.20},
                               {"farm_income", 0.15}, {"internet", 0.10},  {"age", -0.05},
                               {"region_south", 0.15}};
    return config;
}

ScenarioConfig make_default_scenario() {
    ScenarioConfig config = paper_shaped_base();
    config.n = 20000;
    config.seed = 20140101;
    using C = std::map<std::string, double>;
    config.assignment[size_t(TreatmentCell::PronafOnly)] =
        C{{"intercept", -0.6233}, {"education", 0.12}, {"mobile_phone", 0.08},
          {"farm_income", 0.10}, {"region_south", 0.35}};
    config.assignment[size_t(TreatmentCell::AterOnly)] =
        C{{"intercept", -0.6233}, {"education", 0.14}, {"internet", 0.08},
          {"region_south", 0.35}};
    config.assignment[size_t(TreatmentCell::SeedsOnly)] =
        C{{"intercept", -4.823}, {"household_size", 0.10}, {"education", -0.08},
          {"region_south", 0.25}};
    config.assignment[size_t(TreatmentCell::PronafAter)] =
        C{{"intercept", -0.5280}, {"education", 0.10}, {"transport", 0.10},
          {"farm_income", 0.08}, {"region_south", 0.30}};
    config.assignment[size_t(TreatmentCell::PronafSeeds)] =
        C{{"intercept", -5.4518}, {"farm_income", 0.06}, {"region_south", 0.20}};
    config.assignment[size_t(TreatmentCell::AterSeeds)] =
        C{{"intercept", -5.4518}, {"internet", 0.06}, {"region_south", 0.20}};
    config.assignment[size_t(TreatmentCell::AllThree)] =
        C{{"intercept", -6.1450}, {"education", 0.08}, {"region_south", 0.20}};
    config.effects[size_t(TreatmentCell::PronafOnly)] = 0.10;
    config.effects[size_t(TreatmentCell::AterOnly)] = 0.08;
    config.effects[size_t(TreatmentCell::SeedsOnly)] = 0.02;
    config.effects[size_t(TreatmentCell::PronafAter)] = 0.125;
    config.effects[size_t(TreatmentCell::PronafSeeds)] = 0.10;
    config.effects[size_t(TreatmentCell::AterSeeds)] = 0.09;
    config.effects[size_t(TreatmentCell::AllThree)] = 0.11;
    return config;
}

// Pushes every treated cell except `kept` far below the baseline, leaving
// an effectively two-cell population.
void suppress_other_cells(ScenarioConfig& config, TreatmentCell kept) {
    for (int c = 1; c < lattice::kNumCells; ++c) {
        if (TreatmentCell(c) == kept) continue;
        config.assignment[size_t(c)] = std::map<std::string, double>{{"intercept", -30.0}};
    }
}

ScenarioConfig make_strong_selection_scenario() {
    ScenarioConfig config = paper_shaped_base();
    config.n = 20000;
    config.seed = 424242;
    config.assignment[size_t(TreatmentCell::PronafOnly)] =
        std::map<std::string, double>{{"intercept", 0.0}, {"education", 1.2}};
    suppress_other_cells(config, TreatmentCell::PronafOnly);
    config.outcome_baseline = {{"intercept", 0.0}, {"education", 1.0}};
    config.effects[size_t(TreatmentCell::PronafOnly)] = 0.10;
    return config;
}

ScenarioConfig make_zero_effect_scenario() {
    ScenarioConfig config = paper_shaped_base();
    config.n = 1200;
    config.seed = 7;
    config.assignment[size_t(TreatmentCell::PronafOnly)] =
        std::map<std::string, double>{{"intercept", 0.0}, {"education", 0.5},
                                      {"transport", 0.3}};
    suppress_other_cells(config, TreatmentCell::PronafOnly);
    // effects all zero: the null holds exactly
    return config;
}

ScenarioConfig make_demo_scenario() {
    ScenarioConfig config = paper_shaped_base();
    config.n = 3000;
    config.seed = 90210;
    using C = std::map<std::string, double>;
    config.assignment[size_t(TreatmentCell::PronafOnly)] =
        C{{"intercept", -1.0498}, {"education", 0.15}, {"farm_income", 0.10},
          {"region_south", 0.35}};
    config.assignment[size_t(TreatmentCell::AterOnly)] =
        C{{"intercept", -1.0498}, {"education", 0.12}, {"internet", 0.08},
          {"region_south", 0.35}};
    config.assignment[size_t(TreatmentCell::SeedsOnly)] =
        C{{"intercept", -1.3863}, {"household_size", 0.10}, {"region_south", 0.25}};
    config.assignment[size_t(TreatmentCell::PronafAter)] =
        C{{"intercept", -1.2040}, {"education", 0.10}, {"transport", 0.10},
          {"region_south", 0.30}};
    config.assignment[size_t(TreatmentCell::PronafSeeds)] =
        C{{"intercept", -2.0794}, {"farm_income", 0.06}};
    config.assignment[size_t(TreatmentCell::AterSeeds)] =
        C{{"intercept", -2.0794}, {"internet", 0.06}};
    // intentionally unreachable: exercises the non-calculable rendering path
    config.assignment[size_t(TreatmentCell::AllThree)] = C{{"intercept", -30.0}};
    config.effects[size_t(TreatmentCell::PronafOnly)] = 0.10;
    config.effects[size_t(TreatmentCell::AterOnly)] = 0.08;
    config.effects[size_t(TreatmentCell::SeedsOnly)] = 0.02;
    config.effects[size_t(TreatmentCell::PronafAter)] = 0.125;
    config.effects[size_t(TreatmentCell::PronafSeeds)] = 0.10;
    config.effects[size_t(TreatmentCell::AterSeeds)] = 0.09;
    config.effects[size_t(TreatmentCell::AllThree)] = 0.11;
    return config;
}

}  // namespace

const std::vector<std::string>& builtin_scenario_names() {
    static const std::vector<std::string> names = {"default", "strong_selection", "zero_effect",
                                                   "demo"};
    return names;
}

ScenarioConfig builtin_scenario(const std::string& name) {
    if (name == "default") return make_default_scenario();
    if (name == "strong_selection") return make_strong_selection_scenario();
    if (name == "zero_effect") return make_zero_effect_scenario();
    if (name == "demo") return make_demo_scenario();
    throw ConfigError("unknown built-in scenario '" + name + "'");
}

}  // namespace policymix::synthetic
