#pragma once

#include <optional>
#include <string>
#include <vector>

namespace policymix::matching {

enum class Algorithm { Kernel, NearestNeighbour, Radius };
enum class KernelKind { Epanechnikov, Gaussian };

const char* to_string(Algorithm a);
const char* to_string(KernelKind k);
Algorithm algorithm_from_string(const std::string& s);
KernelKind kernel_from_string(const std::string& s);

struct MatchSpec {
    Algorithm algorithm = Algorithm::Kernel;
    KernelKind kernel_kind = KernelKind::Epanechnikov;
    double bandwidth = 0.06;
    int k = 3;
    double radius = 0.10;
    bool common_support = true;
    // 0 keeps the plain min-max interval; q in (0, 0.5) trims the interval to
    // the [q, 1-q] score quantiles of each group before intersecting.
    double support_trim_percentile = 0.0;

    void validate() const;
    std::string label() const;  // e.g. "kernel(epanechnikov, h=0.06)"
};

double kernel_value(KernelKind kernel, double u);

// Overlap interval of the two score distributions. Only treated units are
// trimmed against it; every control stays in the pool.
struct SupportInterval {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double score) const { return score >= lo && score <= hi; }
};

SupportInterval support_interval(const std::vector<double>& treated_scores,
                                 const std::vector<double>& control_scores,
                                 double trim_percentile = 0.0);

std::vector<bool> common_support_mask(const std::vector<double>& treated_scores,
                                      const std::vector<double>& control_scores,
                                      double trim_percentile = 0.0);

// Single-unit counterfactuals. nullopt marks an unmatched unit (no control
// with positive weight / none inside the radius).
std::optional<double> kernel_counterfactual(double treated_score,
                                            const std::vector<double>& control_scores,
                                            const std::vector<double>& control_outcomes,
                                            KernelKind kernel, double bandwidth);
double nn_counterfactual(double treated_score, const std::vector<double>& control_scores,
                         const std::vector<double>& control_outcomes, int k);
std::optional<double> radius_counterfactual(double treated_score,
                                            const std::vector<double>& control_scores,
                                            const std::vector<double>& control_outcomes,
                                            double radius);

// One matching pass over the on-support treated units. For every series of
// control values supplied, the weighted control average is produced per
// matched treated unit, so the same weights serve outcomes and covariates.
// control_weight_total accumulates each control's matching weight across
// treated units (per-unit weights sum to 1).
struct MatchOutput {
    SupportInterval support;
    std::vector<int> used;         // treated indices, on support and matched
    std::vector<int> off_support;  // treated indices outside the interval
    std::vector<int> unmatched;    // on support but no admissible control
    // counterfactuals[s][u] pairs with used[u] for control_series[s]
    std::vector<std::vector<double>> counterfactuals;
    std::vector<double> control_weight_total;
};

MatchOutput match_and_average(const std::vector<double>& treated_scores,
                              const std::vector<double>& control_scores,
                              const std::vector<std::vector<double>>& control_series,
                              const MatchSpec& spec);

// Results-table row. se/z/p stay unset until the bootstrap fills them.
struct AttEstimate {
    int contrast_id = -1;
    Algorithm algorithm = Algorithm::Kernel;
    double coeff = 0.0;
    std::optional<double> se;
    std::optional<double> z;
    std::optional<double> p_value;
    std::string stars;
    int n_treated_on_support = 0;  // inside the support interval
    int n_treated_dropped = 0;     // trimmed by the interval
    int n_unmatched = 0;           // on support, no admissible control
    int n_controls = 0;            // control pool size

    int n_used() const { return n_treated_on_support - n_unmatched; }
    double pct() const { return coeff * 100.0; }
};

AttEstimate estimate_att(const std::vector<double>& treated_scores,
                         const std::vector<double>& treated_outcomes,
                         const std::vector<double>& control_scores,
                         const std::vector<double>& control_outcomes, const MatchSpec& spec);

}  // namespace policymix::matching
