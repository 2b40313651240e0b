#include "policymix/matching.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "policymix/error.hpp"

namespace policymix::matching {

const char* to_string(Algorithm a) {
    switch (a) {
        case Algorithm::Kernel: return "kernel";
        case Algorithm::NearestNeighbour: return "nearest_neighbour";
        case Algorithm::Radius: return "radius";
    }
    return "?";
}

const char* to_string(KernelKind k) {
    return k == KernelKind::Epanechnikov ? "epanechnikov" : "gaussian";
}

Algorithm algorithm_from_string(const std::string& s) {
    if (s == "kernel") return Algorithm::Kernel;
    if (s == "nearest_neighbour") return Algorithm::NearestNeighbour;
    if (s == "radius") return Algorithm::Radius;
    throw ConfigError("unknown matching algorithm '" + s + "'");
}

KernelKind kernel_from_string(const std::string& s) {
    if (s == "epanechnikov") return KernelKind::Epanechnikov;
    if (s == "gaussian") return KernelKind::Gaussian;
    throw ConfigError("unknown kernel '" + s + "'");
}

void MatchSpec::validate() const {
    if (algorithm == Algorithm::Kernel && !(bandwidth > 0)) {
        throw ConfigError("kernel bandwidth must be positive");
    }
    if (algorithm == Algorithm::NearestNeighbour && k < 1) {
        throw ConfigError("nearest neighbour matching needs k >= 1");
    }
    if (algorithm == Algorithm::Radius && !(radius > 0)) {
        throw ConfigError("matching radius must be positive");
    }
    if (support_trim_percentile < 0 || support_trim_percentile >= 0.5) {
        throw ConfigError("support trim percentile must lie in [0, 0.5)");
    }
}

std::string MatchSpec::label() const {
    std::ostringstream out;
    switch (algorithm) {
        case Algorithm::Kernel:
            out << "kernel(" << to_string(kernel_kind) << ", h=" << bandwidth << ")";
            break;
        case Algorithm::NearestNeighbour:
            out << "nearest_neighbour(k=" << k << ")";
            break;
        case Algorithm::Radius:
            out << "radius(" << radius << ")";
            break;
    }
    return out.str();
}

double kernel_value(KernelKind kernel, double u) {
    if (kernel == KernelKind::Epanechnikov) {
        const double a = std::abs(u);
        return a < 1.0 ? 0.75 * (1.0 - u * u) : 0.0;
    }
    return std::exp(-0.5 * u * u);
}

namespace {

double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * double(values.size() - 1);
    const size_t lo = size_t(std::floor(pos));
    const size_t hi = size_t(std::ceil(pos));
    const double frac = pos - double(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace

SupportInterval support_interval(const std::vector<double>& treated_scores,
                                 const std::vector<double>& control_scores,
                                 double trim_percentile) {
    if (treated_scores.empty() || control_scores.empty()) {
        throw EstimationError("common support needs scores from both groups");
    }
    SupportInterval interval;
    if (trim_percentile > 0) {
        interval.lo = std::max(quantile(treated_scores, trim_percentile),
                               quantile(control_scores, trim_percentile));
        interval.hi = std::min(quantile(treated_scores, 1.0 - trim_percentile),
                               quantile(control_scores, 1.0 - trim_percentile));
    } else {
        const auto [t_min, t_max] =
            std::minmax_element(treated_scores.begin(), treated_scores.end());
        const auto [c_min, c_max] =
            std::minmax_element(control_scores.begin(), control_scores.end());
        interval.lo = std::max(*t_min, *c_min);
        interval.hi = std::min(*t_max, *c_max);
    }
    if (interval.lo > interval.hi) {
        throw EstimationError("common support interval is empty: score ranges do not overlap");
    }
    return interval;
}

std::vector<bool> common_support_mask(const std::vector<double>& treated_scores,
                                      const std::vector<double>& control_scores,
                                      double trim_percentile) {
    const SupportInterval interval =
        support_interval(treated_scores, control_scores, trim_percentile);
    std::vector<bool> keep(treated_scores.size());
    for (size_t i = 0; i < treated_scores.size(); ++i) {
        keep[i] = interval.contains(treated_scores[i]);
    }
    return keep;
}

namespace {

struct UnitWeights {
    // parallel arrays: control index and unnormalized weight
    std::vector<int> index;
    std::vector<double> weight;
    double total = 0.0;

    void clear() {
        index.clear();
        weight.clear();
        total = 0.0;
    }
};

// Admissible controls and weights for one treated unit. Returns false when
// the unit is unmatched.
bool unit_weights(double score, const std::vector<double>& control_scores, const MatchSpec& spec,
                  UnitWeights& w) {
    const size_t nc = control_scores.size();
    w.clear();

    switch (spec.algorithm) {
        case Algorithm::Kernel: {
            for (size_t j = 0; j < nc; ++j) {
                const double v =
                    kernel_value(spec.kernel_kind, (score - control_scores[j]) / spec.bandwidth);
                if (v <= 0.0) continue;
                w.index.push_back(int(j));
                w.weight.push_back(v);
                w.total += v;
            }
            return w.total > 0.0;
        }
        case Algorithm::NearestNeighbour: {
            const size_t kk = std::min(size_t(spec.k), nc);
            std::vector<double> dist(nc);
            for (size_t j = 0; j < nc; ++j) dist[j] = std::abs(score - control_scores[j]);
            std::vector<double> order = dist;
            std::nth_element(order.begin(), order.begin() + (kk - 1), order.end());
            // every control tied with the k-th smallest distance joins the set
            const double cutoff = order[kk - 1];
            for (size_t j = 0; j < nc; ++j) {
                if (dist[j] > cutoff) continue;
                w.index.push_back(int(j));
                w.weight.push_back(1.0);
                w.total += 1.0;
            }
            return true;
        }
        case Algorithm::Radius: {
            for (size_t j = 0; j < nc; ++j) {
                if (std::abs(score - control_scores[j]) > spec.radius) continue;
                w.index.push_back(int(j));
                w.weight.push_back(1.0);
                w.total += 1.0;
            }
            return w.total > 0.0;
        }
    }
    return false;
}

}  // namespace

std::optional<double> kernel_counterfactual(double treated_score,
                                            const std::vector<double>& control_scores,
                                            const std::vector<double>& control_outcomes,
                                            KernelKind kernel, double bandwidth) {
    MatchSpec spec;
    spec.algorithm = Algorithm::Kernel;
    spec.kernel_kind = kernel;
    spec.bandwidth = bandwidth;
    spec.validate();
    UnitWeights w;
    if (!unit_weights(treated_score, control_scores, spec, w)) return std::nullopt;
    double sum = 0.0;
    for (size_t m = 0; m < w.index.size(); ++m) {
        sum += w.weight[m] * control_outcomes[size_t(w.index[m])];
    }
    return sum / w.total;
}

double nn_counterfactual(double treated_score, const std::vector<double>& control_scores,
                         const std::vector<double>& control_outcomes, int k) {
    if (control_scores.empty()) throw EstimationError("nearest neighbour matching needs controls");
    MatchSpec spec;
    spec.algorithm = Algorithm::NearestNeighbour;
    spec.k = k;
    spec.validate();
    UnitWeights w;
    unit_weights(treated_score, control_scores, spec, w);
    double sum = 0.0;
    for (size_t m = 0; m < w.index.size(); ++m) {
        sum += control_outcomes[size_t(w.index[m])];
    }
    return sum / w.total;
}

std::optional<double> radius_counterfactual(double treated_score,
                                            const std::vector<double>& control_scores,
                                            const std::vector<double>& control_outcomes,
                                            double radius) {
    MatchSpec spec;
    spec.algorithm = Algorithm::Radius;
    spec.radius = radius;
    spec.validate();
    UnitWeights w;
    if (!unit_weights(treated_score, control_scores, spec, w)) return std::nullopt;
    double sum = 0.0;
    for (size_t m = 0; m < w.index.size(); ++m) {
        sum += control_outcomes[size_t(w.index[m])];
    }
    return sum / w.total;
}

MatchOutput match_and_average(const std::vector<double>& treated_scores,
                              const std::vector<double>& control_scores,
                              const std::vector<std::vector<double>>& control_series,
                              const MatchSpec& spec) {
    spec.validate();
    if (control_scores.empty()) {
        throw EstimationError("matching needs a non-empty control pool");
    }
    for (const auto& series : control_series) {
        if (series.size() != control_scores.size()) {
            throw EstimationError("control series length does not match the control scores");
        }
    }

    MatchOutput result;
    bool has_interval = false;
    if (spec.common_support) {
        result.support =
            support_interval(treated_scores, control_scores, spec.support_trim_percentile);
        has_interval = true;
    }
    result.counterfactuals.resize(control_series.size());
    result.control_weight_total.assign(control_scores.size(), 0.0);

    UnitWeights w;
    for (size_t i = 0; i < treated_scores.size(); ++i) {
        if (has_interval && !result.support.contains(treated_scores[i])) {
            result.off_support.push_back(int(i));
            continue;
        }
        if (!unit_weights(treated_scores[i], control_scores, spec, w)) {
            result.unmatched.push_back(int(i));
            continue;
        }
        result.used.push_back(int(i));
        for (size_t s = 0; s < control_series.size(); ++s) {
            double sum = 0.0;
            for (size_t m = 0; m < w.index.size(); ++m) {
                sum += w.weight[m] * control_series[s][size_t(w.index[m])];
            }
            result.counterfactuals[s].push_back(sum / w.total);
        }
        for (size_t m = 0; m < w.index.size(); ++m) {
            result.control_weight_total[size_t(w.index[m])] += w.weight[m] / w.total;
        }
    }
    return result;
}

AttEstimate estimate_att(const std::vector<double>& treated_scores,
                         const std::vector<double>& treated_outcomes,
                         const std::vector<double>& control_scores,
                         const std::vector<double>& control_outcomes, const MatchSpec& spec) {
    if (treated_scores.size() != treated_outcomes.size()) {
        throw EstimationError("treated outcome series length does not match the treated scores");
    }
    if (treated_scores.empty()) {
        throw EstimationError("matching needs at least one treated unit");
    }
    const MatchOutput match =
        match_and_average(treated_scores, control_scores, {control_outcomes}, spec);
    if (match.used.empty()) {
        throw EstimationError("no treated observations remain on common support with a match");
    }

    double sum = 0.0;
    for (size_t u = 0; u < match.used.size(); ++u) {
        sum += treated_outcomes[size_t(match.used[u])] - match.counterfactuals[0][u];
    }

    AttEstimate est;
    est.algorithm = spec.algorithm;
    est.coeff = sum / double(match.used.size());
    est.n_treated_on_support = int(match.used.size() + match.unmatched.size());
    est.n_treated_dropped = int(match.off_support.size());
    est.n_unmatched = int(match.unmatched.size());
    est.n_controls = int(control_scores.size());
    return est;
}

}  // namespace policymix::matching
