#include "policymix/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

#include "policymix/error.hpp"
#include "policymix/rng.hpp"

namespace policymix::inference {

std::string stars_for(double p_value) {
    if (p_value < 0.01) return "***";
    if (p_value < 0.05) return "**";
    if (p_value < 0.10) return "*";
    return "";
}

namespace {

double two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

}  // namespace

ZTest z_and_p(double coeff, double se) {
    ZTest result;
    if (!(se > 0)) {
        return result;
    }
    const double z = coeff / se;
    result.z = z;
    result.p_value = two_sided_p(z);
    result.stars = stars_for(*result.p_value);
    return result;
}

ProportionTest two_proportion_test(long n1, long successes1, long n2, long successes2) {
    if (n1 < 1 || n2 < 1) {
        throw EstimationError("proportion test needs at least one observation per group");
    }
    if (successes1 < 0 || successes1 > n1 || successes2 < 0 || successes2 > n2) {
        throw EstimationError("success counts must lie within their group sizes");
    }
    const double p1 = double(successes1) / double(n1);
    const double p2 = double(successes2) / double(n2);

    ProportionTest result;
    result.diff = p1 - p2;
    const double pooled = double(successes1 + successes2) / double(n1 + n2);
    if (pooled <= 0.0 || pooled >= 1.0) {
        return result;  // z undefined at degenerate pooled proportion
    }
    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / double(n1) + 1.0 / double(n2)));
    const double z = result.diff / se;
    result.z = z;
    result.p_value = two_sided_p(z);
    result.stars = stars_for(*result.p_value);
    return result;
}

void BootstrapConfig::validate() const {
    if (replicates < 2) throw ConfigError("bootstrap needs at least 2 replicates");
    if (threads < 1) throw ConfigError("bootstrap thread count must be at least 1");
}

namespace {

// att per (spec, replicate); unset = failed replicate
using ReplicateTable = std::vector<std::vector<std::optional<double>>>;

void run_replicate(const estimation::Pool& pool, const lattice::Contrast& contrast,
                   const std::vector<matching::MatchSpec>& specs,
                   const propensity::FitOptions& recipe, std::uint64_t master_seed, int replicate,
                   ReplicateTable& out) {
    const size_t n = size_t(pool.size());
    std::mt19937_64 rng = make_rng(master_seed, std::uint64_t(replicate));

    estimation::Pool sample;
    sample.column_names = pool.column_names;
    sample.X.resize(Eigen::Index(n), pool.X.cols());
    sample.outcome.resize(n);
    sample.cell.resize(n);
    for (size_t i = 0; i < n; ++i) {
        const size_t j = size_t(uniform_below(rng, std::uint64_t(n)));
        sample.X.row(Eigen::Index(i)) = pool.X.row(Eigen::Index(j));
        sample.outcome[i] = pool.outcome[j];
        sample.cell[i] = pool.cell[j];
    }

    estimation::ScoredContrast scored;
    try {
        scored = estimation::fit_contrast_scores(sample, contrast, recipe);
        if (!scored.model.converged) throw EstimationError("model did not converge");
    } catch (const EstimationError&) {
        return;  // whole replicate fails for every spec
    }

    for (size_t s = 0; s < specs.size(); ++s) {
        try {
            const matching::AttEstimate est =
                matching::estimate_att(scored.treated_scores, scored.treated_outcomes,
                                       scored.control_scores, scored.control_outcomes, specs[s]);
            out[s][size_t(replicate)] = est.coeff;
        } catch (const EstimationError&) {
            // this spec's replicate fails; others may still succeed
        }
    }
}

}  // namespace

std::vector<BootstrapResult> bootstrap_att_multi(const estimation::Pool& pool,
                                                 const lattice::Contrast& contrast,
                                                 const std::vector<matching::MatchSpec>& specs,
                                                 const propensity::FitOptions& model_recipe,
                                                 const BootstrapConfig& config) {
    config.validate();
    for (const auto& spec : specs) spec.validate();
    if (specs.empty()) throw ConfigError("bootstrap needs at least one matching spec");
    if (pool.size() < 1) throw EstimationError("bootstrap needs a non-empty pool");

    const int B = config.replicates;
    ReplicateTable table(specs.size(), std::vector<std::optional<double>>(size_t(B)));

    const int threads = std::min(config.threads, B);
    if (threads <= 1) {
        for (int r = 0; r < B; ++r) {
            run_replicate(pool, contrast, specs, model_recipe, config.seed, r, table);
        }
    } else {
        std::vector<std::thread> workers;
        std::exception_ptr failure;
        std::mutex failure_mutex;
        for (int w = 0; w < threads; ++w) {
            workers.emplace_back([&, w] {
                try {
                    for (int r = w; r < B; r += threads) {
                        run_replicate(pool, contrast, specs, model_recipe, config.seed, r, table);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        for (auto& worker : workers) worker.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<BootstrapResult> results(specs.size());
    for (size_t s = 0; s < specs.size(); ++s) {
        std::vector<double> atts;
        atts.reserve(size_t(B));
        for (int r = 0; r < B; ++r) {
            if (table[s][size_t(r)]) atts.push_back(*table[s][size_t(r)]);
        }
        BootstrapResult& res = results[s];
        res.successful_replicates = int(atts.size());
        res.failed_replicates = B - res.successful_replicates;
        if (atts.size() >= 2) {
            double mean = 0.0;
            for (double a : atts) mean += a;
            mean /= double(atts.size());
            double ss = 0.0;
            for (double a : atts) ss += (a - mean) * (a - mean);
            res.se = std::sqrt(ss / double(atts.size() - 1));
        }
    }
    return results;
}

BootstrapResult bootstrap_att(const estimation::Pool& pool, const lattice::Contrast& contrast,
                              const matching::MatchSpec& spec,
                              const propensity::FitOptions& model_recipe,
                              const BootstrapConfig& config) {
    const BootstrapResult result =
        bootstrap_att_multi(pool, contrast, {spec}, model_recipe, config)[0];
    if (!result.reliable()) {
        throw EstimationError("convergence not achieved: only " +
                              std::to_string(result.successful_replicates) + " of " +
                              std::to_string(config.replicates) +
                              " bootstrap replicates succeeded");
    }
    return result;
}

}  // namespace policymix::inference
