#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "policymix/estimation.hpp"
#include "policymix/lattice.hpp"
#include "policymix/matching.hpp"
#include "policymix/propensity.hpp"

namespace policymix::inference {

std::string stars_for(double p_value);

struct ZTest {
    std::optional<double> z;
    std::optional<double> p_value;
    std::string stars;

    bool defined() const { return z.has_value(); }
};

// Two-sided test of coeff against the standard normal; se = 0 leaves z
// undefined rather than failing.
ZTest z_and_p(double coeff, double se);

struct ProportionTest {
    double diff = 0.0;
    std::optional<double> z;
    std::optional<double> p_value;
    std::string stars;

    bool defined() const { return z.has_value(); }
};

// Pooled two-sample z test for a difference in proportions.
ProportionTest two_proportion_test(long n1, long successes1, long n2, long successes2);

struct BootstrapConfig {
    int replicates = 1000;
    std::uint64_t seed = 0;
    enum class ResampleUnit { WholeSample };
    ResampleUnit resample_unit = ResampleUnit::WholeSample;
    int threads = 1;

    void validate() const;
};

// Fewer successful replicates than this and the se is considered unreliable.
inline constexpr int kMinSuccessfulReplicates = 50;

struct BootstrapResult {
    double se = 0.0;
    int successful_replicates = 0;
    int failed_replicates = 0;

    bool reliable() const { return successful_replicates >= kMinSuccessfulReplicates; }
};

// Resamples the contrast pool with replacement, refits the propensity model,
// re-enforces common support, and re-estimates the ATT per replicate. One
// resample/refit pass serves every MatchSpec, and each replicate draws its
// own RNG stream from (seed, replicate index), so results do not depend on
// thread count or execution order.
std::vector<BootstrapResult> bootstrap_att_multi(const estimation::Pool& pool,
                                                 const lattice::Contrast& contrast,
                                                 const std::vector<matching::MatchSpec>& specs,
                                                 const propensity::FitOptions& model_recipe,
                                                 const BootstrapConfig& config);

// Single-spec variant; throws when fewer than kMinSuccessfulReplicates
// replicates succeed.
BootstrapResult bootstrap_att(const estimation::Pool& pool, const lattice::Contrast& contrast,
                              const matching::MatchSpec& spec,
                              const propensity::FitOptions& model_recipe,
                              const BootstrapConfig& config);

}  // namespace policymix::inference
