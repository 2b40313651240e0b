#include <doctest.h>

#include <cmath>
#include <vector>

#include "policymix/error.hpp"
#include "policymix/matching.hpp"
#include "policymix/rng.hpp"
#include "policymix/synthetic.hpp"

using namespace policymix;
using namespace policymix::matching;

TEST_CASE("kernel weights match their formulas") {
    CHECK(kernel_value(KernelKind::Epanechnikov, 0.0) == doctest::Approx(0.75));
    CHECK(kernel_value(KernelKind::Epanechnikov, 0.5) == doctest::Approx(0.5625));
    CHECK(kernel_value(KernelKind::Epanechnikov, -0.5) == doctest::Approx(0.5625));
    CHECK(kernel_value(KernelKind::Epanechnikov, 1.0) == 0.0);
    CHECK(kernel_value(KernelKind::Epanechnikov, 1.5) == 0.0);
    CHECK(kernel_value(KernelKind::Gaussian, 0.0) == doctest::Approx(1.0));
    CHECK(kernel_value(KernelKind::Gaussian, 1.0) == doctest::Approx(std::exp(-0.5)));
    CHECK(kernel_value(KernelKind::Gaussian, -2.0) == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("kernel counterfactual is the weight-normalized control average") {
    // bandwidth 0.1, treated at 0.50, controls at 0.50 (u=0, w=0.75) and
    // 0.55 (u=0.5, w=0.5625); third control out of reach
    const std::vector<double> cs = {0.50, 0.55, 0.90};
    const std::vector<double> co = {1.0, 0.0, 5.0};
    const auto cf = kernel_counterfactual(0.50, cs, co, KernelKind::Epanechnikov, 0.1);
    REQUIRE(cf.has_value());
    CHECK(*cf == doctest::Approx(0.75 / (0.75 + 0.5625)).epsilon(1e-12));

    const auto none = kernel_counterfactual(0.50, {0.70, 0.80}, {1.0, 0.0},
                                            KernelKind::Epanechnikov, 0.1);
    CHECK_FALSE(none.has_value());
}

TEST_CASE("nearest neighbour matching keeps every control tied at the k-th distance") {
    // dyadic scores so the distances are exact: 0.0625, 0.0625, 0.125,
    // 0.125, 0.25; with k=3 the cut is 0.125 and both controls at that
    // distance stay in
    const std::vector<double> cs = {0.5625, 0.4375, 0.625, 0.375, 0.75};
    const std::vector<double> co = {1.0, 1.0, 0.0, 1.0, 100.0};
    CHECK(nn_counterfactual(0.50, cs, co, 3) == doctest::Approx(3.0 / 4.0).epsilon(1e-12));
}

TEST_CASE("nearest neighbour with k=1 averages an exact tie on both sides") {
    const std::vector<double> cs = {0.25, 0.75, 0.875};
    const std::vector<double> co = {2.0, 4.0, -9.0};
    CHECK(nn_counterfactual(0.50, cs, co, 1) == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("radius matching includes a control at exactly the radius") {
    const std::vector<double> cs = {0.40, 0.58, 0.75};
    const std::vector<double> co = {1.0, 3.0, 50.0};
    const auto cf = radius_counterfactual(0.50, cs, co, 0.10);
    REQUIRE(cf.has_value());
    CHECK(*cf == doctest::Approx(2.0).epsilon(1e-12));

    CHECK_FALSE(radius_counterfactual(0.50, {0.75}, {1.0}, 0.10).has_value());
}

TEST_CASE("support interval trims treated units in both directions") {
    const std::vector<double> treated = {0.05, 0.20, 0.50, 0.80, 0.95};
    const std::vector<double> control = {0.10, 0.30, 0.60, 0.90};
    const auto iv = support_interval(treated, control);
    CHECK(iv.lo == doctest::Approx(0.10));
    CHECK(iv.hi == doctest::Approx(0.90));
    CHECK(iv.contains(0.10));
    CHECK(iv.contains(0.90));
    CHECK_FALSE(iv.contains(0.05));
    CHECK_FALSE(iv.contains(0.95));

    const auto mask = common_support_mask(treated, control);
    REQUIRE(mask.size() == treated.size());
    CHECK(mask == std::vector<bool>{false, true, true, true, false});
}

TEST_CASE("disjoint score ranges make the support interval empty") {
    CHECK_THROWS_WITH_AS(support_interval({0.8, 0.9}, {0.1, 0.2}),
                         doctest::Contains("score ranges do not overlap"), EstimationError);
}

TEST_CASE("percentile trimming narrows the interval") {
    std::vector<double> treated, control;
    for (int i = 0; i <= 100; ++i) {
        treated.push_back(0.20 + 0.006 * i);
        control.push_back(0.10 + 0.006 * i);
    }
    const auto plain = support_interval(treated, control);
    const auto trimmed = support_interval(treated, control, 0.05);
    CHECK(trimmed.lo > plain.lo);
    CHECK(trimmed.hi < plain.hi);
}

TEST_CASE("match spec validation and labels") {
    MatchSpec spec;
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.label() == "kernel(epanechnikov, h=0.06)");

    spec.algorithm = Algorithm::NearestNeighbour;
    CHECK(spec.label() == "nearest_neighbour(k=3)");
    spec.algorithm = Algorithm::Radius;
    CHECK(spec.label() == "radius(0.1)");

    MatchSpec bad;
    bad.bandwidth = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = MatchSpec{};
    bad.algorithm = Algorithm::NearestNeighbour;
    bad.k = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = MatchSpec{};
    bad.algorithm = Algorithm::Radius;
    bad.radius = -0.1;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = MatchSpec{};
    bad.support_trim_percentile = 0.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    CHECK(algorithm_from_string("kernel") == Algorithm::Kernel);
    CHECK(kernel_from_string("gaussian") == KernelKind::Gaussian);
    CHECK_THROWS_AS(algorithm_from_string("caliper"), ConfigError);
    CHECK_THROWS_AS(kernel_from_string("uniform"), ConfigError);
}

TEST_CASE("att reduces to the difference in means when every weight is flat") {
    // all scores identical: every control matches every treated unit with
    // equal weight under each algorithm
    const std::vector<double> ts = {0.5, 0.5, 0.5};
    const std::vector<double> to = {1.0, 0.0, 1.0};
    const std::vector<double> cs = {0.5, 0.5, 0.5, 0.5};
    const std::vector<double> co = {1.0, 0.0, 0.0, 0.0};
    const double expected = (2.0 / 3.0) - (1.0 / 4.0);
    for (auto alg : {Algorithm::Kernel, Algorithm::NearestNeighbour, Algorithm::Radius}) {
        MatchSpec spec;
        spec.algorithm = alg;
        spec.k = 4;
        const auto att = estimate_att(ts, to, cs, co, spec);
        CHECK(att.coeff == doctest::Approx(expected).epsilon(1e-12));
        CHECK(att.n_treated_on_support == 3);
        CHECK(att.n_treated_dropped == 0);
        CHECK(att.n_unmatched == 0);
        CHECK(att.n_controls == 4);
        CHECK(att.n_used() == 3);
        CHECK(att.pct() == doctest::Approx(expected * 100.0));
        CHECK_FALSE(att.se.has_value());
        CHECK(att.stars.empty());
    }
}

TEST_CASE("att bookkeeping counts trimmed and unmatched treated units") {
    // treated at 0.05 falls below the control minimum; treated at 0.30 is on
    // support but finds no control within the tiny bandwidth
    const std::vector<double> ts = {0.05, 0.30, 0.50};
    const std::vector<double> to = {9.0, 9.0, 1.0};
    const std::vector<double> cs = {0.10, 0.50, 0.55};
    const std::vector<double> co = {7.0, 0.5, 3.0};
    MatchSpec spec;
    spec.bandwidth = 0.01;
    const auto att = estimate_att(ts, to, cs, co, spec);
    CHECK(att.n_treated_dropped == 1);
    CHECK(att.n_treated_on_support == 2);
    CHECK(att.n_unmatched == 1);
    CHECK(att.n_used() == 1);
    CHECK(att.coeff == doctest::Approx(1.0 - 0.5).epsilon(1e-12));

    spec.common_support = false;
    spec.bandwidth = 1.0;
    const auto keep = estimate_att(ts, to, cs, co, spec);
    CHECK(keep.n_treated_dropped == 0);
    CHECK(keep.n_treated_on_support == 3);
}

TEST_CASE("an estimate with nothing usable is an error, not a number") {
    MatchSpec spec;
    spec.bandwidth = 0.001;
    CHECK_THROWS_WITH_AS(
        estimate_att({0.3}, {1.0}, {0.1, 0.6}, {0.0, 0.0}, spec),
        doctest::Contains("no treated observations remain on common support with a match"),
        EstimationError);
    CHECK_THROWS_AS(estimate_att({}, {}, {0.1}, {0.0}, spec), EstimationError);
    CHECK_THROWS_AS(estimate_att({0.3}, {1.0}, {}, {}, spec), EstimationError);
}

TEST_CASE("match_and_average applies one weight set to every control series") {
    const std::vector<double> ts = {0.50};
    const std::vector<double> cs = {0.50, 0.55};
    const std::vector<std::vector<double>> series = {{1.0, 0.0}, {10.0, 20.0}};
    MatchSpec spec;
    spec.bandwidth = 0.1;
    const auto out = match_and_average(ts, cs, series, spec);
    REQUIRE(out.used.size() == 1);
    REQUIRE(out.counterfactuals.size() == 2);
    const double w0 = 0.75 / (0.75 + 0.5625);
    CHECK(out.counterfactuals[0][0] == doctest::Approx(w0).epsilon(1e-12));
    CHECK(out.counterfactuals[1][0] == doctest::Approx(10.0 * w0 + 20.0 * (1 - w0)).epsilon(1e-12));
    REQUIRE(out.control_weight_total.size() == 2);
    CHECK(out.control_weight_total[0] + out.control_weight_total[1] ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("estimator agrees with an independent re-derivation on random pools") {
    auto rng = make_rng(20260816, 3);
    int compared = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int nt = 3 + int(uniform_below(rng, 10));
        const int nc = 4 + int(uniform_below(rng, 12));
        std::vector<double> ts, to, cs, co;
        // scores on a coarse grid so exact ties genuinely occur
        for (int i = 0; i < nt; ++i) {
            ts.push_back(0.05 + 0.001 * double(uniform_below(rng, 900)));
            to.push_back(uniform01(rng) < 0.7 ? 1.0 : 0.0);
        }
        for (int i = 0; i < nc; ++i) {
            cs.push_back(0.05 + 0.001 * double(uniform_below(rng, 900)));
            co.push_back(uniform01(rng) < 0.5 ? 1.0 : 0.0);
        }
        MatchSpec spec;
        switch (trial % 3) {
            case 0:
                spec.algorithm = Algorithm::Kernel;
                spec.kernel_kind = trial % 2 ? KernelKind::Gaussian : KernelKind::Epanechnikov;
                spec.bandwidth = 0.02 + 0.02 * double(trial % 5);
                break;
            case 1:
                spec.algorithm = Algorithm::NearestNeighbour;
                spec.k = 1 + trial % 4;
                break;
            default:
                spec.algorithm = Algorithm::Radius;
                spec.radius = 0.03 + 0.03 * double(trial % 4);
                break;
        }
        if (trial % 7 == 0) spec.support_trim_percentile = 0.05;

        bool fast_threw = false;
        bool slow_threw = false;
        double fast = 0.0;
        double slow = 0.0;
        try {
            fast = estimate_att(ts, to, cs, co, spec).coeff;
        } catch (const EstimationError&) {
            fast_threw = true;
        }
        try {
            slow = synthetic::brute_force_att(ts, to, cs, co, spec);
        } catch (const EstimationError&) {
            slow_threw = true;
        }
        REQUIRE(fast_threw == slow_threw);
        if (!fast_threw) {
            CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
            ++compared;
        }
    }
    CHECK(compared > 30);
}
