#include <doctest.h>

#include <cmath>
#include <nlohmann/json.hpp>
#include <numeric>

#include "policymix/error.hpp"
#include "policymix/propensity.hpp"
#include "policymix/rng.hpp"
#include "test_support.hpp"

using namespace policymix;
using namespace policymix::propensity;
using lattice::TreatmentCell;
using testsup::base_record;

namespace {

// [1, x] design with a single binary regressor.
DesignMatrix binary_x_design(const std::vector<int>& x) {
    DesignMatrix d;
    d.column_names = {"intercept", "x"};
    d.X.resize(Eigen::Index(x.size()), 2);
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        d.X(i, 0) = 1.0;
        d.X(i, 1) = double(x[size_t(i)]);
    }
    return d;
}

DesignMatrix random_design(int n, std::uint64_t seed) {
    auto rng = make_rng(seed, 0);
    DesignMatrix d;
    d.column_names = {"intercept", "a", "b", "c"};
    d.X.resize(n, 4);
    for (int i = 0; i < n; ++i) {
        d.X(i, 0) = 1.0;
        d.X(i, 1) = uniform01(rng) * 4.0 - 2.0;
        d.X(i, 2) = uniform01(rng) < 0.4 ? 1.0 : 0.0;
        d.X(i, 3) = uniform01(rng) * 10.0;
    }
    return d;
}

std::vector<int> simulate_binary(const DesignMatrix& d, const Eigen::VectorXd& beta,
                                 std::uint64_t seed) {
    auto rng = make_rng(seed, 1);
    std::vector<int> y(size_t(d.rows()));
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        const double eta = d.X.row(i).dot(beta);
        const double p = 1.0 / (1.0 + std::exp(-eta));
        y[size_t(i)] = uniform01(rng) < p ? 1 : 0;
    }
    return y;
}

}  // namespace

TEST_CASE("design matrix lays out the sixteen columns with northeast as reference") {
    auto r = base_record();
    r.age = 40;
    r.farm_area = 12000.0;
    r.macro_region = MacroRegion::South;
    const auto d = build_design({r});
    REQUIRE(d.rows() == 1);
    REQUIRE(d.column_names.size() == std::size_t(kDesignColumns));
    CHECK(d.X(0, 0) == 1.0);
    CHECK(d.X(0, 1) == 40.0);
    CHECK(d.X(0, 3) == 12000.0);
    CHECK(d.X(0, 12) == 0.0);  // north
    CHECK(d.X(0, 15) == 1.0);  // south

    r.macro_region = MacroRegion::Northeast;
    const auto d2 = build_design({r});
    for (int j = 12; j < 16; ++j) CHECK(d2.X(0, j) == 0.0);
}

TEST_CASE("design matrix requires the imputable fields to be present") {
    auto r = base_record("h42");
    r.transport.reset();
    CHECK_THROWS_WITH_AS(build_design({r}),
                         doctest::Contains("record h42: missing covariate 'transport'"),
                         EstimationError);
}

TEST_CASE("binary logit recovers the closed-form two-by-two solution") {
    // x=0: 30 of 100 successes; x=1: 60 of 100
    std::vector<int> x, y;
    for (int i = 0; i < 100; ++i) {
        x.push_back(0);
        y.push_back(i < 30 ? 1 : 0);
    }
    for (int i = 0; i < 100; ++i) {
        x.push_back(1);
        y.push_back(i < 60 ? 1 : 0);
    }
    const auto d = binary_x_design(x);
    const auto model = fit_binary_logit(d, y);
    REQUIRE(model.converged);
    const double b0 = std::log(30.0 / 70.0);
    const double b1 = std::log(60.0 / 40.0) - b0;
    CHECK(model.coefficients(0, 0) == doctest::Approx(b0).epsilon(1e-8));
    CHECK(model.coefficients(1, 0) == doctest::Approx(b1).epsilon(1e-8));
    CHECK(model.scores(0, 0) == doctest::Approx(0.30).epsilon(1e-8));
    CHECK(model.scores(150, 0) == doctest::Approx(0.60).epsilon(1e-8));
}

TEST_CASE("fitted binary coefficients zero the score vector") {
    const auto d = random_design(400, 99);
    Eigen::VectorXd beta(4);
    beta << -0.3, 0.8, -0.5, 0.1;
    const auto y = simulate_binary(d, beta, 99);
    const auto model = fit_binary_logit(d, y);
    REQUIRE(model.converged);
    const Eigen::VectorXd score = binary_score(d, y, model.coefficients.col(0));
    CHECK(score.lpNorm<Eigen::Infinity>() < 1e-5);

    // with an intercept, mean fitted probability equals the sample share
    const double share = std::accumulate(y.begin(), y.end(), 0.0) / double(y.size());
    CHECK(model.scores.col(0).mean() == doctest::Approx(share).epsilon(1e-8));

    // reported log likelihood matches an independent evaluation and beats zero
    const double ll = binary_log_likelihood(d, y, model.coefficients.col(0));
    CHECK(model.log_likelihood == doctest::Approx(ll).epsilon(1e-10));
    CHECK(ll > binary_log_likelihood(d, y, Eigen::VectorXd::Zero(4)));
}

TEST_CASE("binary fit is invariant to affine covariate changes") {
    const auto d = random_design(300, 123);
    Eigen::VectorXd beta(4);
    beta << 0.2, -0.6, 0.9, -0.05;
    const auto y = simulate_binary(d, beta, 123);
    const auto base = fit_binary_logit(d, y);

    DesignMatrix shifted = d;
    shifted.X.col(1) = (d.X.col(1).array() - 5.0) * 1000.0;
    shifted.X.col(3) = d.X.col(3).array() * 0.001 + 2.0;
    const auto scaled = fit_binary_logit(shifted, y);
    REQUIRE(scaled.converged);
    for (Eigen::Index i = 0; i < base.scores.rows(); ++i) {
        CHECK(base.scores(i, 0) == doctest::Approx(scaled.scores(i, 0)).epsilon(1e-6));
    }
}

TEST_CASE("binary fit rejects degenerate inputs") {
    const auto d = binary_x_design({0, 1, 0, 1});
    CHECK_THROWS_WITH_AS(fit_binary_logit(d, {1, 1, 1, 1}), doctest::Contains("single value"),
                         EstimationError);
    CHECK_THROWS_WITH_AS(fit_binary_logit(d, {0, 1, 2, 0}), doctest::Contains("0 or 1"),
                         EstimationError);
    CHECK_THROWS_AS(fit_binary_logit(d, {0, 1}), EstimationError);  // length mismatch

    DesignMatrix collinear;
    collinear.column_names = {"intercept", "x", "two_x"};
    collinear.X.resize(6, 3);
    for (int i = 0; i < 6; ++i) {
        collinear.X(i, 0) = 1.0;
        collinear.X(i, 1) = double(i);
        collinear.X(i, 2) = 2.0 * double(i);
    }
    CHECK_THROWS_WITH_AS(fit_binary_logit(collinear, {0, 1, 0, 1, 0, 1}),
                         doctest::Contains("rank deficient"), EstimationError);
}

TEST_CASE("perfectly separated data is reported, not fitted") {
    DesignMatrix d;
    d.column_names = {"intercept", "x"};
    d.X.resize(40, 2);
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
        d.X(i, 0) = 1.0;
        d.X(i, 1) = double(i) / 10.0 - 2.0;
        y.push_back(d.X(i, 1) > 0 ? 1 : 0);
    }
    CHECK_THROWS_WITH_AS(fit_binary_logit(d, y), doctest::Contains("separation"),
                         EstimationError);
}

TEST_CASE("multinomial logit recovers closed-form cell shares") {
    // x=0: 50/25/25 across classes; x=1: 30/45/25
    std::vector<int> x;
    std::vector<TreatmentCell> cells;
    auto add = [&](int xv, TreatmentCell cell, int count) {
        for (int i = 0; i < count; ++i) {
            x.push_back(xv);
            cells.push_back(cell);
        }
    };
    add(0, TreatmentCell::NoPolicy, 50);
    add(0, TreatmentCell::PronafOnly, 25);
    add(0, TreatmentCell::AterOnly, 25);
    add(1, TreatmentCell::NoPolicy, 30);
    add(1, TreatmentCell::PronafOnly, 45);
    add(1, TreatmentCell::AterOnly, 25);

    const auto d = binary_x_design(x);
    const auto model = fit_multinomial_logit(d, cells);
    REQUIRE(model.converged);
    REQUIRE(model.classes.size() == 3);
    CHECK(model.classes[0] == TreatmentCell::NoPolicy);

    // saturated model: fitted probabilities equal empirical shares
    CHECK(model.scores(0, 0) == doctest::Approx(0.50).epsilon(1e-7));
    CHECK(model.scores(0, 1) == doctest::Approx(0.25).epsilon(1e-7));
    CHECK(model.scores(0, 2) == doctest::Approx(0.25).epsilon(1e-7));
    const Eigen::Index at_x1 = 120;
    CHECK(model.scores(at_x1, 0) == doctest::Approx(0.30).epsilon(1e-7));
    CHECK(model.scores(at_x1, 1) == doctest::Approx(0.45).epsilon(1e-7));
    CHECK(model.scores(at_x1, 2) == doctest::Approx(0.25).epsilon(1e-7));

    // coefficients match the log odds against the baseline cell
    const auto idx = model.class_index(TreatmentCell::PronafOnly);
    const double b0 = std::log(25.0 / 50.0);
    const double b1 = std::log(45.0 / 30.0) - b0;
    CHECK(model.coefficients(0, idx - 1) == doctest::Approx(b0).epsilon(1e-6));
    CHECK(model.coefficients(1, idx - 1) == doctest::Approx(b1).epsilon(1e-6));

    for (Eigen::Index i = 0; i < model.scores.rows(); ++i) {
        CHECK(model.scores.row(i).sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("two-class multinomial equals the binary logit") {
    const auto d = random_design(500, 7);
    Eigen::VectorXd beta(4);
    beta << -0.2, 0.7, -0.4, 0.08;
    const auto y = simulate_binary(d, beta, 7);
    std::vector<TreatmentCell> cells;
    for (int v : y) {
        cells.push_back(v == 1 ? TreatmentCell::PronafOnly : TreatmentCell::NoPolicy);
    }
    const auto binary = fit_binary_logit(d, y);
    const auto multi = fit_multinomial_logit(d, cells);
    REQUIRE(multi.converged);
    REQUIRE(multi.classes.size() == 2);
    const auto idx = multi.class_index(TreatmentCell::PronafOnly);
    for (Eigen::Index j = 0; j < 4; ++j) {
        CHECK(multi.coefficients(j, idx - 1) ==
              doctest::Approx(binary.coefficients(j, 0)).epsilon(1e-6));
    }
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        CHECK(multi.scores(i, idx) == doctest::Approx(binary.scores(i, 0)).epsilon(1e-6));
    }
}

TEST_CASE("multinomial fit requires the baseline cell and two observations per class") {
    const auto d = binary_x_design({0, 1, 0, 1, 0, 1});
    std::vector<TreatmentCell> no_baseline = {
        TreatmentCell::PronafOnly, TreatmentCell::PronafOnly, TreatmentCell::PronafOnly,
        TreatmentCell::AterOnly,   TreatmentCell::AterOnly,   TreatmentCell::AterOnly};
    CHECK_THROWS_WITH_AS(fit_multinomial_logit(d, no_baseline), doctest::Contains("no_policy"),
                         EstimationError);

    std::vector<TreatmentCell> thin = {TreatmentCell::NoPolicy,   TreatmentCell::NoPolicy,
                                       TreatmentCell::NoPolicy,   TreatmentCell::NoPolicy,
                                       TreatmentCell::PronafOnly, TreatmentCell::NoPolicy};
    CHECK_THROWS_WITH_AS(fit_multinomial_logit(d, thin), doctest::Contains("pronaf_only"),
                         EstimationError);
}

TEST_CASE("generalized scores address classes by cell") {
    const auto d = binary_x_design({0, 0, 1, 1, 0, 1, 0, 1});
    std::vector<TreatmentCell> cells = {TreatmentCell::NoPolicy,   TreatmentCell::NoPolicy,
                                        TreatmentCell::PronafOnly, TreatmentCell::PronafOnly,
                                        TreatmentCell::AterOnly,   TreatmentCell::AterOnly,
                                        TreatmentCell::NoPolicy,   TreatmentCell::NoPolicy};
    const auto model = fit_multinomial_logit(d, cells);
    for (Eigen::Index i = 0; i < d.rows(); ++i) {
        double total = 0.0;
        for (const auto cell : model.classes) total += generalized_score(model, i, cell);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
    }
    CHECK_THROWS_AS(generalized_score(model, 0, TreatmentCell::AllThree), EstimationError);

    const auto binary = fit_binary_logit(d, {0, 0, 1, 1, 0, 1, 0, 1});
    CHECK_THROWS_AS(generalized_score(binary, 0, TreatmentCell::PronafOnly), EstimationError);
}

TEST_CASE("prediction on a raw covariate row matches the training scores") {
    const auto d = random_design(200, 5);
    Eigen::VectorXd beta(4);
    beta << 0.1, 0.5, -0.7, 0.02;
    const auto y = simulate_binary(d, beta, 5);
    const auto model = fit_binary_logit(d, y);
    const auto probs = predict_probabilities(model, d.X.row(17));
    REQUIRE(probs.size() == 2);
    CHECK(probs[1] == doctest::Approx(model.scores(17, 0)).epsilon(1e-10));
    CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("model manifest reports coefficients by column name") {
    const auto d = binary_x_design({0, 1, 0, 1, 0, 1, 1, 0});
    const auto model = fit_binary_logit(d, {0, 1, 1, 1, 0, 0, 1, 0});
    const auto j = nlohmann::json::parse(model_manifest(model));
    CHECK(j.at("model") == "binary_logit");
    CHECK(j.at("converged") == true);
    CHECK(j.at("coefficients").contains("x"));
    CHECK(j.at("coefficients").contains("intercept"));
    CHECK(j.at("iterations").get<int>() > 0);
}
