#include "policymix/propensity.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "policymix/error.hpp"

namespace policymix::propensity {

namespace {

double sigmoid(double eta) {
    if (eta >= 0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

// log(1 + exp(eta)) without overflow
double log1pexp(double eta) {
    if (eta > 0) return eta + std::log1p(std::exp(-eta));
    return std::log1p(std::exp(eta));
}

struct Standardizer {
    Eigen::VectorXd mean;   // per column, intercept entries are 0/1
    Eigen::VectorXd scale;

    static Standardizer fit(const Eigen::MatrixXd& X) {
        const Eigen::Index k = X.cols();
        Standardizer s;
        s.mean = Eigen::VectorXd::Zero(k);
        s.scale = Eigen::VectorXd::Ones(k);
        for (Eigen::Index j = 1; j < k; ++j) {
            const double m = X.col(j).mean();
            const double var = (X.col(j).array() - m).square().sum() / double(X.rows());
            const double sd = std::sqrt(var);
            s.mean(j) = m;
            if (sd > 0) s.scale(j) = sd;
        }
        return s;
    }

    Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const {
        Eigen::MatrixXd Z = X;
        for (Eigen::Index j = 1; j < X.cols(); ++j) {
            Z.col(j) = (X.col(j).array() - mean(j)) / scale(j);
        }
        return Z;
    }

    // beta on the standardized scale -> original scale
    Eigen::VectorXd unapply(const Eigen::VectorXd& b) const {
        Eigen::VectorXd out = b;
        for (Eigen::Index j = 1; j < b.size(); ++j) {
            out(j) = b(j) / scale(j);
            out(0) -= b(j) * mean(j) / scale(j);
        }
        return out;
    }
};

void check_design_rank(const Eigen::MatrixXd& Z) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Z);
    if (qr.rank() < Z.cols()) {
        throw EstimationError("singular weighted normal equations: design matrix is rank deficient");
    }
}

double missing_value_error(const HouseholdRecord& r, const char* field) {
    throw EstimationError("record " + r.id + ": missing covariate '" + std::string(field) + "'");
}

double req(const std::optional<int>& v, const HouseholdRecord& r, const char* field) {
    return v ? double(*v) : missing_value_error(r, field);
}

double req(const std::optional<double>& v, const HouseholdRecord& r, const char* field) {
    return v ? *v : missing_value_error(r, field);
}

}  // namespace

const std::vector<std::string>& design_column_names() {
    static const std::vector<std::string> names = {
        "intercept", "age", "gender_man", "farm_area", "race_white", "education",
        "household_size", "mobile_phone", "internet", "transport", "farm_income",
        "other_income", "region_north", "region_central_west", "region_southeast",
        "region_south"};
    return names;
}

DesignMatrix build_design(const std::vector<HouseholdRecord>& records) {
    DesignMatrix d;
    d.column_names = design_column_names();
    d.X.resize(Eigen::Index(records.size()), kDesignColumns);
    for (Eigen::Index i = 0; i < d.X.rows(); ++i) {
        const HouseholdRecord& r = records[size_t(i)];
        d.X(i, 0) = 1.0;
        d.X(i, 1) = double(r.age);
        d.X(i, 2) = double(r.gender_man);
        d.X(i, 3) = r.farm_area;
        d.X(i, 4) = double(r.race_white);
        d.X(i, 5) = double(r.education);
        d.X(i, 6) = double(r.household_size);
        d.X(i, 7) = req(r.mobile_phone, r, "mobile_phone");
        d.X(i, 8) = req(r.internet, r, "internet");
        d.X(i, 9) = req(r.transport, r, "transport");
        d.X(i, 10) = req(r.farm_income, r, "farm_income");
        d.X(i, 11) = req(r.other_income, r, "other_income");
        d.X(i, 12) = r.macro_region == MacroRegion::North ? 1.0 : 0.0;
        d.X(i, 13) = r.macro_region == MacroRegion::CentralWest ? 1.0 : 0.0;
        d.X(i, 14) = r.macro_region == MacroRegion::Southeast ? 1.0 : 0.0;
        d.X(i, 15) = r.macro_region == MacroRegion::South ? 1.0 : 0.0;
    }
    return d;
}

int PropensityModel::class_index(TreatmentCell c) const {
    for (size_t i = 0; i < classes.size(); ++i) {
        if (classes[i] == c) return int(i);
    }
    return -1;
}

double binary_log_likelihood(const DesignMatrix& design, const std::vector<int>& treatment,
                             const Eigen::VectorXd& coefficients) {
    const Eigen::VectorXd eta = design.X * coefficients;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        ll += treatment[size_t(i)] * eta(i) - log1pexp(eta(i));
    }
    return ll;
}

Eigen::VectorXd binary_score(const DesignMatrix& design, const std::vector<int>& treatment,
                             const Eigen::VectorXd& coefficients) {
    const Eigen::VectorXd eta = design.X * coefficients;
    Eigen::VectorXd resid(eta.size());
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
        resid(i) = treatment[size_t(i)] - sigmoid(eta(i));
    }
    return design.X.transpose() * resid;
}

PropensityModel fit_binary_logit(const DesignMatrix& design, const std::vector<int>& treatment,
                                 const FitOptions& options) {
    const Eigen::Index n = design.X.rows();
    const Eigen::Index k = design.X.cols();
    if (Eigen::Index(treatment.size()) != n) {
        throw EstimationError("treatment vector length does not match the design matrix");
    }
    int ones = 0;
    for (int t : treatment) {
        if (t != 0 && t != 1) throw EstimationError("treatment indicator must be 0 or 1");
        ones += t;
    }
    if (ones == 0 || ones == int(n)) {
        throw EstimationError("treatment indicator takes a single value; the logit model is undefined");
    }

    const Standardizer std_ = Standardizer::fit(design.X);
    const Eigen::MatrixXd Z = std_.apply(design.X);
    check_design_rank(Z);

    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = treatment[size_t(i)];

    auto loglik = [&](const Eigen::VectorXd& b) {
        const Eigen::VectorXd eta = Z * b;
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) ll += y(i) * eta(i) - log1pexp(eta(i));
        return ll;
    };

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
    double ll = loglik(beta);
    bool converged = false;
    int iterations = 0;

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        iterations = iter;
        const Eigen::VectorXd eta = Z * beta;
        Eigen::VectorXd p(n), w(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            p(i) = sigmoid(eta(i));
            w(i) = p(i) * (1.0 - p(i));
        }
        const Eigen::VectorXd score = Z.transpose() * (y - p);
        if (score.lpNorm<Eigen::Infinity>() < options.tolerance) {
            converged = true;
            break;
        }
        const Eigen::MatrixXd H = Z.transpose() * w.asDiagonal() * Z;
        Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
        if (!lu.isInvertible()) {
            if (iter == 1) {
                throw EstimationError("singular weighted normal equations in the logit fit");
            }
            throw EstimationError(
                "perfect separation detected: weighted normal equations degenerated");
        }
        const Eigen::VectorXd delta = lu.solve(score);

        double step = 1.0;
        Eigen::VectorXd candidate = beta + delta;
        double cand_ll = loglik(candidate);
        while (cand_ll < ll && step > 1e-10) {
            step *= 0.5;
            candidate = beta + step * delta;
            cand_ll = loglik(candidate);
        }
        const double max_change = (candidate - beta).lpNorm<Eigen::Infinity>();
        beta = candidate;
        ll = cand_ll;
        if (beta.lpNorm<Eigen::Infinity>() > options.separation_bound) {
            throw EstimationError(
                "perfect separation detected: standardized coefficient exceeded " +
                std::to_string(options.separation_bound));
        }
        if (max_change < options.tolerance) {
            converged = true;
            break;
        }
    }

    PropensityModel model;
    model.kind = ModelKind::Binary;
    model.column_names = design.column_names;
    model.coefficients = std_.unapply(beta);
    model.log_likelihood = ll;
    model.converged = converged;
    model.iterations = iterations;
    model.scores.resize(n, 1);
    const Eigen::VectorXd eta = Z * beta;
    for (Eigen::Index i = 0; i < n; ++i) model.scores(i, 0) = sigmoid(eta(i));
    return model;
}

PropensityModel fit_multinomial_logit(const DesignMatrix& design,
                                      const std::vector<TreatmentCell>& cells,
                                      const FitOptions& options) {
    const Eigen::Index n = design.X.rows();
    const Eigen::Index k = design.X.cols();
    if (Eigen::Index(cells.size()) != n) {
        throw EstimationError("cell vector length does not match the design matrix");
    }

    std::array<int, lattice::kNumCells> counts{};
    for (TreatmentCell c : cells) counts[size_t(c)] += 1;
    if (counts[size_t(TreatmentCell::NoPolicy)] == 0) {
        throw EstimationError("baseline class 'no_policy' has no observations");
    }
    std::vector<TreatmentCell> classes;
    classes.push_back(TreatmentCell::NoPolicy);
    for (size_t c = 0; c < lattice::kNumCells; ++c) {
        if (TreatmentCell(c) == TreatmentCell::NoPolicy || counts[c] == 0) continue;
        classes.push_back(TreatmentCell(c));
    }
    if (classes.size() < 2) {
        throw EstimationError("multinomial fit needs at least two treatment classes");
    }
    for (TreatmentCell c : classes) {
        if (counts[size_t(c)] < 2) {
            throw EstimationError("class '" + std::string(lattice::to_string(c)) +
                                  "' has fewer than 2 observations");
        }
    }

    const int C = int(classes.size());
    const int m = C - 1;  // free classes
    std::vector<int> class_of(static_cast<size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        int idx = -1;
        for (int c = 0; c < C; ++c) {
            if (classes[size_t(c)] == cells[size_t(i)]) idx = c;
        }
        class_of[size_t(i)] = idx;
    }

    const Standardizer std_ = Standardizer::fit(design.X);
    const Eigen::MatrixXd Z = std_.apply(design.X);
    check_design_rank(Z);

    // B holds one coefficient column per non-baseline class.
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(k, m);

    auto probabilities = [&](const Eigen::MatrixXd& coef) {
        const Eigen::MatrixXd eta = Z * coef;  // n x m
        Eigen::MatrixXd P(n, C);
        for (Eigen::Index i = 0; i < n; ++i) {
            double mx = 0.0;  // baseline eta is 0
            for (int c = 0; c < m; ++c) mx = std::max(mx, eta(i, c));
            double denom = std::exp(-mx);
            for (int c = 0; c < m; ++c) denom += std::exp(eta(i, c) - mx);
            P(i, 0) = std::exp(-mx) / denom;
            for (int c = 0; c < m; ++c) P(i, c + 1) = std::exp(eta(i, c) - mx) / denom;
        }
        return P;
    };

    auto loglik = [&](const Eigen::MatrixXd& coef) {
        const Eigen::MatrixXd eta = Z * coef;
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double mx = 0.0;
            for (int c = 0; c < m; ++c) mx = std::max(mx, eta(i, c));
            double denom = std::exp(-mx);
            for (int c = 0; c < m; ++c) denom += std::exp(eta(i, c) - mx);
            const int cls = class_of[size_t(i)];
            const double eta_own = cls == 0 ? 0.0 : eta(i, cls - 1);
            ll += eta_own - mx - std::log(denom);
        }
        return ll;
    };

    double ll = loglik(B);
    bool converged = false;
    int iterations = 0;
    const Eigen::Index dim = Eigen::Index(k) * m;

    for (int iter = 1; iter <= options.max_iterations; ++iter) {
        iterations = iter;
        const Eigen::MatrixXd P = probabilities(B);

        Eigen::VectorXd score(dim);
        for (int c = 0; c < m; ++c) {
            Eigen::VectorXd resid(n);
            for (Eigen::Index i = 0; i < n; ++i) {
                resid(i) = (class_of[size_t(i)] == c + 1 ? 1.0 : 0.0) - P(i, c + 1);
            }
            score.segment(Eigen::Index(c) * k, k) = Z.transpose() * resid;
        }
        if (score.lpNorm<Eigen::Infinity>() < options.tolerance) {
            converged = true;
            break;
        }

        Eigen::MatrixXd H(dim, dim);
        for (int c = 0; c < m; ++c) {
            for (int d = c; d < m; ++d) {
                Eigen::VectorXd w(n);
                for (Eigen::Index i = 0; i < n; ++i) {
                    const double pc = P(i, c + 1);
                    const double pd = P(i, d + 1);
                    w(i) = c == d ? pc * (1.0 - pc) : -pc * pd;
                }
                const Eigen::MatrixXd block = Z.transpose() * w.asDiagonal() * Z;
                H.block(Eigen::Index(c) * k, Eigen::Index(d) * k, k, k) = block;
                if (d != c) {
                    H.block(Eigen::Index(d) * k, Eigen::Index(c) * k, k, k) = block.transpose();
                }
            }
        }
        Eigen::FullPivLU<Eigen::MatrixXd> lu(H);
        if (!lu.isInvertible()) {
            if (iter == 1) {
                throw EstimationError("singular weighted normal equations in the multinomial fit");
            }
            throw EstimationError(
                "perfect separation detected: weighted normal equations degenerated");
        }
        const Eigen::VectorXd delta = lu.solve(score);

        double step = 1.0;
        Eigen::MatrixXd candidate = B;
        auto apply_step = [&](double s) {
            candidate = B;
            for (int c = 0; c < m; ++c) {
                candidate.col(c) += s * delta.segment(Eigen::Index(c) * k, k);
            }
        };
        apply_step(step);
        double cand_ll = loglik(candidate);
        while (cand_ll < ll && step > 1e-10) {
            step *= 0.5;
            apply_step(step);
            cand_ll = loglik(candidate);
        }
        const double max_change = (candidate - B).lpNorm<Eigen::Infinity>();
        B = candidate;
        ll = cand_ll;
        if (B.lpNorm<Eigen::Infinity>() > options.separation_bound) {
            throw EstimationError(
                "perfect separation detected: standardized coefficient exceeded " +
                std::to_string(options.separation_bound));
        }
        if (max_change < options.tolerance) {
            converged = true;
            break;
        }
    }

    PropensityModel model;
    model.kind = ModelKind::Multinomial;
    model.column_names = design.column_names;
    model.classes = classes;
    model.coefficients.resize(k, m);
    for (int c = 0; c < m; ++c) model.coefficients.col(c) = std_.unapply(B.col(c));
    model.log_likelihood = ll;
    model.converged = converged;
    model.iterations = iterations;
    model.scores = probabilities(B);
    return model;
}

double generalized_score(const PropensityModel& model, Eigen::Index row,
                         TreatmentCell target_class) {
    if (row < 0 || row >= model.scores.rows()) {
        throw EstimationError("score row index out of range");
    }
    if (model.kind == ModelKind::Binary) {
        throw EstimationError("generalized score requested from a binary model");
    }
    const int idx = model.class_index(target_class);
    if (idx < 0) {
        throw EstimationError("class '" + std::string(lattice::to_string(target_class)) +
                              "' is not covered by the fitted model");
    }
    return model.scores(row, idx);
}

Eigen::VectorXd predict_probabilities(const PropensityModel& model, const Eigen::RowVectorXd& x) {
    if (x.size() != model.coefficients.rows()) {
        throw EstimationError("covariate row length does not match the fitted model");
    }
    if (model.kind == ModelKind::Binary) {
        const double p = sigmoid((x * model.coefficients.col(0))(0));
        Eigen::VectorXd out(2);
        out << 1.0 - p, p;
        return out;
    }
    const int m = int(model.coefficients.cols());
    Eigen::VectorXd eta(m + 1);
    eta(0) = 0.0;
    for (int c = 0; c < m; ++c) eta(c + 1) = (x * model.coefficients.col(c))(0);
    const double mx = eta.maxCoeff();
    Eigen::VectorXd out = (eta.array() - mx).exp();
    out /= out.sum();
    return out;
}

std::string model_manifest(const PropensityModel& model) {
    nlohmann::json j;
    j["model"] = model.kind == ModelKind::Binary ? "binary_logit" : "multinomial_logit";
    j["converged"] = model.converged;
    j["iterations"] = model.iterations;
    j["log_likelihood"] = model.log_likelihood;
    if (model.kind == ModelKind::Binary) {
        nlohmann::json coef = nlohmann::json::object();
        for (Eigen::Index r = 0; r < model.coefficients.rows(); ++r) {
            coef[model.column_names[size_t(r)]] = model.coefficients(r, 0);
        }
        j["coefficients"] = coef;
    } else {
        nlohmann::json per_class = nlohmann::json::object();
        for (size_t c = 1; c < model.classes.size(); ++c) {
            nlohmann::json coef = nlohmann::json::object();
            for (Eigen::Index r = 0; r < model.coefficients.rows(); ++r) {
                coef[model.column_names[size_t(r)]] = model.coefficients(r, Eigen::Index(c) - 1);
            }
            per_class[std::string(lattice::to_string(model.classes[c]))] = coef;
        }
        j["baseline"] = std::string(lattice::to_string(model.classes[0]));
        j["coefficients"] = per_class;
    }
    return j.dump(2);
}

}  // namespace policymix::propensity
