#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "policymix/lattice.hpp"
#include "policymix/record.hpp"

namespace policymix::propensity {

using lattice::ModelKind;
using lattice::TreatmentCell;

inline constexpr int kDesignColumns = 16;

// Fixed column order: intercept, the eleven covariates, then four region
// indicators with Northeast as the reference level.
struct DesignMatrix {
    Eigen::MatrixXd X;  // n x 16
    std::vector<std::string> column_names;

    Eigen::Index rows() const { return X.rows(); }
};

const std::vector<std::string>& design_column_names();

DesignMatrix build_design(const std::vector<HouseholdRecord>& records);

struct FitOptions {
    double tolerance = 1e-8;       // max |coefficient change| and score norm
    int max_iterations = 100;
    double separation_bound = 30;  // on sd-standardized coefficients
};

struct PropensityModel {
    ModelKind kind = ModelKind::Binary;
    std::vector<std::string> column_names;
    // Multinomial class order; classes[0] is the baseline. Binary models
    // leave this empty.
    std::vector<TreatmentCell> classes;
    // One column per non-baseline class (binary: single column), on the
    // original covariate scale.
    Eigen::MatrixXd coefficients;
    double log_likelihood = 0.0;
    bool converged = false;
    int iterations = 0;
    // Fitted probabilities: binary n x 1 = P(t=1); multinomial n x C in
    // class order.
    Eigen::MatrixXd scores;

    int class_index(TreatmentCell c) const;  // -1 when absent
};

// Bernoulli MLE with logistic link via iteratively reweighted least squares.
PropensityModel fit_binary_logit(const DesignMatrix& design, const std::vector<int>& treatment,
                                 const FitOptions& options = {});

// Categorical MLE via Newton steps on the stacked score/Hessian; baseline
// class is NoPolicy. Covers exactly the classes present in `cells`.
PropensityModel fit_multinomial_logit(const DesignMatrix& design,
                                      const std::vector<TreatmentCell>& cells,
                                      const FitOptions& options = {});

// Fitted probability that record `row` receives `target_class`.
double generalized_score(const PropensityModel& model, Eigen::Index row,
                         TreatmentCell target_class);

// Probabilities for an arbitrary covariate row, recomputed from the
// coefficients (binary: returns {P(t=0), P(t=1)}).
Eigen::VectorXd predict_probabilities(const PropensityModel& model,
                                      const Eigen::RowVectorXd& x);

double binary_log_likelihood(const DesignMatrix& design, const std::vector<int>& treatment,
                             const Eigen::VectorXd& coefficients);
Eigen::VectorXd binary_score(const DesignMatrix& design, const std::vector<int>& treatment,
                             const Eigen::VectorXd& coefficients);

// Audit manifest: coefficients and the convergence report, as JSON text.
std::string model_manifest(const PropensityModel& model);

}  // namespace policymix::propensity
