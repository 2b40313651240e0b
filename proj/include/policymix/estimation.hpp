#pragma once

#include <Eigen/Dense>
#include <vector>

#include "policymix/lattice.hpp"
#include "policymix/matching.hpp"
#include "policymix/propensity.hpp"

namespace policymix::estimation {

using lattice::Contrast;
using lattice::TreatmentCell;

// One contrast's estimation sample: the treated and control rows pooled, in
// the original record order.
struct Pool {
    Eigen::MatrixXd X;
    std::vector<std::string> column_names;
    std::vector<double> outcome;
    std::vector<TreatmentCell> cell;

    Eigen::Index size() const { return X.rows(); }
};

Pool build_pool(const propensity::DesignMatrix& design, const std::vector<double>& outcomes,
                const std::vector<TreatmentCell>& cells, const Contrast& contrast);

// Propensity model fitted on the pool, with scores and outcomes split by
// group. Total contrasts use a binary model of membership in the treated
// set; exclusive contrasts use the multinomial model and score each record
// by its summed probability of the treated cells.
struct ScoredContrast {
    propensity::PropensityModel model;
    std::vector<double> treated_scores;
    std::vector<double> treated_outcomes;
    std::vector<double> control_scores;
    std::vector<double> control_outcomes;
};

ScoredContrast fit_contrast_scores(const Pool& pool, const Contrast& contrast,
                                   const propensity::FitOptions& options = {});

matching::AttEstimate estimate_contrast_att(const Pool& pool, const Contrast& contrast,
                                            const matching::MatchSpec& spec,
                                            const propensity::FitOptions& options = {});

}  // namespace policymix::estimation
