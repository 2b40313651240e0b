#include "policymix/estimation.hpp"

#include "policymix/error.hpp"

namespace policymix::estimation {

Pool build_pool(const propensity::DesignMatrix& design, const std::vector<double>& outcomes,
                const std::vector<TreatmentCell>& cells, const Contrast& contrast) {
    const Eigen::Index n = design.X.rows();
    if (Eigen::Index(outcomes.size()) != n || Eigen::Index(cells.size()) != n) {
        throw EstimationError("design, outcome, and cell lengths do not agree");
    }

    std::vector<Eigen::Index> rows;
    int treated = 0;
    int control = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const TreatmentCell c = cells[size_t(i)];
        if (contrast.is_treated(c)) {
            treated += 1;
        } else if (contrast.is_control(c)) {
            control += 1;
        } else {
            continue;
        }
        rows.push_back(i);
    }
    if (treated == 0) {
        throw EstimationError("contrast '" + contrast.name + "' has no treated observations");
    }
    if (control == 0) {
        throw EstimationError("contrast '" + contrast.name + "' has no control observations");
    }

    Pool pool;
    pool.column_names = design.column_names;
    pool.X.resize(Eigen::Index(rows.size()), design.X.cols());
    pool.outcome.reserve(rows.size());
    pool.cell.reserve(rows.size());
    for (size_t r = 0; r < rows.size(); ++r) {
        pool.X.row(Eigen::Index(r)) = design.X.row(rows[r]);
        pool.outcome.push_back(outcomes[size_t(rows[r])]);
        pool.cell.push_back(cells[size_t(rows[r])]);
    }
    return pool;
}

ScoredContrast fit_contrast_scores(const Pool& pool, const Contrast& contrast,
                                   const propensity::FitOptions& options) {
    const Eigen::Index n = pool.size();
    propensity::DesignMatrix design;
    design.X = pool.X;
    design.column_names = pool.column_names;

    ScoredContrast result;
    std::vector<double> score(static_cast<size_t>(n));

    if (contrast.model_kind == lattice::ModelKind::Binary) {
        std::vector<int> t(static_cast<size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) {
            t[size_t(i)] = contrast.is_treated(pool.cell[size_t(i)]) ? 1 : 0;
        }
        result.model = propensity::fit_binary_logit(design, t, options);
        for (Eigen::Index i = 0; i < n; ++i) score[size_t(i)] = result.model.scores(i, 0);
    } else {
        result.model = propensity::fit_multinomial_logit(design, pool.cell, options);
        for (Eigen::Index i = 0; i < n; ++i) {
            double s = 0.0;
            for (size_t c = 0; c < result.model.classes.size(); ++c) {
                if (contrast.is_treated(result.model.classes[c])) {
                    s += result.model.scores(i, Eigen::Index(c));
                }
            }
            score[size_t(i)] = s;
        }
    }

    for (Eigen::Index i = 0; i < n; ++i) {
        const TreatmentCell c = pool.cell[size_t(i)];
        if (contrast.is_treated(c)) {
            result.treated_scores.push_back(score[size_t(i)]);
            result.treated_outcomes.push_back(pool.outcome[size_t(i)]);
        } else if (contrast.is_control(c)) {
            result.control_scores.push_back(score[size_t(i)]);
            result.control_outcomes.push_back(pool.outcome[size_t(i)]);
        }
    }
    if (result.treated_scores.empty() || result.control_scores.empty()) {
        throw EstimationError("contrast '" + contrast.name + "' lost a group during scoring");
    }
    return result;
}

matching::AttEstimate estimate_contrast_att(const Pool& pool, const Contrast& contrast,
                                            const matching::MatchSpec& spec,
                                            const propensity::FitOptions& options) {
    const ScoredContrast scored = fit_contrast_scores(pool, contrast, options);
    if (!scored.model.converged) {
        throw EstimationError("propensity model for contrast '" + contrast.name +
                              "' did not converge");
    }
    matching::AttEstimate est =
        matching::estimate_att(scored.treated_scores, scored.treated_outcomes,
                               scored.control_scores, scored.control_outcomes, spec);
    est.contrast_id = contrast.id;
    return est;
}

}  // namespace policymix::estimation
