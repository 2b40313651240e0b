#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "policymix/matching.hpp"
#include "policymix/record.hpp"

namespace policymix::diagnostics {

enum class Grouping { PolicyTotal, Cell };

// Group summary in the survey-table layout: one (mean, sd) column pair per
// group. Policy-total groups overlap by design: a household receiving two
// policies is counted in both columns.
struct SummaryColumn {
    std::string group;
    long count = 0;
    std::vector<double> mean;  // NaN when the group is empty
    std::vector<double> sd;
};

struct GroupSummary {
    std::vector<std::string> covariates;  // row labels; region rows are in %
    std::vector<SummaryColumn> columns;
};

GroupSummary group_summary(const std::vector<HouseholdRecord>& records, Grouping grouping);

// Commercialisation shares: baseline, the ten policy rows, and the total,
// each with the before-matching difference against its reference group.
struct ShareRow {
    std::string label;
    int contrast_id = 0;  // 0 for the baseline and total rows
    long n = 0;
    long sellers = 0;
    double share_pct = 0.0;
    std::optional<double> diff_pct;
    std::optional<double> z;
    std::optional<double> p_value;
    std::string stars;
};

std::vector<ShareRow> commercialisation_table(const std::vector<HouseholdRecord>& records);

struct BalanceRow {
    std::string covariate;
    double mean_treated = 0.0;
    double mean_control = 0.0;
    double std_diff_before = 0.0;
    double std_diff_after = 0.0;
    bool degenerate = false;  // zero pooled variance with unequal means
};

struct BalanceTable {
    std::vector<BalanceRow> rows;
    double max_abs_std_diff_after = 0.0;
    int n_matched_treated = 0;
};

// Standardized mean differences before and after matching. The denominator
// sqrt((v_T + v_C)/2) uses the unmatched groups' variances in both columns;
// after-matching control means weight each control by its total matching
// weight, while treated means stay the raw ones.
BalanceTable balance_table(const Eigen::MatrixXd& treated_covariates,
                           const Eigen::MatrixXd& control_covariates,
                           const std::vector<std::string>& covariate_names,
                           const std::vector<double>& treated_scores,
                           const std::vector<double>& control_scores,
                           const matching::MatchSpec& spec);

BalanceTable balance_table(const std::vector<HouseholdRecord>& treated,
                           const std::vector<HouseholdRecord>& control,
                           const std::vector<double>& treated_scores,
                           const std::vector<double>& control_scores,
                           const matching::MatchSpec& spec);

}  // namespace policymix::diagnostics
