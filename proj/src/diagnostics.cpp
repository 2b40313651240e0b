#include "policymix/diagnostics.hpp"

#include <cmath>
#include <functional>
#include <limits>

#include "policymix/error.hpp"
#include "policymix/inference.hpp"
#include "policymix/lattice.hpp"
#include "policymix/propensity.hpp"

namespace policymix::diagnostics {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double require_int(const std::optional<int>& v, const HouseholdRecord& r, const char* field) {
    if (!v) {
        throw EstimationError("record " + r.id + ": missing '" + std::string(field) +
                              "' (imputation must run first)");
    }
    return double(*v);
}

double require_real(const std::optional<double>& v, const HouseholdRecord& r, const char* field) {
    if (!v) {
        throw EstimationError("record " + r.id + ": missing '" + std::string(field) +
                              "' (imputation must run first)");
    }
    return *v;
}

struct CovariateRow {
    std::string label;
    std::function<double(const HouseholdRecord&)> value;
};

const std::vector<CovariateRow>& summary_rows() {
    static const std::vector<CovariateRow> rows = {
        {"age", [](const HouseholdRecord& r) { return double(r.age); }},
        {"gender_man", [](const HouseholdRecord& r) { return double(r.gender_man); }},
        {"farm_area", [](const HouseholdRecord& r) { return r.farm_area; }},
        {"race_white", [](const HouseholdRecord& r) { return double(r.race_white); }},
        {"education", [](const HouseholdRecord& r) { return double(r.education); }},
        {"household_size", [](const HouseholdRecord& r) { return double(r.household_size); }},
        {"mobile_phone",
         [](const HouseholdRecord& r) { return require_int(r.mobile_phone, r, "mobile_phone"); }},
        {"internet",
         [](const HouseholdRecord& r) { return require_int(r.internet, r, "internet"); }},
        {"transport",
         [](const HouseholdRecord& r) { return require_int(r.transport, r, "transport"); }},
        {"farm_income",
         [](const HouseholdRecord& r) { return require_real(r.farm_income, r, "farm_income"); }},
        {"other_income",
         [](const HouseholdRecord& r) { return require_real(r.other_income, r, "other_income"); }},
        {"region_north_pct",
         [](const HouseholdRecord& r) {
             return r.macro_region == MacroRegion::North ? 100.0 : 0.0;
         }},
        {"region_northeast_pct",
         [](const HouseholdRecord& r) {
             return r.macro_region == MacroRegion::Northeast ? 100.0 : 0.0;
         }},
        {"region_central_west_pct",
         [](const HouseholdRecord& r) {
             return r.macro_region == MacroRegion::CentralWest ? 100.0 : 0.0;
         }},
        {"region_southeast_pct",
         [](const HouseholdRecord& r) {
             return r.macro_region == MacroRegion::Southeast ? 100.0 : 0.0;
         }},
        {"region_south_pct",
         [](const HouseholdRecord& r) {
             return r.macro_region == MacroRegion::South ? 100.0 : 0.0;
         }},
    };
    return rows;
}

SummaryColumn summarize_group(const std::string& name,
                              const std::vector<const HouseholdRecord*>& members) {
    const auto& rows = summary_rows();
    SummaryColumn col;
    col.group = name;
    col.count = long(members.size());
    col.mean.assign(rows.size(), kNaN);
    col.sd.assign(rows.size(), kNaN);
    if (members.empty()) return col;

    for (size_t r = 0; r < rows.size(); ++r) {
        double sum = 0.0;
        for (const HouseholdRecord* rec : members) sum += rows[r].value(*rec);
        const double mean = sum / double(members.size());
        double ss = 0.0;
        for (const HouseholdRecord* rec : members) {
            const double d = rows[r].value(*rec) - mean;
            ss += d * d;
        }
        col.mean[r] = mean;
        col.sd[r] = members.size() > 1 ? std::sqrt(ss / double(members.size() - 1)) : 0.0;
    }
    return col;
}

}  // namespace

GroupSummary group_summary(const std::vector<HouseholdRecord>& records, Grouping grouping) {
    GroupSummary summary;
    for (const auto& row : summary_rows()) summary.covariates.push_back(row.label);

    std::vector<std::pair<std::string, std::vector<const HouseholdRecord*>>> groups;
    if (grouping == Grouping::PolicyTotal) {
        groups = {{"pronaf", {}}, {"technical_assistance", {}}, {"seeds", {}},
                  {"no_policy", {}}, {"total", {}}};
        for (const auto& rec : records) {
            if (rec.pronaf) groups[0].second.push_back(&rec);
            if (rec.ater) groups[1].second.push_back(&rec);
            if (rec.seeds) groups[2].second.push_back(&rec);
            if (!rec.pronaf && !rec.ater && !rec.seeds) groups[3].second.push_back(&rec);
            groups[4].second.push_back(&rec);
        }
    } else {
        for (int c = 0; c < lattice::kNumCells; ++c) {
            groups.emplace_back(lattice::to_string(lattice::TreatmentCell(c)),
                                std::vector<const HouseholdRecord*>{});
        }
        groups.emplace_back("total", std::vector<const HouseholdRecord*>{});
        for (const auto& rec : records) {
            groups[size_t(lattice::classify_cell(rec))].second.push_back(&rec);
            groups.back().second.push_back(&rec);
        }
    }

    for (const auto& [name, members] : groups) {
        summary.columns.push_back(summarize_group(name, members));
    }
    return summary;
}

std::vector<ShareRow> commercialisation_table(const std::vector<HouseholdRecord>& records) {
    std::array<long, lattice::kNumCells> n{};
    std::array<long, lattice::kNumCells> sellers{};
    for (const auto& rec : records) {
        if (!rec.sold_output) {
            throw EstimationError("record " + rec.id + ": missing outcome");
        }
        const auto cell = size_t(lattice::classify_cell(rec));
        n[cell] += 1;
        sellers[cell] += *rec.sold_output;
    }
    const long n_total = long(records.size());
    long sellers_total = 0;
    for (int c = 0; c < lattice::kNumCells; ++c) sellers_total += sellers[size_t(c)];
    if (n_total == 0) throw EstimationError("commercialisation table needs records");

    auto share = [](long s, long m) { return m > 0 ? 100.0 * double(s) / double(m) : 0.0; };

    std::vector<ShareRow> rows;

    ShareRow baseline;
    baseline.label = "No policy";
    baseline.n = n[size_t(lattice::TreatmentCell::NoPolicy)];
    baseline.sellers = sellers[size_t(lattice::TreatmentCell::NoPolicy)];
    baseline.share_pct = share(baseline.sellers, baseline.n);
    rows.push_back(baseline);

    for (const auto& contrast : lattice::standard_contrasts()) {
        ShareRow row;
        row.label = std::to_string(contrast.id) + ". " + contrast.name;
        row.contrast_id = contrast.id;
        long ref_n = 0;
        long ref_sellers = 0;
        for (int c = 0; c < lattice::kNumCells; ++c) {
            const auto cell = lattice::TreatmentCell(c);
            if (contrast.is_treated(cell)) {
                row.n += n[size_t(c)];
                row.sellers += sellers[size_t(c)];
            } else if (contrast.is_control(cell)) {
                ref_n += n[size_t(c)];
                ref_sellers += sellers[size_t(c)];
            }
        }
        row.share_pct = share(row.sellers, row.n);
        if (row.n > 0 && ref_n > 0) {
            const inference::ProportionTest test =
                inference::two_proportion_test(row.n, row.sellers, ref_n, ref_sellers);
            row.diff_pct = test.diff * 100.0;
            row.z = test.z;
            row.p_value = test.p_value;
            row.stars = test.stars;
        }
        rows.push_back(row);
    }

    ShareRow total;
    total.label = "Total";
    total.n = n_total;
    total.sellers = sellers_total;
    total.share_pct = share(sellers_total, n_total);
    rows.push_back(total);
    return rows;
}

BalanceTable balance_table(const Eigen::MatrixXd& treated_covariates,
                           const Eigen::MatrixXd& control_covariates,
                           const std::vector<std::string>& covariate_names,
                           const std::vector<double>& treated_scores,
                           const std::vector<double>& control_scores,
                           const matching::MatchSpec& spec) {
    const Eigen::Index k = treated_covariates.cols();
    if (control_covariates.cols() != k || Eigen::Index(covariate_names.size()) != k) {
        throw EstimationError("balance table covariate columns do not line up");
    }
    if (treated_covariates.rows() != Eigen::Index(treated_scores.size()) ||
        control_covariates.rows() != Eigen::Index(control_scores.size())) {
        throw EstimationError("balance table scores do not match the covariate rows");
    }

    std::vector<std::vector<double>> control_series(static_cast<size_t>(k));
    for (Eigen::Index j = 0; j < k; ++j) {
        control_series[size_t(j)].assign(control_covariates.col(j).data(),
                                         control_covariates.col(j).data() +
                                             control_covariates.rows());
    }
    const matching::MatchOutput match =
        matching::match_and_average(treated_scores, control_scores, control_series, spec);
    if (match.used.empty()) {
        throw EstimationError("balance table: no treated unit could be matched");
    }
    const double weight_sum = double(match.used.size());

    BalanceTable table;
    table.n_matched_treated = int(match.used.size());
    const double nt = double(treated_covariates.rows());
    const double nc = double(control_covariates.rows());

    for (Eigen::Index j = 0; j < k; ++j) {
        BalanceRow row;
        row.covariate = covariate_names[size_t(j)];
        row.mean_treated = treated_covariates.col(j).mean();
        row.mean_control = control_covariates.col(j).mean();
        const double vt =
            nt > 1 ? (treated_covariates.col(j).array() - row.mean_treated).square().sum() /
                         (nt - 1.0)
                   : 0.0;
        const double vc =
            nc > 1 ? (control_covariates.col(j).array() - row.mean_control).square().sum() /
                         (nc - 1.0)
                   : 0.0;
        const double denom = std::sqrt((vt + vc) / 2.0);

        double weighted_control = 0.0;
        for (size_t m = 0; m < control_series[size_t(j)].size(); ++m) {
            weighted_control += match.control_weight_total[m] * control_series[size_t(j)][m];
        }
        weighted_control /= weight_sum;

        if (denom > 0) {
            row.std_diff_before = (row.mean_treated - row.mean_control) / denom;
            row.std_diff_after = (row.mean_treated - weighted_control) / denom;
        } else if (row.mean_treated != row.mean_control || row.mean_treated != weighted_control) {
            row.degenerate = true;
        }
        if (!row.degenerate) {
            table.max_abs_std_diff_after =
                std::max(table.max_abs_std_diff_after, std::abs(row.std_diff_after));
        }
        table.rows.push_back(row);
    }
    return table;
}

BalanceTable balance_table(const std::vector<HouseholdRecord>& treated,
                           const std::vector<HouseholdRecord>& control,
                           const std::vector<double>& treated_scores,
                           const std::vector<double>& control_scores,
                           const matching::MatchSpec& spec) {
    const propensity::DesignMatrix dt = propensity::build_design(treated);
    const propensity::DesignMatrix dc = propensity::build_design(control);
    // drop the intercept column
    std::vector<std::string> names(dt.column_names.begin() + 1, dt.column_names.end());
    return balance_table(dt.X.rightCols(dt.X.cols() - 1), dc.X.rightCols(dc.X.cols() - 1), names,
                         treated_scores, control_scores, spec);
}

}  // namespace policymix::diagnostics
