#include "policymix/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "policymix/diagnostics.hpp"
#include "policymix/error.hpp"
#include "policymix/estimation.hpp"
#include "policymix/lattice.hpp"
#include "policymix/propensity.hpp"
#include "policymix/rng.hpp"
#include "policymix/synthetic.hpp"

namespace policymix::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// formatting

std::string fmt_fixed(double v, int dp) {
    if (std::isnan(v)) return "-";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", dp, v);
    std::string s(buf);
    if (s.find_first_of("123456789") == std::string::npos && !s.empty() && s[0] == '-') {
        s.erase(0, 1);  // never print "-0.000"
    }
    return s;
}

std::string fmt_compact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
}

std::string opt_fixed(const std::optional<double>& v, int dp) {
    return v ? fmt_fixed(*v, dp) : "-";
}

json opt_json(const std::optional<double>& v) {
    return v ? json(*v) : json(nullptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string render_csv(const std::vector<std::string>& headers,
                       const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    for (std::size_t i = 0; i < headers.size(); ++i) {
        if (i) out += ',';
        out += csv_field(headers[i]);
    }
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_field(row[i]);
        }
        out += '\n';
    }
    return out;
}

// Fixed-width text table: first column left-aligned, the rest right-aligned.
std::string render_text_table(const std::string& title, const std::vector<std::string>& headers,
                              const std::vector<std::vector<std::string>>& rows,
                              const std::vector<std::string>& notes) {
    std::vector<std::size_t> width(headers.size(), 0);
    for (std::size_t i = 0; i < headers.size(); ++i) width[i] = headers[i].size();
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size() && i < width.size(); ++i) {
            width[i] = std::max(width[i], row[i].size());
        }
    }
    auto emit_row = [&](const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t i = 0; i < width.size(); ++i) {
            const std::string& cell = i < cells.size() ? cells[i] : std::string();
            if (i) line += "  ";
            if (i == 0) {
                line += cell + std::string(width[i] - cell.size(), ' ');
            } else {
                line += std::string(width[i] - cell.size(), ' ') + cell;
            }
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        return line + '\n';
    };
    std::string out = title + '\n';
    out += emit_row(headers);
    std::size_t total = 0;
    for (std::size_t i = 0; i < width.size(); ++i) total += width[i] + (i ? 2 : 0);
    out += std::string(total, '-') + '\n';
    for (const auto& row : rows) out += emit_row(row);
    for (const auto& note : notes) out += note + '\n';
    out += '\n';
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// config parsing

dataset::FilterConfig filter_from_json(const json& j) {
    dataset::FilterConfig filter;
    for (const auto& [key, value] : j.items()) {
        if (key == "area_threshold_by_state") {
            for (const auto& [state, threshold] : value.items()) {
                filter.area_threshold_by_state[state] = threshold.get<double>();
            }
        } else if (key == "income_ceiling") {
            filter.income_ceiling = value.get<double>();
        } else if (key == "max_hired_workers") {
            filter.max_hired_workers = value.get<int>();
        } else if (key == "size_split") {
            filter.size_split = value.get<double>();
        } else if (key == "imputation") {
            const auto mode = value.get<std::string>();
            if (mode == "median") {
                filter.imputation = dataset::Imputation::Median;
            } else if (mode == "none") {
                filter.imputation = dataset::Imputation::None;
            } else {
                throw ConfigError("unknown imputation mode '" + mode + "'");
            }
        } else {
            throw ConfigError("unknown filter key '" + key + "'");
        }
    }
    return filter;
}

json filter_to_json(const dataset::FilterConfig& filter) {
    json j;
    j["area_threshold_by_state"] = json::object();
    for (const auto& [state, threshold] : filter.area_threshold_by_state) {
        j["area_threshold_by_state"][state] = threshold;
    }
    j["income_ceiling"] = filter.income_ceiling;
    j["max_hired_workers"] = filter.max_hired_workers;
    j["size_split"] = filter.size_split;
    j["imputation"] = filter.imputation == dataset::Imputation::Median ? "median" : "none";
    return j;
}

matching::MatchSpec spec_from_json(const json& j) {
    matching::MatchSpec spec;
    for (const auto& [key, value] : j.items()) {
        if (key == "algorithm") {
            spec.algorithm = matching::algorithm_from_string(value.get<std::string>());
        } else if (key == "kernel") {
            spec.kernel_kind = matching::kernel_from_string(value.get<std::string>());
        } else if (key == "bandwidth") {
            spec.bandwidth = value.get<double>();
        } else if (key == "k") {
            spec.k = value.get<int>();
        } else if (key == "radius") {
            spec.radius = value.get<double>();
        } else if (key == "common_support") {
            spec.common_support = value.get<bool>();
        } else if (key == "support_trim_percentile") {
            spec.support_trim_percentile = value.get<double>();
        } else {
            throw ConfigError("unknown match spec key '" + key + "'");
        }
    }
    return spec;
}

json spec_to_json(const matching::MatchSpec& spec) {
    json j;
    j["algorithm"] = matching::to_string(spec.algorithm);
    j["kernel"] = matching::to_string(spec.kernel_kind);
    j["bandwidth"] = spec.bandwidth;
    j["k"] = spec.k;
    j["radius"] = spec.radius;
    j["common_support"] = spec.common_support;
    j["support_trim_percentile"] = spec.support_trim_percentile;
    return j;
}

inference::BootstrapConfig bootstrap_from_json(const json& j) {
    inference::BootstrapConfig config;
    for (const auto& [key, value] : j.items()) {
        if (key == "replicates") {
            config.replicates = value.get<int>();
        } else if (key == "seed") {
            config.seed = value.get<std::uint64_t>();
        } else if (key == "threads") {
            config.threads = value.get<int>();
        } else if (key == "resample_unit") {
            const auto unit = value.get<std::string>();
            if (unit != "whole_sample") throw ConfigError("unknown resample unit '" + unit + "'");
        } else {
            throw ConfigError("unknown bootstrap key '" + key + "'");
        }
    }
    return config;
}

json bootstrap_to_json(const inference::BootstrapConfig& config) {
    json j;
    j["replicates"] = config.replicates;
    j["seed"] = config.seed;
    j["threads"] = config.threads;
    j["resample_unit"] = "whole_sample";
    return j;
}

const std::vector<std::string>& transformable_covariates() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& name : propensity::design_column_names()) {
            if (name == "intercept" || name.rfind("region_", 0) == 0) continue;
            out.push_back(name);
        }
        return out;
    }();
    return names;
}

// ---------------------------------------------------------------------------
// run state

struct Frame {
    std::string key;
    std::string title;
    std::size_t index = 0;
    std::vector<HouseholdRecord> records;
};

struct AttRow {
    int contrast_id = 0;
    std::string contrast_name;
    matching::MatchSpec spec;
    std::optional<matching::AttEstimate> estimate;
    std::string footnote;
    long bootstrap_successes = -1;  // -1: bootstrap not attempted
    long bootstrap_failures = -1;
};

struct BalanceEntry {
    int contrast_id = 0;
    std::string contrast_name;
    matching::MatchSpec spec;
    diagnostics::BalanceTable table;
};

struct FrameResults {
    std::vector<AttRow> rows;
    std::vector<BalanceEntry> balance;
    json models = json::array();
    json seeds = json::array();
};

struct FrameInputs {
    propensity::DesignMatrix design;
    std::vector<double> outcomes;
    std::vector<lattice::TreatmentCell> cells;
};

FrameInputs build_frame_inputs(const Frame& frame, const RunConfig& config) {
    FrameInputs inputs;
    inputs.design = propensity::build_design(frame.records);
    for (const auto& name : config.log1p_covariates) {
        const auto& names = inputs.design.column_names;
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw ConfigError("log1p target is not a design column: '" + name + "'");
        const Eigen::Index col = it - names.begin();
        for (Eigen::Index i = 0; i < inputs.design.rows(); ++i) {
            const double x = inputs.design.X(i, col);
            if (x <= -1.0) {
                throw EstimationError("log1p transform needs values > -1 in column '" + name + "'");
            }
            inputs.design.X(i, col) = std::log1p(x);
        }
    }
    inputs.outcomes.reserve(frame.records.size());
    inputs.cells.reserve(frame.records.size());
    for (const auto& r : frame.records) {
        if (!r.sold_output.has_value()) {
            throw EstimationError("record " + r.id + ": outcome missing after filtering");
        }
        inputs.outcomes.push_back(static_cast<double>(*r.sold_output));
        inputs.cells.push_back(lattice::classify_cell(r));
    }
    return inputs;
}

FrameResults estimate_frame(const Frame& frame, const RunConfig& config,
                            const std::vector<int>& contrast_ids) {
    FrameResults results;
    const propensity::FitOptions fit_options;

    if (frame.records.empty()) {
        for (int id : contrast_ids) {
            const auto& contrast = lattice::contrast_by_id(id);
            for (const auto& spec : config.specs) {
                AttRow row;
                row.contrast_id = id;
                row.contrast_name = contrast.name;
                row.spec = spec;
                row.footnote = "non-calculable: empty subsample";
                results.rows.push_back(std::move(row));
            }
        }
        return results;
    }

    const FrameInputs inputs = build_frame_inputs(frame, config);

    for (int id : contrast_ids) {
        const auto& contrast = lattice::contrast_by_id(id);

        estimation::Pool pool;
        estimation::ScoredContrast scored;
        std::string failure;
        try {
            pool = estimation::build_pool(inputs.design, inputs.outcomes, inputs.cells, contrast);
            scored = estimation::fit_contrast_scores(pool, contrast, fit_options);
            if (!scored.model.converged) {
                throw EstimationError("propensity model did not converge");
            }
        } catch (const Error& e) {
            failure = e.what();
        }

        if (failure.empty()) {
            json entry;
            entry["frame"] = frame.key;
            entry["contrast"] = id;
            entry["report"] = json::parse(propensity::model_manifest(scored.model));
            results.models.push_back(std::move(entry));
        }

        std::vector<AttRow> contrast_rows;
        bool any_estimate = false;
        for (const auto& spec : config.specs) {
            AttRow row;
            row.contrast_id = id;
            row.contrast_name = contrast.name;
            row.spec = spec;
            if (!failure.empty()) {
                row.footnote = "non-calculable: " + failure;
            } else {
                try {
                    auto est = matching::estimate_att(scored.treated_scores, scored.treated_outcomes,
                                                      scored.control_scores, scored.control_outcomes,
                                                      spec);
                    est.contrast_id = id;
                    row.estimate = est;
                    any_estimate = true;
                } catch (const Error& e) {
                    row.footnote = std::string("non-calculable: ") + e.what();
                }
            }
            contrast_rows.push_back(std::move(row));
        }

        if (config.bootstrap && failure.empty() && any_estimate) {
            auto boot = *config.bootstrap;
            boot.seed = substream_seed(config.bootstrap->seed,
                                       frame.index * 256 + static_cast<std::uint64_t>(id));
            json seed_entry;
            seed_entry["frame"] = frame.key;
            seed_entry["contrast"] = id;
            seed_entry["seed"] = boot.seed;
            results.seeds.push_back(std::move(seed_entry));

            const auto boot_results =
                inference::bootstrap_att_multi(pool, contrast, config.specs, fit_options, boot);
            for (std::size_t s = 0; s < config.specs.size(); ++s) {
                AttRow& row = contrast_rows[s];
                if (!row.estimate) continue;
                const auto& br = boot_results[s];
                row.bootstrap_successes = br.successful_replicates;
                row.bootstrap_failures = br.failed_replicates;
                if (br.reliable()) {
                    row.estimate->se = br.se;
                    const auto zt = inference::z_and_p(row.estimate->coeff, br.se);
                    row.estimate->z = zt.z;
                    row.estimate->p_value = zt.p_value;
                    row.estimate->stars = zt.stars;
                    if (br.successful_replicates < boot.replicates) {
                        row.footnote = "based on " + std::to_string(br.successful_replicates) +
                                       " successful bootstrap replicates";
                    }
                } else {
                    row.footnote = "convergence not achieved";
                }
            }
        }

        if (frame.index == 0 && failure.empty()) {
            std::vector<Eigen::Index> treated_rows, control_rows;
            for (Eigen::Index i = 0; i < pool.size(); ++i) {
                if (contrast.is_treated(pool.cell[i])) treated_rows.push_back(i);
                if (contrast.is_control(pool.cell[i])) control_rows.push_back(i);
            }
            const Eigen::Index n_cov = pool.X.cols() - 1;
            Eigen::MatrixXd treated_cov(static_cast<Eigen::Index>(treated_rows.size()), n_cov);
            Eigen::MatrixXd control_cov(static_cast<Eigen::Index>(control_rows.size()), n_cov);
            for (std::size_t i = 0; i < treated_rows.size(); ++i) {
                treated_cov.row(static_cast<Eigen::Index>(i)) =
                    pool.X.row(treated_rows[i]).rightCols(n_cov);
            }
            for (std::size_t i = 0; i < control_rows.size(); ++i) {
                control_cov.row(static_cast<Eigen::Index>(i)) =
                    pool.X.row(control_rows[i]).rightCols(n_cov);
            }
            std::vector<std::string> names(pool.column_names.begin() + 1, pool.column_names.end());
            for (std::size_t s = 0; s < config.specs.size(); ++s) {
                if (!contrast_rows[s].estimate) continue;
                try {
                    BalanceEntry entry;
                    entry.contrast_id = id;
                    entry.contrast_name = contrast.name;
                    entry.spec = config.specs[s];
                    entry.table =
                        diagnostics::balance_table(treated_cov, control_cov, names,
                                                   scored.treated_scores, scored.control_scores,
                                                   config.specs[s]);
                    results.balance.push_back(std::move(entry));
                } catch (const Error&) {
                    // the ATT row already reports the estimation problem
                }
            }
        }

        for (auto& row : contrast_rows) results.rows.push_back(std::move(row));
    }
    return results;
}

// ---------------------------------------------------------------------------
// rendering

std::vector<std::string> att_csv_headers() {
    return {"contrast", "name", "algorithm", "spec", "coeff", "se", "z", "p_value", "stars",
            "att_pct", "treated_on_support", "treated_dropped", "unmatched", "controls",
            "bootstrap_successes", "bootstrap_failures", "footnote"};
}

std::vector<std::string> att_csv_row(const AttRow& row) {
    std::vector<std::string> cells;
    cells.push_back(std::to_string(row.contrast_id));
    cells.push_back(row.contrast_name);
    cells.push_back(matching::to_string(row.spec.algorithm));
    cells.push_back(row.spec.label());
    if (row.estimate) {
        const auto& est = *row.estimate;
        cells.push_back(fmt_fixed(est.coeff, 3));
        cells.push_back(opt_fixed(est.se, 3));
        cells.push_back(opt_fixed(est.z, 2));
        cells.push_back(opt_fixed(est.p_value, 3));
        cells.push_back(est.stars);
        cells.push_back(fmt_fixed(est.pct(), 1));
        cells.push_back(std::to_string(est.n_treated_on_support));
        cells.push_back(std::to_string(est.n_treated_dropped));
        cells.push_back(std::to_string(est.n_unmatched));
        cells.push_back(std::to_string(est.n_controls));
    } else {
        for (int i = 0; i < 5; ++i) cells.push_back("-");
        cells.push_back("-");
        for (int i = 0; i < 4; ++i) cells.push_back("-");
    }
    cells.push_back(row.bootstrap_successes >= 0 ? std::to_string(row.bootstrap_successes) : "-");
    cells.push_back(row.bootstrap_failures >= 0 ? std::to_string(row.bootstrap_failures) : "-");
    cells.push_back(row.footnote);
    return cells;
}

std::string att_text(const std::string& title, const std::vector<AttRow>& rows) {
    std::vector<std::vector<std::string>> body;
    std::vector<std::string> notes;
    for (const auto& row : rows) {
        std::vector<std::string> cells;
        cells.push_back(std::to_string(row.contrast_id) + ". " + row.contrast_name);
        cells.push_back(matching::to_string(row.spec.algorithm));
        if (row.estimate) {
            const auto& est = *row.estimate;
            cells.push_back(fmt_fixed(est.coeff, 3));
            cells.push_back(opt_fixed(est.se, 3));
            cells.push_back(opt_fixed(est.z, 2));
            cells.push_back(est.p_value ? fmt_fixed(*est.p_value, 3) + est.stars : "-");
            cells.push_back(fmt_fixed(est.pct(), 1));
            cells.push_back(std::to_string(est.n_used()));
            cells.push_back(std::to_string(est.n_controls));
        } else {
            for (int i = 0; i < 7; ++i) cells.push_back("-");
        }
        body.push_back(std::move(cells));
        if (!row.footnote.empty()) {
            notes.push_back("note (" + std::to_string(row.contrast_id) + ", " +
                            matching::to_string(row.spec.algorithm) + "): " + row.footnote);
        }
    }
    notes.push_back("*** p<0.01, ** p<0.05, * p<0.10; '-' marks a non-calculable cell.");
    return render_text_table(title,
                             {"treatment", "algorithm", "coeff.", "st. err.", "z", "p-value", "%",
                              "treated", "controls"},
                             body, notes);
}

json att_manifest_rows(const std::vector<AttRow>& rows) {
    json out = json::array();
    for (const auto& row : rows) {
        json r;
        r["contrast"] = row.contrast_id;
        r["name"] = row.contrast_name;
        r["algorithm"] = matching::to_string(row.spec.algorithm);
        r["spec"] = row.spec.label();
        if (row.estimate) {
            const auto& est = *row.estimate;
            r["coeff"] = est.coeff;
            r["se"] = opt_json(est.se);
            r["z"] = opt_json(est.z);
            r["p_value"] = opt_json(est.p_value);
            r["stars"] = est.stars;
            r["att_pct"] = est.pct();
            r["treated_on_support"] = est.n_treated_on_support;
            r["treated_dropped"] = est.n_treated_dropped;
            r["unmatched"] = est.n_unmatched;
            r["controls"] = est.n_controls;
        } else {
            r["coeff"] = nullptr;
        }
        if (row.bootstrap_successes >= 0) {
            r["bootstrap_successes"] = row.bootstrap_successes;
            r["bootstrap_failures"] = row.bootstrap_failures;
        }
        r["footnote"] = row.footnote;
        out.push_back(std::move(r));
    }
    return out;
}

std::pair<std::string, std::string> funnel_tables(const std::vector<dataset::FilterStep>& funnel) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& step : funnel) {
        rows.push_back({step.name, std::to_string(step.in), std::to_string(step.out)});
    }
    std::string csv = render_csv({"step", "records_in", "records_out"}, rows);
    std::string text =
        render_text_table("Sample construction", {"step", "records in", "records out"}, rows, {});
    return {csv, text};
}

std::pair<std::string, std::string> summary_tables(const diagnostics::GroupSummary& summary,
                                                   const std::string& title) {
    std::vector<std::string> headers = {"covariate"};
    for (const auto& col : summary.columns) {
        headers.push_back(col.group + "_mean");
        headers.push_back(col.group + "_sd");
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < summary.covariates.size(); ++i) {
        std::vector<std::string> cells = {summary.covariates[i]};
        for (const auto& col : summary.columns) {
            cells.push_back(fmt_fixed(col.mean[i], 2));
            cells.push_back(fmt_fixed(col.sd[i], 2));
        }
        rows.push_back(std::move(cells));
    }
    std::vector<std::string> count_row = {"observations"};
    for (const auto& col : summary.columns) {
        count_row.push_back(std::to_string(col.count));
        count_row.push_back("");
    }
    rows.push_back(count_row);
    return {render_csv(headers, rows), render_text_table(title, headers, rows, {})};
}

json summary_manifest(const diagnostics::GroupSummary& summary) {
    json out;
    out["covariates"] = summary.covariates;
    out["columns"] = json::array();
    for (const auto& col : summary.columns) {
        json c;
        c["group"] = col.group;
        c["count"] = col.count;
        c["mean"] = col.mean;
        c["sd"] = col.sd;
        out["columns"].push_back(std::move(c));
    }
    return out;
}

std::pair<std::string, std::string> commercialisation_tables(
    const std::vector<diagnostics::ShareRow>& table) {
    std::vector<std::vector<std::string>> csv_rows, text_rows;
    for (const auto& row : table) {
        const std::string share = row.n > 0 ? fmt_fixed(row.share_pct, 1) : "-";
        csv_rows.push_back({row.label, std::to_string(row.n), std::to_string(row.sellers), share,
                            opt_fixed(row.diff_pct, 1), opt_fixed(row.z, 2),
                            opt_fixed(row.p_value, 3), row.stars});
        text_rows.push_back({row.label, std::to_string(row.n), share,
                             row.diff_pct ? fmt_fixed(*row.diff_pct, 1) + row.stars : ""});
    }
    std::string csv = render_csv(
        {"group", "n", "sellers", "share_pct", "diff_pct", "z", "p_value", "stars"}, csv_rows);
    std::string text = render_text_table(
        "Households selling part of their output",
        {"group", "n", "% selling", "diff. vs reference"}, text_rows,
        {"*** p<0.01, ** p<0.05, * p<0.10; policy rows are compared with the no-policy group."});
    return {csv, text};
}

json commercialisation_manifest(const std::vector<diagnostics::ShareRow>& table) {
    json out = json::array();
    for (const auto& row : table) {
        json r;
        r["label"] = row.label;
        r["contrast"] = row.contrast_id;
        r["n"] = row.n;
        r["sellers"] = row.sellers;
        r["share_pct"] = row.share_pct;
        r["diff_pct"] = opt_json(row.diff_pct);
        r["z"] = opt_json(row.z);
        r["p_value"] = opt_json(row.p_value);
        r["stars"] = row.stars;
        out.push_back(std::move(r));
    }
    return out;
}

std::pair<std::string, std::string> balance_tables(const std::vector<BalanceEntry>& entries) {
    std::vector<std::vector<std::string>> csv_rows;
    std::string text;
    for (const auto& entry : entries) {
        std::vector<std::vector<std::string>> text_rows;
        for (const auto& row : entry.table.rows) {
            std::string flag = row.degenerate ? "1" : "0";
            csv_rows.push_back({std::to_string(entry.contrast_id), entry.spec.label(),
                                row.covariate, fmt_fixed(row.mean_treated, 4),
                                fmt_fixed(row.mean_control, 4), fmt_fixed(row.std_diff_before, 4),
                                fmt_fixed(row.std_diff_after, 4), flag});
            text_rows.push_back({row.covariate, fmt_fixed(row.mean_treated, 4),
                                 fmt_fixed(row.mean_control, 4), fmt_fixed(row.std_diff_before, 4),
                                 fmt_fixed(row.std_diff_after, 4) +
                                     (row.degenerate ? " (degenerate)" : "")});
        }
        text += render_text_table(
            "Covariate balance: " + std::to_string(entry.contrast_id) + ". " +
                entry.contrast_name + ", " + entry.spec.label() + " (matched treated = " +
                std::to_string(entry.table.n_matched_treated) + ", max |std. diff.| after = " +
                fmt_fixed(entry.table.max_abs_std_diff_after, 4) + ")",
            {"covariate", "treated mean", "control mean", "std. diff. before", "std. diff. after"},
            text_rows, {});
    }
    std::string csv = render_csv({"contrast", "spec", "covariate", "mean_treated", "mean_control",
                                  "std_diff_before", "std_diff_after", "degenerate"},
                                 csv_rows);
    return {csv, text};
}

json balance_manifest(const std::vector<BalanceEntry>& entries) {
    json out = json::array();
    for (const auto& entry : entries) {
        json e;
        e["contrast"] = entry.contrast_id;
        e["name"] = entry.contrast_name;
        e["spec"] = entry.spec.label();
        e["n_matched_treated"] = entry.table.n_matched_treated;
        e["max_abs_std_diff_after"] = entry.table.max_abs_std_diff_after;
        e["rows"] = json::array();
        for (const auto& row : entry.table.rows) {
            json r;
            r["covariate"] = row.covariate;
            r["mean_treated"] = row.mean_treated;
            r["mean_control"] = row.mean_control;
            r["std_diff_before"] = row.std_diff_before;
            r["std_diff_after"] = row.std_diff_after;
            r["degenerate"] = row.degenerate;
            e["rows"].push_back(std::move(r));
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<std::string> decisions_in_effect(const RunConfig& config, bool survey_run) {
    std::vector<std::string> d = {
        "common support uses the min-max score interval and trims treated units only",
        "nearest-neighbour matching keeps every control tied at the k-th smallest distance",
        "radius matching treats the caliper as a closed bound",
        "treated units without an admissible control are dropped from the ATT and reported",
        "total contrasts use a binary membership logit; exclusive contrasts sum multinomial "
        "probabilities of the treated cells",
        "bootstrap resamples the contrast pool with replacement and refits the model per replicate",
        "bootstrap replicate r derives its RNG stream from (seed, r), so thread count and "
        "execution order cannot change results",
        "standardized differences use sqrt((vT + vC)/2) from the unmatched groups in both the "
        "before and after columns",
        "reference categories: northeast region, no-policy cell",
    };
    if (survey_run) {
        d.push_back(config.filter.imputation == dataset::Imputation::Median
                        ? "missing covariates imputed by column median (binary: majority, ties "
                          "resolve to 0); the outcome is never imputed"
                        : "records with missing covariates are dropped");
    } else {
        d.push_back("synthetic records bypass the family-farm filters; the funnel records the "
                    "generated count");
    }
    return d;
}

void run_impl(const RunConfig& config, const fs::path& outdir) {
    const bool survey_run = !config.input_path.empty();
    const bool scenario_run = !config.scenario.empty();
    if (survey_run == scenario_run) {
        throw ConfigError("exactly one input is required: a survey file or a scenario");
    }
    if (config.output_dir.empty()) throw ConfigError("output_dir is not set");
    if (config.contrast_ids.empty()) throw ConfigError("no contrasts selected");
    if (config.specs.empty()) throw ConfigError("no matching algorithms selected");
    if (!config.write_text && !config.write_delimited) {
        throw ConfigError("all output formats disabled");
    }
    std::vector<int> contrast_ids = config.contrast_ids;
    std::sort(contrast_ids.begin(), contrast_ids.end());
    if (std::adjacent_find(contrast_ids.begin(), contrast_ids.end()) != contrast_ids.end()) {
        throw ConfigError("duplicate contrast id in selection");
    }
    for (int id : contrast_ids) {
        if (id < 1 || id > 10) {
            throw ConfigError("contrast id out of range 1..10: " + std::to_string(id));
        }
    }
    for (const auto& spec : config.specs) spec.validate();
    if (config.bootstrap) config.bootstrap->validate();
    for (const auto& name : config.log1p_covariates) {
        const auto& ok = transformable_covariates();
        if (std::find(ok.begin(), ok.end(), name) == ok.end()) {
            throw ConfigError("log1p does not apply to '" + name + "'");
        }
    }

    std::error_code ec;
    fs::create_directories(outdir, ec);
    if (ec) throw IoError("cannot create output directory '" + outdir.string() + "'");

    json manifest;
    manifest["tool"] = {{"name", "policymix"}, {"version", "1.0.0"}};
    manifest["config"] = run_config_to_json(config);
    manifest["contrasts"] = json::parse(lattice::contrasts_manifest_json());
    manifest["decisions"] = decisions_in_effect(config, survey_run);

    std::vector<dataset::FilterStep> funnel;
    std::vector<HouseholdRecord> records;

    if (scenario_run) {
        auto scenario = synthetic::resolve_scenario(config.scenario);
        scenario.validate();
        config.filter.validate();
        auto generated = synthetic::generate(scenario);
        records = std::move(generated.records);
        funnel.push_back({"generated", records.size(), records.size()});

        json section;
        section["reference"] = config.scenario;
        section["config"] = synthetic::scenario_to_json(scenario);
        section["truth"] = json::object();
        for (const auto& [id, att] : generated.truth) {
            section["truth"][std::to_string(id)] = att;
        }
        section["cells"] = json::array();
        for (int c = 0; c < lattice::kNumCells; ++c) {
            json cell;
            cell["cell"] = lattice::to_string(static_cast<lattice::TreatmentCell>(c));
            cell["expected"] = generated.expected_cell_counts[c];
            cell["realized"] = generated.realized_cell_counts[c];
            section["cells"].push_back(std::move(cell));
        }
        section["warnings"] = generated.warnings;
        manifest["scenario"] = std::move(section);

        dataset::write_records_csv_file(records, (outdir / "synthetic_data.csv").string());
    } else {
        config.filter.validate();
        records = dataset::parse_survey_file(config.input_path, config.schema);
        funnel.push_back({"parsed", records.size(), records.size()});
        auto family = dataset::apply_family_farm_filter(records, config.filter);
        funnel.push_back({"family_farm", records.size(), family.size()});
        records = std::move(family);
        auto with_outcome = dataset::drop_missing_outcome(records);
        funnel.push_back({"outcome_observed", records.size(), with_outcome.size()});
        records = std::move(with_outcome);
        auto public_only = dataset::exclude_private_services(records);
        funnel.push_back({"no_private_services", records.size(), public_only.size()});
        records = std::move(public_only);
        auto imputed = dataset::impute_missing(records, config.filter);
        funnel.push_back({"imputed", records.size(), imputed.size()});
        records = std::move(imputed);
    }
    if (records.empty()) throw EstimationError("no records remain after filtering");

    std::vector<Frame> frames;
    frames.push_back({"full_sample", "Full sample", 0, records});
    if (config.subgroup_split) {
        auto [below, above] = dataset::split_by_area(records, config.filter.size_split);
        const std::string threshold = fmt_compact(config.filter.size_split);
        frames.push_back({"below_split", "Farms below " + threshold + " sq. m", 1,
                          std::move(below)});
        frames.push_back({"at_or_above_split", "Farms at or above " + threshold + " sq. m", 2,
                          std::move(above)});
    }

    const auto summary_policy = diagnostics::group_summary(records, diagnostics::Grouping::PolicyTotal);
    const auto summary_cell = diagnostics::group_summary(records, diagnostics::Grouping::Cell);
    const auto shares = diagnostics::commercialisation_table(records);

    json raw;
    raw["filter_funnel"] = json::array();
    for (const auto& step : funnel) {
        raw["filter_funnel"].push_back({{"step", step.name}, {"in", step.in}, {"out", step.out}});
    }
    raw["summary_by_policy"] = summary_manifest(summary_policy);
    raw["summary_by_cell"] = summary_manifest(summary_cell);
    raw["commercialisation"] = commercialisation_manifest(shares);
    raw["att"] = json::object();

    manifest["models"] = json::array();
    manifest["seeds"] = json::object();
    manifest["seeds"]["master"] = config.bootstrap ? json(config.bootstrap->seed) : json(nullptr);
    manifest["seeds"]["bootstrap"] = json::array();

    std::map<std::string, std::vector<AttRow>> frame_rows;
    std::vector<BalanceEntry> balance;
    for (const auto& frame : frames) {
        auto results = estimate_frame(frame, config, contrast_ids);
        raw["att"][frame.key] = att_manifest_rows(results.rows);
        for (auto& m : results.models) manifest["models"].push_back(std::move(m));
        for (auto& s : results.seeds) manifest["seeds"]["bootstrap"].push_back(std::move(s));
        if (frame.index == 0) balance = std::move(results.balance);
        frame_rows[frame.key] = std::move(results.rows);
    }
    raw["balance"] = balance_manifest(balance);
    manifest["raw"] = std::move(raw);

    const auto [funnel_csv, funnel_text] = funnel_tables(funnel);
    const auto [summary_policy_csv, summary_policy_text] =
        summary_tables(summary_policy, "Covariate means by policy group");
    const auto [summary_cell_csv, summary_cell_text] =
        summary_tables(summary_cell, "Covariate means by treatment cell");
    const auto [shares_csv, shares_text] = commercialisation_tables(shares);
    const auto [balance_csv, balance_text] = balance_tables(balance);

    auto emit = [&](const std::string& stem, const std::string& csv, const std::string& text) {
        if (config.write_delimited) write_file(outdir / (stem + ".csv"), csv);
        if (config.write_text) write_file(outdir / (stem + ".txt"), text);
    };
    emit("filter_funnel", funnel_csv, funnel_text);
    emit("summary_by_policy", summary_policy_csv, summary_policy_text);
    emit("summary_by_cell", summary_cell_csv, summary_cell_text);
    emit("commercialisation", shares_csv, shares_text);
    emit("balance", balance_csv, balance_text);
    for (const auto& frame : frames) {
        const auto& rows = frame_rows[frame.key];
        std::vector<std::vector<std::string>> csv_rows;
        for (const auto& row : rows) csv_rows.push_back(att_csv_row(row));
        emit("att_" + frame.key, render_csv(att_csv_headers(), csv_rows),
             att_text("ATT of policy participation on commercialisation: " + frame.title +
                          " (n = " + std::to_string(frame.records.size()) + ")",
                      rows));
    }

    write_file(outdir / "run_manifest.json", manifest.dump(2) + "\n");
    fs::remove(outdir / "ERROR.txt", ec);
}

}  // namespace

RunConfig::RunConfig() : schema(dataset::canonical_schema()), specs(default_match_specs()) {}

std::vector<matching::MatchSpec> default_match_specs() {
    matching::MatchSpec kernel;
    matching::MatchSpec nearest;
    nearest.algorithm = matching::Algorithm::NearestNeighbour;
    matching::MatchSpec radius;
    radius.algorithm = matching::Algorithm::Radius;
    return {kernel, nearest, radius};
}

RunConfig run_config_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    RunConfig config;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "input") {
                config.input_path = value.get<std::string>();
            } else if (key == "scenario") {
                config.scenario = value.get<std::string>();
            } else if (key == "schema") {
                config.schema.clear();
                for (const auto& [field, column] : value.items()) {
                    config.schema[field] = column.get<std::string>();
                }
            } else if (key == "filter") {
                config.filter = filter_from_json(value);
            } else if (key == "contrasts") {
                config.contrast_ids = value.get<std::vector<int>>();
            } else if (key == "match_specs") {
                config.specs.clear();
                for (const auto& item : value) config.specs.push_back(spec_from_json(item));
            } else if (key == "bootstrap") {
                if (value.is_null()) {
                    config.bootstrap.reset();
                } else {
                    config.bootstrap = bootstrap_from_json(value);
                }
            } else if (key == "subgroup_split") {
                config.subgroup_split = value.get<bool>();
            } else if (key == "output_dir") {
                config.output_dir = value.get<std::string>();
            } else if (key == "formats") {
                config.write_text = false;
                config.write_delimited = false;
                for (const auto& item : value) {
                    const auto fmt = item.get<std::string>();
                    if (fmt == "text") {
                        config.write_text = true;
                    } else if (fmt == "delimited") {
                        config.write_delimited = true;
                    } else {
                        throw ConfigError("unknown output format '" + fmt + "'");
                    }
                }
            } else if (key == "log1p_covariates") {
                config.log1p_covariates = value.get<std::vector<std::string>>();
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    return config;
}

json run_config_to_json(const RunConfig& config) {
    json j;
    j["input"] = config.input_path;
    j["scenario"] = config.scenario;
    j["schema"] = json::object();
    for (const auto& [field, column] : config.schema) j["schema"][field] = column;
    j["filter"] = filter_to_json(config.filter);
    j["contrasts"] = config.contrast_ids;
    j["match_specs"] = json::array();
    for (const auto& spec : config.specs) j["match_specs"].push_back(spec_to_json(spec));
    j["bootstrap"] = config.bootstrap ? bootstrap_to_json(*config.bootstrap) : json(nullptr);
    j["subgroup_split"] = config.subgroup_split;
    j["output_dir"] = config.output_dir;
    j["formats"] = json::array();
    if (config.write_text) j["formats"].push_back("text");
    if (config.write_delimited) j["formats"].push_back("delimited");
    j["log1p_covariates"] = config.log1p_covariates;
    return j;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open run config '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("run config '" + path + "' is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

std::vector<std::string> validate(const RunConfig& config) {
    std::vector<std::string> findings;
    const bool survey_run = !config.input_path.empty();
    const bool scenario_run = !config.scenario.empty();
    if (!survey_run && !scenario_run) {
        findings.push_back("no input: set either a survey file or a scenario");
    }
    if (survey_run && scenario_run) {
        findings.push_back("ambiguous input: survey file and scenario are mutually exclusive");
    }
    if (config.output_dir.empty()) {
        findings.push_back("output_dir is not set");
    } else if (fs::exists(config.output_dir) && !fs::is_directory(config.output_dir)) {
        findings.push_back("output_dir exists and is not a directory: " + config.output_dir);
    }
    if (!config.write_text && !config.write_delimited) {
        findings.push_back("all output formats disabled");
    }
    if (config.contrast_ids.empty()) findings.push_back("no contrasts selected");
    std::set<int> seen;
    for (int id : config.contrast_ids) {
        if (id < 1 || id > 10) {
            findings.push_back("contrast id out of range 1..10: " + std::to_string(id));
        } else if (!seen.insert(id).second) {
            findings.push_back("duplicate contrast id: " + std::to_string(id));
        }
    }
    if (config.specs.empty()) findings.push_back("no matching algorithms selected");
    for (const auto& spec : config.specs) {
        try {
            spec.validate();
        } catch (const std::exception& e) {
            findings.push_back(std::string(e.what()) + " [" + spec.label() + "]");
        }
    }
    if (config.bootstrap) {
        try {
            config.bootstrap->validate();
        } catch (const std::exception& e) {
            findings.push_back(e.what());
        }
    }
    try {
        config.filter.validate();
    } catch (const std::exception& e) {
        findings.push_back(e.what());
    }
    for (const auto& name : config.log1p_covariates) {
        const auto& ok = transformable_covariates();
        if (std::find(ok.begin(), ok.end(), name) == ok.end()) {
            findings.push_back("log1p does not apply to '" + name + "'");
        }
    }
    if (survey_run && !scenario_run) {
        try {
            const auto records = dataset::parse_survey_file(config.input_path, config.schema);
            std::set<std::string> states;
            for (const auto& r : records) states.insert(r.state);
            for (const auto& state : states) {
                if (!config.filter.area_threshold_by_state.count(state)) {
                    findings.push_back("no area threshold configured for state '" + state + "'");
                }
            }
        } catch (const std::exception& e) {
            findings.push_back(e.what());
        }
    }
    if (scenario_run && !survey_run) {
        try {
            auto scenario = synthetic::resolve_scenario(config.scenario);
            scenario.validate();
            const auto generated = synthetic::generate(scenario);
            for (const auto& warning : generated.warnings) {
                findings.push_back("scenario: " + warning);
            }
        } catch (const std::exception& e) {
            findings.push_back(e.what());
        }
    }
    return findings;
}

void run(const RunConfig& config) {
    const fs::path outdir = config.output_dir;
    try {
        run_impl(config, outdir);
    } catch (const std::exception& e) {
        if (!config.output_dir.empty()) {
            std::error_code ec;
            fs::create_directories(outdir, ec);
            if (!ec) {
                std::ofstream marker(outdir / "ERROR.txt", std::ios::binary | std::ios::trunc);
                if (marker) marker << e.what() << '\n';
            }
        }
        throw;
    }
}

}  // namespace policymix::pipeline
