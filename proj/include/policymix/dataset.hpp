#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "policymix/record.hpp"

namespace policymix::dataset {

using policymix::HouseholdRecord;

enum class Imputation { None, Median };

// Family-farm filter thresholds. The per-state area table is mandatory
// input: the law's "4 modulos fiscais" varies by state and is not baked in.
struct FilterConfig {
    std::map<std::string, double> area_threshold_by_state;  // square metres
    double income_ceiling = 360000.0;                       // currency units / year
    int max_hired_workers = 2;
    double size_split = 20000.0;  // square metres (2 hectares)
    Imputation imputation = Imputation::Median;

    void validate() const;  // throws ConfigError
};

// Maps HouseholdRecord field names to source column headers. Unlisted
// source columns are ignored; every mandatory field must be mapped.
using SchemaMap = std::map<std::string, std::string>;

// Canonical field names accepted in a SchemaMap, in design order.
const std::vector<std::string>& schema_field_names();

// One funnel step of a run report: records in -> records out.
struct FilterStep {
    std::string name;
    std::size_t in = 0;
    std::size_t out = 0;
};

struct ParseOptions {
    char delimiter = ',';
};

std::vector<HouseholdRecord> parse_survey(std::istream& source, const SchemaMap& schema,
                                          const ParseOptions& options = {});
std::vector<HouseholdRecord> parse_survey_file(const std::string& path, const SchemaMap& schema,
                                               const ParseOptions& options = {});

// Retains records meeting all three family-farm criteria simultaneously:
// (a) entrepreneur with at most max_hired_workers hired, or unremunerated;
// (b) farm_area strictly below the state threshold;
// (c) annual gross income strictly below the ceiling (missing income fails).
std::vector<HouseholdRecord> apply_family_farm_filter(const std::vector<HouseholdRecord>& records,
                                                      const FilterConfig& config);

// Drops records that obtained credit outside Pronaf or private technical assistance.
std::vector<HouseholdRecord> exclude_private_services(const std::vector<HouseholdRecord>& records);

// Keeps only records with an observed 0/1 outcome.
std::vector<HouseholdRecord> drop_missing_outcome(const std::vector<HouseholdRecord>& records);

// Median: missing covariates replaced by the column median (binary columns:
// majority value, ties -> 0). None: records with any missing covariate are
// dropped. sold_output is never touched.
std::vector<HouseholdRecord> impute_missing(const std::vector<HouseholdRecord>& records,
                                            const FilterConfig& config);

// (below, at_or_above): farm_area < threshold vs the rest.
std::pair<std::vector<HouseholdRecord>, std::vector<HouseholdRecord>> split_by_area(
    const std::vector<HouseholdRecord>& records, double threshold);

// CSV writer matching the canonical schema (header row uses field names).
void write_records_csv(const std::vector<HouseholdRecord>& records, std::ostream& out,
                       char delimiter = ',');
void write_records_csv_file(const std::vector<HouseholdRecord>& records, const std::string& path,
                            char delimiter = ',');

// Identity schema: every field mapped to a column of the same name.
SchemaMap canonical_schema();

}  // namespace policymix::dataset
