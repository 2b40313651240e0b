#include "policymix/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "policymix/error.hpp"

namespace policymix {

const char* to_string(MacroRegion r) {
    switch (r) {
        case MacroRegion::North: return "North";
        case MacroRegion::Northeast: return "Northeast";
        case MacroRegion::CentralWest: return "CentralWest";
        case MacroRegion::Southeast: return "Southeast";
        case MacroRegion::South: return "South";
    }
    return "?";
}

const char* to_string(EmploymentClass e) {
    switch (e) {
        case EmploymentClass::Entrepreneur: return "entrepreneur";
        case EmploymentClass::Unremunerated: return "unremunerated";
        case EmploymentClass::Other: return "other";
    }
    return "?";
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

MacroRegion macro_region_from_string(const std::string& s) {
    const std::string v = lower(s);
    if (v == "north") return MacroRegion::North;
    if (v == "northeast") return MacroRegion::Northeast;
    if (v == "centralwest" || v == "central-west" || v == "central_west")
        return MacroRegion::CentralWest;
    if (v == "southeast") return MacroRegion::Southeast;
    if (v == "south") return MacroRegion::South;
    throw ParseError("unknown macro region '" + s + "'");
}

EmploymentClass employment_class_from_string(const std::string& s) {
    const std::string v = lower(s);
    if (v == "entrepreneur") return EmploymentClass::Entrepreneur;
    if (v == "unremunerated") return EmploymentClass::Unremunerated;
    if (v == "other") return EmploymentClass::Other;
    throw ParseError("unknown employment class '" + s + "'");
}

}  // namespace policymix

namespace policymix::dataset {

void FilterConfig::validate() const {
    if (income_ceiling <= 0.0) throw ConfigError("income_ceiling must be positive");
    if (size_split <= 0.0) throw ConfigError("size_split must be positive");
    if (max_hired_workers < 0) throw ConfigError("max_hired_workers must be non-negative");
}

const std::vector<std::string>& schema_field_names() {
    static const std::vector<std::string> names = {
        "id",           "age",          "gender_man",     "farm_area",
        "race_white",   "education",    "household_size", "mobile_phone",
        "internet",     "transport",    "farm_income",    "other_income",
        "macro_region", "pronaf",       "ater",           "seeds",
        "private_credit", "private_assistance", "hired_workers", "employment_class",
        "state",        "annual_gross_income", "sold_output"};
    return names;
}

SchemaMap canonical_schema() {
    SchemaMap m;
    for (const auto& f : schema_field_names()) m[f] = f;
    return m;
}

namespace {

// Splits one delimited line; double quotes protect embedded delimiters.
std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == delim) {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

// Fields that may legitimately be empty in the source data.
bool field_missing_capable(const std::string& f) {
    return f == "mobile_phone" || f == "internet" || f == "transport" || f == "farm_income" ||
           f == "other_income" || f == "annual_gross_income" || f == "sold_output";
}

struct FieldIndex {
    // field name -> column position, -1 when unmapped (missing-capable only)
    std::map<std::string, int> pos;

    int at(const std::string& f) const {
        auto it = pos.find(f);
        return it == pos.end() ? -1 : it->second;
    }
};

FieldIndex resolve_schema(const SchemaMap& schema, const std::vector<std::string>& header) {
    const auto& known = schema_field_names();
    for (const auto& [field, column] : schema) {
        if (std::find(known.begin(), known.end(), field) == known.end())
            throw ConfigError("schema maps unknown field '" + field + "'");
        (void)column;
    }
    FieldIndex idx;
    for (const auto& field : known) {
        auto it = schema.find(field);
        if (it == schema.end()) {
            if (field == "id" || field_missing_capable(field)) continue;
            throw ConfigError("schema is missing mandatory field '" + field + "'");
        }
        auto col = std::find(header.begin(), header.end(), it->second);
        if (col == header.end())
            throw ConfigError("column '" + it->second + "' (field '" + field +
                              "') not found in header");
        idx.pos[field] = static_cast<int>(col - header.begin());
    }
    return idx;
}

[[noreturn]] void field_error(std::size_t line_no, const std::string& field,
                              const std::string& value, const std::string& why) {
    throw ParseError("line " + std::to_string(line_no) + ", field '" + field + "': " + why +
                     " (got '" + value + "')");
}

double parse_real(const std::string& cell, std::size_t line_no, const std::string& field) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        field_error(line_no, field, cell, "expected a number");
    }
    if (used != cell.size()) field_error(line_no, field, cell, "expected a number");
    if (!std::isfinite(v)) field_error(line_no, field, cell, "expected a finite number");
    return v;
}

int parse_int(const std::string& cell, std::size_t line_no, const std::string& field) {
    const double v = parse_real(cell, line_no, field);
    const double r = std::nearbyint(v);
    if (std::abs(v - r) > 1e-9) field_error(line_no, field, cell, "expected an integer");
    return static_cast<int>(r);
}

int parse_binary(const std::string& cell, std::size_t line_no, const std::string& field) {
    const int v = parse_int(cell, line_no, field);
    if (v != 0 && v != 1) field_error(line_no, field, cell, "expected 0 or 1");
    return v;
}

}  // namespace

std::vector<HouseholdRecord> parse_survey(std::istream& source, const SchemaMap& schema,
                                          const ParseOptions& options) {
    std::string line;
    if (!std::getline(source, line)) throw ParseError("empty input: no header row");
    const auto header = split_line(line, options.delimiter);
    const FieldIndex idx = resolve_schema(schema, header);

    std::vector<HouseholdRecord> records;
    std::size_t line_no = 1;
    while (std::getline(source, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_line(line, options.delimiter);
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));

        auto cell = [&](const std::string& field) -> const std::string* {
            const int p = idx.at(field);
            if (p < 0) return nullptr;
            return &cells[static_cast<std::size_t>(p)];
        };
        auto mandatory = [&](const std::string& field) -> const std::string& {
            const std::string* c = cell(field);
            if (c->empty()) field_error(line_no, field, "", "mandatory field is empty");
            return *c;
        };

        HouseholdRecord r;
        if (const std::string* c = cell("id"); c != nullptr && !c->empty())
            r.id = *c;
        else
            r.id = std::to_string(records.size() + 1);

        r.age = parse_int(mandatory("age"), line_no, "age");
        if (r.age < 0) field_error(line_no, "age", *cell("age"), "must be >= 0");
        r.gender_man = parse_binary(mandatory("gender_man"), line_no, "gender_man");
        r.farm_area = parse_real(mandatory("farm_area"), line_no, "farm_area");
        if (r.farm_area < 0.0) field_error(line_no, "farm_area", *cell("farm_area"), "must be >= 0");
        r.race_white = parse_binary(mandatory("race_white"), line_no, "race_white");
        r.education = parse_int(mandatory("education"), line_no, "education");
        if (r.education < 0) field_error(line_no, "education", *cell("education"), "must be >= 0");
        r.household_size = parse_int(mandatory("household_size"), line_no, "household_size");
        if (r.household_size < 1)
            field_error(line_no, "household_size", *cell("household_size"), "must be >= 1");

        auto opt_binary = [&](const std::string& field) -> std::optional<int> {
            const std::string* c = cell(field);
            if (c == nullptr || c->empty()) return std::nullopt;
            return parse_binary(*c, line_no, field);
        };
        auto opt_real = [&](const std::string& field) -> std::optional<double> {
            const std::string* c = cell(field);
            if (c == nullptr || c->empty()) return std::nullopt;
            const double v = parse_real(*c, line_no, field);
            if (v < 0.0) field_error(line_no, field, *c, "must be >= 0");
            return v;
        };
        r.mobile_phone = opt_binary("mobile_phone");
        r.internet = opt_binary("internet");
        r.transport = opt_binary("transport");
        r.farm_income = opt_real("farm_income");
        r.other_income = opt_real("other_income");

        try {
            r.macro_region = macro_region_from_string(mandatory("macro_region"));
            r.employment_class = employment_class_from_string(mandatory("employment_class"));
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        r.pronaf = parse_binary(mandatory("pronaf"), line_no, "pronaf");
        r.ater = parse_binary(mandatory("ater"), line_no, "ater");
        r.seeds = parse_binary(mandatory("seeds"), line_no, "seeds");
        r.private_credit = parse_binary(mandatory("private_credit"), line_no, "private_credit");
        r.private_assistance =
            parse_binary(mandatory("private_assistance"), line_no, "private_assistance");
        r.hired_workers = parse_int(mandatory("hired_workers"), line_no, "hired_workers");
        if (r.hired_workers < 0)
            field_error(line_no, "hired_workers", *cell("hired_workers"), "must be >= 0");
        r.state = mandatory("state");
        r.annual_gross_income = opt_real("annual_gross_income");
        r.sold_output = opt_binary("sold_output");

        records.push_back(std::move(r));
    }
    return records;
}

std::vector<HouseholdRecord> parse_survey_file(const std::string& path, const SchemaMap& schema,
                                               const ParseOptions& options) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open input file '" + path + "'");
    return parse_survey(in, schema, options);
}

std::vector<HouseholdRecord> apply_family_farm_filter(const std::vector<HouseholdRecord>& records,
                                                      const FilterConfig& config) {
    config.validate();
    std::vector<HouseholdRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        const bool labour_ok =
            (r.employment_class == EmploymentClass::Entrepreneur &&
             r.hired_workers <= config.max_hired_workers) ||
            r.employment_class == EmploymentClass::Unremunerated;
        if (!labour_ok) continue;

        auto th = config.area_threshold_by_state.find(r.state);
        if (th == config.area_threshold_by_state.end())
            throw ConfigError("no area threshold configured for state '" + r.state + "'");
        if (!(r.farm_area < th->second)) continue;

        if (!r.annual_gross_income.has_value()) continue;  // unverifiable income fails
        if (!(*r.annual_gross_income < config.income_ceiling)) continue;

        out.push_back(r);
    }
    return out;
}

std::vector<HouseholdRecord> exclude_private_services(const std::vector<HouseholdRecord>& records) {
    std::vector<HouseholdRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (r.private_credit == 0 && r.private_assistance == 0) out.push_back(r);
    return out;
}

std::vector<HouseholdRecord> drop_missing_outcome(const std::vector<HouseholdRecord>& records) {
    std::vector<HouseholdRecord> out;
    out.reserve(records.size());
    for (const auto& r : records)
        if (r.sold_output.has_value()) out.push_back(r);
    return out;
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Get>
int binary_majority(const std::vector<HouseholdRecord>& records, Get get,
                    const std::string& column) {
    std::size_t ones = 0, zeros = 0;
    for (const auto& r : records) {
        const auto v = get(r);
        if (!v.has_value()) continue;
        (*v == 1 ? ones : zeros)++;
    }
    if (ones + zeros == 0)
        throw EstimationError("cannot impute '" + column + "': column is entirely missing");
    return ones > zeros ? 1 : 0;  // ties resolve to 0
}

template <typename Get>
double column_median(const std::vector<HouseholdRecord>& records, Get get,
                     const std::string& column) {
    std::vector<double> vals;
    vals.reserve(records.size());
    for (const auto& r : records) {
        const auto v = get(r);
        if (v.has_value()) vals.push_back(*v);
    }
    if (vals.empty())
        throw EstimationError("cannot impute '" + column + "': column is entirely missing");
    return median_of(std::move(vals));
}

bool any_covariate_missing(const HouseholdRecord& r) {
    return !r.mobile_phone.has_value() || !r.internet.has_value() || !r.transport.has_value() ||
           !r.farm_income.has_value() || !r.other_income.has_value();
}

}  // namespace

std::vector<HouseholdRecord> impute_missing(const std::vector<HouseholdRecord>& records,
                                            const FilterConfig& config) {
    if (config.imputation == Imputation::None) {
        std::vector<HouseholdRecord> out;
        out.reserve(records.size());
        for (const auto& r : records)
            if (!any_covariate_missing(r)) out.push_back(r);
        return out;
    }

    std::vector<HouseholdRecord> out = records;
    bool need_mobile = false, need_internet = false, need_transport = false;
    bool need_farm = false, need_other = false;
    for (const auto& r : records) {
        need_mobile |= !r.mobile_phone.has_value();
        need_internet |= !r.internet.has_value();
        need_transport |= !r.transport.has_value();
        need_farm |= !r.farm_income.has_value();
        need_other |= !r.other_income.has_value();
    }
    const int mobile_fill =
        need_mobile
            ? binary_majority(records, [](const auto& r) { return r.mobile_phone; }, "mobile_phone")
            : 0;
    const int internet_fill =
        need_internet
            ? binary_majority(records, [](const auto& r) { return r.internet; }, "internet")
            : 0;
    const int transport_fill =
        need_transport
            ? binary_majority(records, [](const auto& r) { return r.transport; }, "transport")
            : 0;
    const double farm_fill =
        need_farm ? column_median(records, [](const auto& r) { return r.farm_income; }, "farm_income")
                  : 0.0;
    const double other_fill =
        need_other
            ? column_median(records, [](const auto& r) { return r.other_income; }, "other_income")
            : 0.0;

    for (auto& r : out) {
        if (!r.mobile_phone.has_value()) r.mobile_phone = mobile_fill;
        if (!r.internet.has_value()) r.internet = internet_fill;
        if (!r.transport.has_value()) r.transport = transport_fill;
        if (!r.farm_income.has_value()) r.farm_income = farm_fill;
        if (!r.other_income.has_value()) r.other_income = other_fill;
    }
    return out;
}

std::pair<std::vector<HouseholdRecord>, std::vector<HouseholdRecord>> split_by_area(
    const std::vector<HouseholdRecord>& records, double threshold) {
    if (threshold <= 0.0) throw ConfigError("area split threshold must be positive");
    std::vector<HouseholdRecord> below, at_or_above;
    for (const auto& r : records) (r.farm_area < threshold ? below : at_or_above).push_back(r);
    return {std::move(below), std::move(at_or_above)};
}

namespace {

// Shortest decimal string that round-trips to the same double.
std::string fmt_double(double v) {
    char buf[40];
    for (int prec = 15; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::stod(buf) == v) break;
    }
    return buf;
}

std::string csv_cell(const std::string& s, char delim) {
    if (s.find(delim) == std::string::npos && s.find('"') == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    q += '"';
    return q;
}

}  // namespace

void write_records_csv(const std::vector<HouseholdRecord>& records, std::ostream& out,
                       char delimiter) {
    const auto& names = schema_field_names();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out << delimiter;
        out << names[i];
    }
    out << '\n';
    auto opt_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : ""; };
    auto opt_real = [](const std::optional<double>& v) { return v ? fmt_double(*v) : ""; };
    for (const auto& r : records) {
        out << csv_cell(r.id, delimiter) << delimiter << r.age << delimiter << r.gender_man
            << delimiter << fmt_double(r.farm_area) << delimiter << r.race_white << delimiter
            << r.education << delimiter << r.household_size << delimiter
            << opt_int(r.mobile_phone) << delimiter << opt_int(r.internet) << delimiter
            << opt_int(r.transport) << delimiter << opt_real(r.farm_income) << delimiter
            << opt_real(r.other_income) << delimiter << to_string(r.macro_region) << delimiter
            << r.pronaf << delimiter << r.ater << delimiter << r.seeds << delimiter
            << r.private_credit << delimiter << r.private_assistance << delimiter
            << r.hired_workers << delimiter << to_string(r.employment_class) << delimiter
            << csv_cell(r.state, delimiter) << delimiter << opt_real(r.annual_gross_income)
            << delimiter << opt_int(r.sold_output) << '\n';
    }
}

void write_records_csv_file(const std::vector<HouseholdRecord>& records, const std::string& path,
                            char delimiter) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open output file '" + path + "'");
    write_records_csv(records, out, delimiter);
}

}  // namespace policymix::dataset
