#pragma once

#include <optional>
#include <string>

namespace policymix {

enum class MacroRegion { North, Northeast, CentralWest, Southeast, South };
inline constexpr int kNumRegions = 5;

enum class EmploymentClass { Entrepreneur, Unremunerated, Other };

const char* to_string(MacroRegion r);
const char* to_string(EmploymentClass e);
MacroRegion macro_region_from_string(const std::string& s);
EmploymentClass employment_class_from_string(const std::string& s);

// One survey household. Fields that can be missing in the source data are
// optionals; everything else is mandatory at parse time.
struct HouseholdRecord {
    std::string id;
    int age = 0;
    int gender_man = 0;
    double farm_area = 0.0;  // square metres
    int race_white = 0;
    int education = 0;
    int household_size = 1;
    std::optional<int> mobile_phone;
    std::optional<int> internet;
    std::optional<int> transport;
    std::optional<double> farm_income;   // currency units / month
    std::optional<double> other_income;  // currency units / month
    MacroRegion macro_region = MacroRegion::Northeast;
    int pronaf = 0;
    int ater = 0;
    int seeds = 0;
    int private_credit = 0;
    int private_assistance = 0;
    int hired_workers = 0;
    EmploymentClass employment_class = EmploymentClass::Other;
    std::string state;
    std::optional<double> annual_gross_income;  // currency units / year
    std::optional<int> sold_output;             // outcome; never imputed
};

}  // namespace policymix
