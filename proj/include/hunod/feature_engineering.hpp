/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <span>
#include <string>
#include <vector>

#include "hunod/data_model.hpp"

namespace hunod {

enum class IncomeType {
    Salary,
    SickLeave,
    Dividend,
    Interest,
    Rent,
    Author,
    TemporaryWork,
    ServiceContract,
    Other
};

const char* income_type_name(IncomeType t);
IncomeType income_type_from_name(const std::string& name);

struct YearMonth {
    int year = 0;
    int month = 0;  // 1..12

    YearMonth next() const { return month == 12 ? YearMonth{year + 1, 1} : YearMonth{year, month + 1}; }
    bool operator==(const YearMonth&) const = default;
    auto operator<=>(const YearMonth&) const = default;

    /// Paper-style suffix: (2016, 4) -> "16m4".
    std::string suffix() const { return std::to_string(year % 100) + "m" + std::to_string(month); }
};

/// One individual monthly income-tax declaration row.
struct DeclarationRecord {
    std::string tin;
    std::string pid;
    YearMonth year_month;
    IncomeType income_type = IncomeType::Salary;
    double gross_amount = 0.0;
    double tax_paid = 0.0;
    double health_contrib = 0.0;
    double pension_contrib = 0.0;
    double unemployment_contrib = 0.0;
    std::string payer_nace;
    std::string payer_org_type;
    int payer_founded_year = 0;
    int receiver_birth_year = 0;
    std::string receiver_gender;
    std::string receiver_municipality;

    double contributions() const { return health_contrib + pension_contrib + unemployment_contrib; }
    double duties() const { return tax_paid + contributions(); }
};

struct FeatureConfig {
    YearMonth window_start{2016, 3};
    int window_months = 13;
    double average_salary = 60000.0;       // statutory period average, sets the contribution cap
    double cap_multiple = 5.0;             // "five time average salary"
    int employee_cutoff = 10;              // L10 / A10 split
    bool employees_include_sick_leave = false;

    double cap() const { return cap_multiple * average_salary; }
    std::vector<YearMonth> window() const;
};

struct ScoringConfig {
    double threshold = 0.30;
    std::string indicator = "fball_mean";  // mean of the 13 fball columns
};

/// Values of the monthly feature families for one entity and month.
struct MonthlyFeatures {
    double average_salary = 0.0;
    double median_salary = 0.0;
    double stdev_salary = 0.0;
    double fraction_b26r = 0.0;
    double capital_labor = 0.0;
    double fbs = 0.0;
    double tbs = 0.0;
    double fball = 0.0;
    double total_employees = 0.0;
    double total_persons = 0.0;
    double avg_age = 0.0;
    double avg_age_salary = 0.0;
    double avg_age_sick_leave = 0.0;
    double avg_age_service_fee = 0.0;
    double avg_age_rent = 0.0;
    double avg_age_owner_income = 0.0;
    double avg_age_author = 0.0;
    double avg_age_other = 0.0;
};

/// Names of the monthly families, in emission order.
const std::vector<std::string>& monthly_family_names();
std::vector<double> monthly_feature_values(const MonthlyFeatures& m);

struct FiscalBurdens {
    double fbs = 0.0;
    double tbs = 0.0;
    double fball = 0.0;
};

/// (S25 - O26) / (S25 + O26) over salary masses below / at-or-above the cap;
/// 0 when the entity paid no salaries.
double fraction_b26r(std::span<const double> salaries, double cap);

/// d / S with a guarded denominator (0 when S == 0).
double capital_labor(double dividends, double salaries_plus_profit);

FiscalBurdens fiscal_burdens(std::span<const DeclarationRecord> month_records);

/// All monthly families for the records of one tin+month. Empty input yields
/// the all-zero row (the "no activity" encoding).
MonthlyFeatures aggregate_entity_month(std::span<const DeclarationRecord> records,
                                       const FeatureConfig& cfg);

struct FeatureTable {
    RawTable rows;                      // one row per tin, static categoricals unexpanded
    std::vector<std::string> l10_tins;  // max monthly employees < cutoff
    std::vector<std::string> a10_tins;  // max monthly employees >= cutoff
};

FeatureTable build_feature_table(const std::vector<DeclarationRecord>& declarations,
                                 const FeatureConfig& cfg);

/// Subset of a one-hot-encoded feature table restricted to the given tins.
Dataset select_rows(const Dataset& data, const std::vector<std::string>& tins);

/// Mean of the 13 fball columns, per instance.
std::vector<double> scoring_indicator(const Dataset& features, const FeatureConfig& cfg);

// Declarations CSV round trip (schema in docs/formats.md).
csv::Table declarations_to_csv(const std::vector<DeclarationRecord>& records);
std::vector<DeclarationRecord> declarations_from_csv(const csv::Table& table);

/// Validates record-level invariants (non-negative amounts, window membership).
void validate_declarations(const std::vector<DeclarationRecord>& records, const FeatureConfig& cfg);

}  // namespace hunod
