/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "hunod/feature_engineering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "hunod/error.hpp"

namespace hunod {

namespace {

const char* kIncomeNames[] = {"salary",        "sick_leave", "dividend", "interest", "rent",
                              "author",        "temporary_work", "service_contract", "other"};

double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Sample (n-1) standard deviation; 0 for fewer than two observations.
double stdev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double ratio_or_zero(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

const char* income_type_name(IncomeType t) { return kIncomeNames[static_cast<int>(t)]; }

IncomeType income_type_from_name(const std::string& name) {
    for (int i = 0; i < 9; ++i)
        if (name == kIncomeNames[i]) return static_cast<IncomeType>(i);
    throw_data("unknown income type '" + name + "'");
}

std::vector<YearMonth> FeatureConfig::window() const {
    std::vector<YearMonth> months;
    YearMonth ym = window_start;
    for (int i = 0; i < window_months; ++i) {
        months.push_back(ym);
        ym = ym.next();
    }
    return months;
}

const std::vector<std::string>& monthly_family_names() {
    static const std::vector<std::string> names = {
        "average_salary", "median_salary",     "stdev_salary",     "fraction_b26r",
        "capital_labor",  "fbs",               "tbs",              "fball",
        "total_employees", "total_persons",    "avg_age",          "avg_age_salary",
        "avg_age_sick_leave", "avg_age_service_fee", "avg_age_rent", "avg_age_owner_income",
        "avg_age_author", "avg_age_other"};
    return names;
}

std::vector<double> monthly_feature_values(const MonthlyFeatures& m) {
    return {m.average_salary, m.median_salary,     m.stdev_salary,     m.fraction_b26r,
            m.capital_labor,  m.fbs,               m.tbs,              m.fball,
            m.total_employees, m.total_persons,    m.avg_age,          m.avg_age_salary,
            m.avg_age_sick_leave, m.avg_age_service_fee, m.avg_age_rent, m.avg_age_owner_income,
            m.avg_age_author, m.avg_age_other};
}

double fraction_b26r(std::span<const double> salaries, double cap) {
    if (cap <= 0.0) throw_config("fraction_b26r: cap must be positive");
    double below = 0.0, above = 0.0;
    for (double s : salaries) (s < cap ? below : above) += s;
    const double total = below + above;
    return total > 0.0 ? (below - above) / total : 0.0;
}

double capital_labor(double dividends, double salaries_plus_profit) {
    return ratio_or_zero(dividends, salaries_plus_profit);
}

FiscalBurdens fiscal_burdens(std::span<const DeclarationRecord> month_records) {
    double salary_gross = 0.0, salary_tax = 0.0, salary_duties = 0.0;
    double all_gross = 0.0, all_duties = 0.0;
    for (const auto& rec : month_records) {
        all_gross += rec.gross_amount;
        all_duties += rec.duties();
        if (rec.income_type == IncomeType::Salary) {
            salary_gross += rec.gross_amount;
            salary_tax += rec.tax_paid;
            salary_duties += rec.duties();
        }
    }
    FiscalBurdens fb;
    fb.fbs = ratio_or_zero(salary_duties, salary_gross);
    fb.tbs = ratio_or_zero(salary_tax, salary_gross);
    fb.fball = ratio_or_zero(all_duties, all_gross);
    return fb;
}

MonthlyFeatures aggregate_entity_month(std::span<const DeclarationRecord> records,
                                       const FeatureConfig& cfg) {
    MonthlyFeatures out;
    if (records.empty()) return out;

    const int reference_year = records.front().year_month.year;

    std::vector<double> salaries;
    double dividends = 0.0;
    std::set<std::string> employees, persons;
    // Distinct-person age accumulation, overall and per income category.
    std::map<std::string, int> person_age;
    std::map<IncomeType, std::map<std::string, int>> category_age;

    for (const auto& rec : records) {
        const int age = reference_year - rec.receiver_birth_year;
        persons.insert(rec.pid);
        person_age[rec.pid] = age;
        category_age[rec.income_type][rec.pid] = age;
        switch (rec.income_type) {
            case IncomeType::Salary:
                salaries.push_back(rec.gross_amount);
                employees.insert(rec.pid);
                break;
            case IncomeType::SickLeave:
                if (cfg.employees_include_sick_leave) employees.insert(rec.pid);
                break;
            case IncomeType::Dividend:
                dividends += rec.gross_amount;
                break;
            default:
                break;
        }
    }

    double salary_sum = 0.0;
    for (double s : salaries) salary_sum += s;

    out.average_salary = mean_of(salaries);
    out.median_salary = median_of(salaries);
    out.stdev_salary = stdev_of(salaries);
    out.fraction_b26r = fraction_b26r(salaries, cfg.cap());
    out.capital_labor = capital_labor(dividends, salary_sum + dividends);
    const FiscalBurdens fb = fiscal_burdens(records);
    out.fbs = fb.fbs;
    out.tbs = fb.tbs;
    out.fball = fb.fball;
    out.total_employees = static_cast<double>(employees.size());
    out.total_persons = static_cast<double>(persons.size());

    auto mean_age = [](const std::map<std::string, int>& ages) {
        if (ages.empty()) return 0.0;
        double s = 0.0;
        for (const auto& [pid, age] : ages) s += age;
        return s / static_cast<double>(ages.size());
    };
    out.avg_age = mean_age(person_age);
    out.avg_age_salary = mean_age(category_age[IncomeType::Salary]);
    out.avg_age_sick_leave = mean_age(category_age[IncomeType::SickLeave]);
    out.avg_age_service_fee = mean_age(category_age[IncomeType::ServiceContract]);
    out.avg_age_rent = mean_age(category_age[IncomeType::Rent]);
    out.avg_age_owner_income = mean_age(category_age[IncomeType::Dividend]);
    out.avg_age_author = mean_age(category_age[IncomeType::Author]);
    // Interest and temporary work fall under "other" together with the
    // explicit other category.
    {
        std::map<std::string, int> other = category_age[IncomeType::Other];
        for (const auto& [pid, age] : category_age[IncomeType::Interest]) other[pid] = age;
        for (const auto& [pid, age] : category_age[IncomeType::TemporaryWork]) other[pid] = age;
        out.avg_age_other = mean_age(other);
    }
    return out;
}

void validate_declarations(const std::vector<DeclarationRecord>& records,
                           const FeatureConfig& cfg) {
    const auto window = cfg.window();
    for (const auto& rec : records) {
        if (rec.gross_amount < 0.0 || rec.tax_paid < 0.0 || rec.health_contrib < 0.0 ||
            rec.pension_contrib < 0.0 || rec.unemployment_contrib < 0.0)
            throw_data("negative amount in declaration for tin '" + rec.tin + "'");
        if (std::find(window.begin(), window.end(), rec.year_month) == window.end())
            throw_data("declaration for tin '" + rec.tin + "' outside the " +
                       std::to_string(cfg.window_months) + "-month window");
    }
}

FeatureTable build_feature_table(const std::vector<DeclarationRecord>& declarations,
                                 const FeatureConfig& cfg) {
    if (declarations.empty()) throw_data("build_feature_table: no declarations");
    validate_declarations(declarations, cfg);

    const auto window = cfg.window();
    const int reference_year = window.back().year;

    // Group by tin, then by month. std::map keeps the output sorted by tin.
    std::map<std::string, std::map<YearMonth, std::vector<DeclarationRecord>>> by_tin;
    std::map<std::string, const DeclarationRecord*> entity_info;
    for (const auto& rec : declarations) {
        by_tin[rec.tin][rec.year_month].push_back(rec);
        entity_info.emplace(rec.tin, &rec);
    }

    const auto& families = monthly_family_names();
    FeatureTable table;
    auto& raw = table.rows;

    RawColumn age_col{"age_of_tin", false, {}, {}};
    RawColumn nace_col{"nace", true, {}, {}};
    RawColumn org_col{"org_type", true, {}, {}};
    std::vector<RawColumn> monthly_cols;
    for (const auto& family : families)
        for (const auto& ym : window)
            monthly_cols.push_back(RawColumn{family + "_" + ym.suffix(), false, {}, {}});
    RawColumn capital_labor_12m{"capital_labor_12m", false, {}, {}};

    for (const auto& [tin, months] : by_tin) {
        raw.ids.push_back(tin);
        const DeclarationRecord* info = entity_info.at(tin);
        age_col.numeric.push_back(static_cast<double>(reference_year - info->payer_founded_year));
        nace_col.categories.push_back(info->payer_nace);
        org_col.categories.push_back(info->payer_org_type);

        double window_salaries = 0.0, window_dividends = 0.0;
        double max_employees = 0.0;
        std::size_t col = 0;
        std::vector<MonthlyFeatures> per_month;
        for (const auto& ym : window) {
            auto it = months.find(ym);
            MonthlyFeatures m;
            if (it != months.end()) {
                m = aggregate_entity_month(it->second, cfg);
                for (const auto& rec : it->second) {
                    if (rec.income_type == IncomeType::Salary) window_salaries += rec.gross_amount;
                    if (rec.income_type == IncomeType::Dividend) window_dividends += rec.gross_amount;
                }
            }
            max_employees = std::max(max_employees, m.total_employees);
            per_month.push_back(m);
        }
        for (std::size_t f = 0; f < families.size(); ++f)
            for (std::size_t mi = 0; mi < window.size(); ++mi)
                monthly_cols[col++].numeric.push_back(
                    monthly_feature_values(per_month[mi])[f]);
        capital_labor_12m.numeric.push_back(
            capital_labor(window_dividends, window_salaries + window_dividends));

        if (max_employees >= static_cast<double>(cfg.employee_cutoff))
            table.a10_tins.push_back(tin);
        else
            table.l10_tins.push_back(tin);
    }

    raw.columns.push_back(std::move(age_col));
    raw.columns.push_back(std::move(nace_col));
    raw.columns.push_back(std::move(org_col));
    for (auto& col : monthly_cols) raw.columns.push_back(std::move(col));
    raw.columns.push_back(std::move(capital_labor_12m));
    return table;
}

Dataset select_rows(const Dataset& data, const std::vector<std::string>& tins) {
    std::map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < data.size(); ++r) row_of[data.ids()[r]] = r;
    std::vector<std::string> ids;
    std::vector<double> values;
    values.reserve(tins.size() * data.dim());
    for (const auto& tin : tins) {
        auto it = row_of.find(tin);
        if (it == row_of.end()) throw_data("select_rows: unknown tin '" + tin + "'");
        ids.push_back(tin);
        const double* row = data.row(it->second);
        values.insert(values.end(), row, row + data.dim());
    }
    return Dataset(data.schema(), std::move(ids), std::move(values));
}

std::vector<double> scoring_indicator(const Dataset& features, const FeatureConfig& cfg) {
    std::vector<std::size_t> fball_cols;
    for (const auto& ym : cfg.window())
        fball_cols.push_back(features.schema().index_of("fball_" + ym.suffix()));
    std::vector<double> scores(features.size(), 0.0);
    for (std::size_t r = 0; r < features.size(); ++r) {
        double s = 0.0;
        for (std::size_t c : fball_cols) s += features.at(r, c);
        scores[r] = s / static_cast<double>(fball_cols.size());
    }
    return scores;
}

csv::Table declarations_to_csv(const std::vector<DeclarationRecord>& records) {
    csv::Table table;
    table.header = {"tin",           "pid",
                    "year_month",    "income_type",
                    "gross_amount",  "tax_paid",
                    "health_contrib", "pension_contrib",
                    "unemployment_contrib", "payer_nace",
                    "payer_org_type", "payer_founded_year",
                    "receiver_birth_year", "receiver_gender",
                    "receiver_municipality"};
    for (const auto& rec : records) {
        char ym[16];
        std::snprintf(ym, sizeof(ym), "%04d-%02d", rec.year_month.year, rec.year_month.month);
        table.rows.push_back({rec.tin, rec.pid, ym, income_type_name(rec.income_type),
                              csv::format_double(rec.gross_amount), csv::format_double(rec.tax_paid),
                              csv::format_double(rec.health_contrib),
                              csv::format_double(rec.pension_contrib),
                              csv::format_double(rec.unemployment_contrib), rec.payer_nace,
                              rec.payer_org_type, std::to_string(rec.payer_founded_year),
                              std::to_string(rec.receiver_birth_year), rec.receiver_gender,
                              rec.receiver_municipality});
    }
    return table;
}

std::vector<DeclarationRecord> declarations_from_csv(const csv::Table& table) {
    std::vector<DeclarationRecord> records;
    const auto col = [&table](const char* name) { return table.column_index(name); };
    const std::size_t c_tin = col("tin"), c_pid = col("pid"), c_ym = col("year_month"),
                      c_type = col("income_type"), c_gross = col("gross_amount"),
                      c_tax = col("tax_paid"), c_health = col("health_contrib"),
                      c_pension = col("pension_contrib"), c_unemp = col("unemployment_contrib"),
                      c_nace = col("payer_nace"), c_org = col("payer_org_type"),
                      c_founded = col("payer_founded_year"), c_birth = col("receiver_birth_year"),
                      c_gender = col("receiver_gender"), c_muni = col("receiver_municipality");
    for (const auto& row : table.rows) {
        DeclarationRecord rec;
        rec.tin = row[c_tin];
        rec.pid = row[c_pid];
        const std::string& ym = row[c_ym];
        if (ym.size() != 7 || ym[4] != '-') throw_data("bad year_month '" + ym + "'");
        rec.year_month.year = static_cast<int>(csv::parse_long(ym.substr(0, 4), "year_month"));
        rec.year_month.month = static_cast<int>(csv::parse_long(ym.substr(5, 2), "year_month"));
        rec.income_type = income_type_from_name(row[c_type]);
        rec.gross_amount = csv::parse_double(row[c_gross], "gross_amount");
        rec.tax_paid = csv::parse_double(row[c_tax], "tax_paid");
        rec.health_contrib = csv::parse_double(row[c_health], "health_contrib");
        rec.pension_contrib = csv::parse_double(row[c_pension], "pension_contrib");
        rec.unemployment_contrib = csv::parse_double(row[c_unemp], "unemployment_contrib");
        rec.payer_nace = row[c_nace];
        rec.payer_org_type = row[c_org];
        rec.payer_founded_year = static_cast<int>(csv::parse_long(row[c_founded], "payer_founded_year"));
        rec.receiver_birth_year = static_cast<int>(csv::parse_long(row[c_birth], "receiver_birth_year"));
        rec.receiver_gender = row[c_gender];
        rec.receiver_municipality = row[c_muni];
        records.push_back(std::move(rec));
    }
    return records;
}

}  // namespace hunod
