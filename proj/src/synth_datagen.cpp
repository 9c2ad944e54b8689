/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "hunod/synth_datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <set>

#include "hunod/data_model.hpp"
#include "hunod/error.hpp"
#include "hunod/rng.hpp"

namespace hunod::gen {

namespace {

const char* kKindNames[] = {"cap_arbitrage", "dividend_substitution", "low_fiscal_burden",
                            "sparse_payments"};

std::vector<SectorProfile> default_sectors() {
    // One dominant tight sector keeps at least one large K-means cluster even
    // for the top of the K grid; the rest add moderate spread.
    return {
        {"4711", 11.00, 0.06, 0.40}, {"6201", 11.35, 0.08, 0.15}, {"4120", 10.90, 0.08, 0.15},
        {"4932", 10.75, 0.07, 0.12}, {"5610", 10.70, 0.07, 0.10}, {"8690", 11.10, 0.08, 0.08},
    };
}

std::vector<std::string> default_org_types() { return {"10", "14", "20", "30"}; }

std::string tin_id(std::size_t i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "T%06zu", i);
    return buf;
}

struct Entity {
    std::string tin;
    std::size_t sector = 0;
    std::string org_type;
    int founded_year = 2000;
    std::vector<std::string> pids;
    std::vector<int> birth_years;
    // -1 normal, -2 borderline, otherwise index into the anomaly plan
    int role = -1;
};

}  // namespace

const char* anomaly_kind_name(AnomalyKind k) { return kKindNames[static_cast<int>(k)]; }

AnomalyKind anomaly_kind_from_name(const std::string& name) {
    for (int i = 0; i < 4; ++i)
        if (name == kKindNames[i]) return static_cast<AnomalyKind>(i);
    throw_config("unknown anomaly kind '" + name + "'");
}

void GeneratorConfig::validate() const {
    if (n_entities == 0) throw_config("n_entities must be positive");
    double total_rate = borderline_rate;
    for (const auto& spec : anomaly_plan) {
        if (!(spec.rate > 0.0 && spec.rate < 1.0))
            throw_config("anomaly rate must lie in (0, 1)");
        total_rate += spec.rate;
    }
    if (total_rate >= 1.0) throw_config("anomaly rates sum to >= 1");
    const double burden = tax_rate + health_rate + pension_rate + unemployment_rate;
    if (burden < 0.30)
        throw_config("statutory rates give fiscal burden below the scoring threshold");
}

FeatureConfig GeneratorConfig::feature_config() const {
    FeatureConfig fc;
    fc.window_start = window_start;
    fc.window_months = window_months;
    fc.average_salary = average_salary;
    fc.cap_multiple = cap_multiple;
    return fc;
}

GeneratorConfig GeneratorConfig::with_default_plan() {
    GeneratorConfig cfg;
    cfg.anomaly_plan = {{AnomalyKind::CapArbitrage, 0.01, 1.0},
                        {AnomalyKind::DividendSubstitution, 0.01, 1.0},
                        {AnomalyKind::LowFiscalBurden, 0.01, 1.0},
                        {AnomalyKind::SparsePayments, 0.01, 1.0}};
    return cfg;
}

GeneratedData generate(const GeneratorConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    const auto sectors = cfg.sectors.empty() ? default_sectors() : cfg.sectors;
    const auto org_types = cfg.org_types.empty() ? default_org_types() : cfg.org_types;
    const auto window = cfg.feature_config().window();
    const double cap = cfg.average_salary * cfg.cap_multiple;
    const double normal_burden =
        cfg.tax_rate + cfg.health_rate + cfg.pension_rate + cfg.unemployment_rate;

    std::vector<double> sector_weights;
    for (const auto& s : sectors) sector_weights.push_back(s.weight);

    // Entity roster.
    std::vector<Entity> entities(cfg.n_entities);
    for (std::size_t i = 0; i < cfg.n_entities; ++i) {
        Entity& e = entities[i];
        e.tin = tin_id(i);
        e.sector = rng.weighted_index(sector_weights);
        e.org_type = org_types[rng.uniform_index(org_types.size())];
        e.founded_year = cfg.founded_year_min +
                         static_cast<int>(rng.uniform_index(
                             static_cast<std::size_t>(cfg.founded_year_span)));
        std::size_t n_emp;
        if (cfg.large_entity_rate > 0.0 && rng.bernoulli(cfg.large_entity_rate))
            n_emp = 10 + rng.uniform_index(25);
        else
            n_emp = cfg.min_employees +
                    rng.uniform_index(cfg.max_employees - cfg.min_employees + 1);
        for (std::size_t j = 0; j < n_emp; ++j) {
            char pid[24];
            std::snprintf(pid, sizeof(pid), "%sP%03zu", e.tin.c_str(), j);
            e.pids.push_back(pid);
            e.birth_years.push_back(cfg.birth_year_min +
                                    static_cast<int>(rng.uniform_index(
                                        static_cast<std::size_t>(cfg.birth_year_span))));
        }
    }

    // Role assignment: shuffle once, then hand out contiguous blocks.
    {
        std::vector<std::size_t> order(cfg.n_entities);
        std::iota(order.begin(), order.end(), 0);
        rng.shuffle(order);
        std::size_t cursor = 0;
        for (std::size_t a = 0; a < cfg.anomaly_plan.size(); ++a) {
            const std::size_t count = static_cast<std::size_t>(
                std::llround(cfg.anomaly_plan[a].rate * static_cast<double>(cfg.n_entities)));
            for (std::size_t j = 0; j < count && cursor < cfg.n_entities; ++j)
                entities[order[cursor++]].role = static_cast<int>(a);
        }
        const std::size_t borderline = static_cast<std::size_t>(
            std::llround(cfg.borderline_rate * static_cast<double>(cfg.n_entities)));
        for (std::size_t j = 0; j < borderline && cursor < cfg.n_entities; ++j)
            entities[order[cursor++]].role = -2;
    }
    if (!cfg.borderline_nace.empty() || !cfg.borderline_org_type.empty()) {
        std::size_t fixed_sector = 0;
        for (std::size_t s = 0; s < sectors.size(); ++s)
            if (sectors[s].nace == cfg.borderline_nace) fixed_sector = s;
        for (auto& e : entities) {
            if (e.role != -2) continue;
            if (!cfg.borderline_nace.empty()) e.sector = fixed_sector;
            if (!cfg.borderline_org_type.empty()) e.org_type = cfg.borderline_org_type;
        }
    }

    GeneratedData out;
    auto emit = [&out](const Entity& e, std::size_t person, const YearMonth& ym, IncomeType type,
                       double gross, double tax, double health, double pension, double unemp) {
        DeclarationRecord rec;
        rec.tin = e.tin;
        rec.pid = e.pids[person];
        rec.year_month = ym;
        rec.income_type = type;
        rec.gross_amount = gross;
        rec.tax_paid = tax;
        rec.health_contrib = health;
        rec.pension_contrib = pension;
        rec.unemployment_contrib = unemp;
        // payer_nace / payer_org_type filled in after generation.
        rec.payer_founded_year = e.founded_year;
        rec.receiver_birth_year = e.birth_years[person];
        rec.receiver_gender = (person % 2) ? "F" : "M";
        rec.receiver_municipality = "M" + std::to_string(1 + person % 17);
        out.records.push_back(std::move(rec));
    };

    for (const auto& e : entities) {
        const SectorProfile& sector = sectors[e.sector];
        const AnomalySpec* spec = e.role >= 0 ? &cfg.anomaly_plan[e.role] : nullptr;
        if (spec) out.ground_truth.emplace(e.tin, spec->kind);

        // Salary draw kept clear of the cap so the normal population's b26r
        // stays exactly at 1.
        auto draw_salary = [&]() {
            double s = rng.lognormal(sector.salary_log_mu, sector.salary_log_sigma);
            return std::min(s, 0.80 * cap);
        };
        auto salary_record = [&](std::size_t person, const YearMonth& ym, double gross,
                                 double burden_scale) {
            emit(e, person, ym, IncomeType::Salary, gross, gross * cfg.tax_rate * burden_scale,
                 gross * cfg.health_rate * burden_scale, gross * cfg.pension_rate * burden_scale,
                 gross * cfg.unemployment_rate * burden_scale);
        };

        for (std::size_t mi = 0; mi < window.size(); ++mi) {
            const YearMonth& ym = window[mi];
            const double mag = spec ? std::max(1.0, spec->magnitude) : 1.0;

            if (spec == nullptr) {
                const double scale = e.role == -2 ? cfg.borderline_burden / normal_burden : 1.0;
                for (std::size_t j = 0; j < e.pids.size(); ++j)
                    salary_record(j, ym, draw_salary(), scale);
                if (cfg.occasional_income_rate > 0.0 &&
                    rng.bernoulli(cfg.occasional_income_rate)) {
                    // Occasional non-salary income at the same overall burden.
                    const double gross = rng.lognormal(sector.salary_log_mu - 0.7, 0.2);
                    const IncomeType type =
                        rng.bernoulli(0.5) ? IncomeType::ServiceContract : IncomeType::Rent;
                    emit(e, rng.uniform_index(e.pids.size()), ym, type, gross,
                         gross * normal_burden * (e.role == -2 ? cfg.borderline_burden / normal_burden
                                                               : 1.0),
                         0.0, 0.0, 0.0);
                }
                continue;
            }

            switch (spec->kind) {
                case AnomalyKind::CapArbitrage: {
                    // Salaries far above the contribution cap; duties computed
                    // only on the capped base.
                    // Deterministic per-employee ladder keeps the affected
                    // entities' monthly salary summaries identical.
                    for (std::size_t j = 0; j < e.pids.size(); ++j) {
                        const double gross = cap * (1.0 + mag + 0.5 * static_cast<double>(j));
                        const double contrib_base = cap;
                        emit(e, j, ym, IncomeType::Salary, gross, gross * cfg.tax_rate,
                             contrib_base * cfg.health_rate, contrib_base * cfg.pension_rate,
                             contrib_base * cfg.unemployment_rate);
                    }
                    break;
                }
                case AnomalyKind::DividendSubstitution: {
                    // Staff is paid normally; the owner extracts profit as a
                    // large monthly dividend at the flat capital-income rate.
                    for (std::size_t j = 0; j < e.pids.size(); ++j)
                        salary_record(j, ym, draw_salary(), 1.0);
                    const double dividend =
                        (6.0 * mag + rng.uniform(0.0, 2.0)) * cfg.average_salary;
                    emit(e, 0, ym, IncomeType::Dividend, dividend, dividend * 0.15, 0.0, 0.0, 0.0);
                    break;
                }
                case AnomalyKind::LowFiscalBurden: {
                    const double scale = 0.05 / (normal_burden * mag);
                    for (std::size_t j = 0; j < e.pids.size(); ++j)
                        salary_record(j, ym, draw_salary(), scale);
                    break;
                }
                case AnomalyKind::SparsePayments: {
                    // Activity only in three window months.
                    if (mi == 0 || mi == window.size() / 2 || mi + 1 == window.size())
                        for (std::size_t j = 0; j < e.pids.size(); ++j)
                            salary_record(j, ym, draw_salary(), 1.0);
                    break;
                }
            }
        }
    }

    // Sector / org metadata on every record (set here so the emit helper stays
    // small).
    {
        std::map<std::string, const Entity*> by_tin;
        for (const auto& e : entities) by_tin[e.tin] = &e;
        for (auto& rec : out.records) {
            const Entity* e = by_tin.at(rec.tin);
            rec.payer_nace = sectors[e->sector].nace;
            rec.payer_org_type = e->org_type;
        }
    }
    return out;
}

std::vector<SeparationCheck> verify_separation(const GeneratedData& data,
                                               const GeneratorConfig& cfg,
                                               double required_sigmas) {
    const FeatureConfig fc = cfg.feature_config();
    const FeatureTable table = build_feature_table(data.records, fc);
    const Dataset features = one_hot_encode(table.rows);
    const auto window = fc.window();

    auto column_mean_per_row = [&](const std::string& family) {
        std::vector<std::size_t> cols;
        for (const auto& ym : window)
            cols.push_back(features.schema().index_of(family + "_" + ym.suffix()));
        std::vector<double> out(features.size(), 0.0);
        for (std::size_t r = 0; r < features.size(); ++r) {
            double s = 0.0;
            for (std::size_t c : cols) s += features.at(r, c);
            out[r] = s / static_cast<double>(cols.size());
        }
        return out;
    };
    auto active_months_per_row = [&]() {
        std::vector<std::size_t> cols;
        for (const auto& ym : window)
            cols.push_back(features.schema().index_of("total_persons_" + ym.suffix()));
        std::vector<double> out(features.size(), 0.0);
        for (std::size_t r = 0; r < features.size(); ++r) {
            double active = 0.0;
            for (std::size_t c : cols)
                if (features.at(r, c) > 0.0) active += 1.0;
            out[r] = active;
        }
        return out;
    };

    std::vector<SeparationCheck> checks;
    std::set<AnomalyKind> kinds;
    for (const auto& spec : cfg.anomaly_plan) kinds.insert(spec.kind);

    for (AnomalyKind kind : kinds) {
        SeparationCheck check;
        check.kind = kind;
        std::vector<double> values;
        switch (kind) {
            case AnomalyKind::CapArbitrage:
                check.feature = "mean fraction_b26r";
                values = column_mean_per_row("fraction_b26r");
                break;
            case AnomalyKind::DividendSubstitution:
                check.feature = "capital_labor_12m";
                {
                    const std::size_t c = features.schema().index_of("capital_labor_12m");
                    for (std::size_t r = 0; r < features.size(); ++r)
                        values.push_back(features.at(r, c));
                }
                break;
            case AnomalyKind::LowFiscalBurden:
                check.feature = "mean fball";
                values = column_mean_per_row("fball");
                break;
            case AnomalyKind::SparsePayments:
                check.feature = "active months";
                values = active_months_per_row();
                break;
        }

        double sum = 0.0, sum2 = 0.0;
        std::size_t n_unaffected = 0;
        for (std::size_t r = 0; r < features.size(); ++r) {
            if (data.ground_truth.count(features.ids()[r])) continue;
            sum += values[r];
            sum2 += values[r] * values[r];
            ++n_unaffected;
        }
        const double mean = sum / static_cast<double>(n_unaffected);
        const double var =
            std::max(0.0, sum2 / static_cast<double>(n_unaffected) - mean * mean);
        // Degenerate (constant) unaffected populations get a floor so the
        // separation ratio stays finite.
        const double sd = std::max(std::sqrt(var), 1e-9);
        check.unaffected_mean = mean;
        check.unaffected_stddev = sd;

        double worst = std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < features.size(); ++r) {
            auto it = data.ground_truth.find(features.ids()[r]);
            if (it == data.ground_truth.end() || it->second != kind) continue;
            worst = std::min(worst, std::abs(values[r] - mean) / sd);
        }
        check.worst_sigmas = worst;
        check.ok = worst >= required_sigmas;
        checks.push_back(check);
    }
    return checks;
}

csv::Table ground_truth_to_csv(const GeneratedData& data) {
    csv::Table table;
    table.header = {"tin", "kind"};
    for (const auto& [tin, kind] : data.ground_truth)
        table.rows.push_back({tin, anomaly_kind_name(kind)});
    return table;
}

}  // namespace hunod::gen
