/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hunod/feature_engineering.hpp"

namespace hunod::gen {

enum class AnomalyKind { CapArbitrage, DividendSubstitution, LowFiscalBurden, SparsePayments };

const char* anomaly_kind_name(AnomalyKind k);
AnomalyKind anomaly_kind_from_name(const std::string& name);

struct AnomalySpec {
    AnomalyKind kind = AnomalyKind::CapArbitrage;
    double rate = 0.01;       // fraction of entities affected
    double magnitude = 1.0;   // severity multiplier
};

struct SectorProfile {
    std::string nace;
    double salary_log_mu = 11.0;
    double salary_log_sigma = 0.10;
    double weight = 1.0;  // population share
};

struct GeneratorConfig {
    std::uint64_t seed = 42;
    std::size_t n_entities = 5000;
    YearMonth window_start{2016, 3};
    int window_months = 13;

    std::vector<SectorProfile> sectors;        // empty -> built-in six-sector mix
    std::vector<std::string> org_types;        // empty -> built-in four forms

    std::size_t min_employees = 2;
    std::size_t max_employees = 9;
    double large_entity_rate = 0.0;            // share with >= cutoff employees
    int birth_year_min = 1958;
    int birth_year_span = 38;
    int founded_year_min = 1992;
    int founded_year_span = 24;
    // Share of entities with an extra service-contract or rent payment in a
    // given month.
    double occasional_income_rate = 0.20;

    // Statutory duty rates applied to normal salary payments; their sum is the
    // normal fiscal burden (kept comfortably above the 0.30 scoring threshold).
    double tax_rate = 0.12;
    double health_rate = 0.11;
    double pension_rate = 0.18;
    double unemployment_rate = 0.01;

    // Entities with legitimate-but-reduced burden; they land below the scoring
    // threshold without being planted anomalies.
    double borderline_rate = 0.08;
    double borderline_burden = 0.24;
    // Optional sector/org overrides making the borderline cohort cohesive
    // enough to cluster together; empty means keep the random draw.
    std::string borderline_nace;
    std::string borderline_org_type;

    double average_salary = 60000.0;           // sets the contribution cap
    double cap_multiple = 5.0;

    std::vector<AnomalySpec> anomaly_plan;     // empty -> no planted anomalies

    void validate() const;
    FeatureConfig feature_config() const;
    static GeneratorConfig with_default_plan();
};

struct GeneratedData {
    std::vector<DeclarationRecord> records;
    std::map<std::string, AnomalyKind> ground_truth;  // planted-anomalous tins
};

/// Deterministic for a fixed seed; byte-identical CSV output across runs.
GeneratedData generate(const GeneratorConfig& cfg);

struct SeparationCheck {
    AnomalyKind kind;
    std::string feature;          // targeted feature summary
    double unaffected_mean = 0.0;
    double unaffected_stddev = 0.0;
    double worst_sigmas = 0.0;    // min separation over affected entities
    bool ok = false;
};

/// Asserts the planted 5-sigma separation by recomputing features from the
/// generated declarations.
std::vector<SeparationCheck> verify_separation(const GeneratedData& data,
                                               const GeneratorConfig& cfg,
                                               double required_sigmas = 5.0);

csv::Table ground_truth_to_csv(const GeneratedData& data);

}  // namespace hunod::gen
