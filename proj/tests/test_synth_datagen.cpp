/*
 * SPDX-License-Identifier: Apache-2.0
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <string>

#include "hunod/error.hpp"
#include "hunod/synth_datagen.hpp"

using namespace hunod;
using gen::AnomalyKind;
using gen::GeneratorConfig;

TEST_CASE("anomaly kind names round trip") {
    for (auto kind : {AnomalyKind::CapArbitrage, AnomalyKind::DividendSubstitution,
                      AnomalyKind::LowFiscalBurden, AnomalyKind::SparsePayments})
        CHECK(gen::anomaly_kind_from_name(gen::anomaly_kind_name(kind)) == kind);
    CHECK_THROWS_AS(gen::anomaly_kind_from_name("nonsense"), Error);
}

TEST_CASE("config validation") {
    GeneratorConfig cfg;
    CHECK_NOTHROW(cfg.validate());

    auto bad_rate = cfg;
    bad_rate.anomaly_plan = {{AnomalyKind::CapArbitrage, 1.5, 1.0}};
    CHECK_THROWS_AS(bad_rate.validate(), Error);

    auto too_many = cfg;
    too_many.anomaly_plan = {{AnomalyKind::CapArbitrage, 0.5, 1.0},
                             {AnomalyKind::SparsePayments, 0.6, 1.0}};
    CHECK_THROWS_AS(too_many.validate(), Error);

    auto low_burden = cfg;
    low_burden.pension_rate = 0.0;
    low_burden.health_rate = 0.0;
    CHECK_THROWS_AS(low_burden.validate(), Error);

    auto empty = cfg;
    empty.n_entities = 0;
    CHECK_THROWS_AS(empty.validate(), Error);
}

TEST_CASE("generation is byte-identical for a fixed seed") {
    GeneratorConfig cfg = GeneratorConfig::with_default_plan();
    cfg.seed = 42;
    cfg.n_entities = 120;
    const auto a = gen::generate(cfg);
    const auto b = gen::generate(cfg);
    CHECK(csv::to_string(declarations_to_csv(a.records)) ==
          csv::to_string(declarations_to_csv(b.records)));
    CHECK(a.ground_truth == b.ground_truth);

    auto other = cfg;
    other.seed = 43;
    CHECK(csv::to_string(declarations_to_csv(gen::generate(other).records)) !=
          csv::to_string(declarations_to_csv(a.records)));
}

TEST_CASE("empty anomaly plan yields empty ground truth") {
    GeneratorConfig cfg;
    cfg.n_entities = 50;
    const auto data = gen::generate(cfg);
    CHECK(data.ground_truth.empty());
    CHECK_FALSE(data.records.empty());
}

TEST_CASE("generated records satisfy the declaration invariants") {
    GeneratorConfig cfg = GeneratorConfig::with_default_plan();
    cfg.n_entities = 150;
    const auto data = gen::generate(cfg);
    CHECK_NOTHROW(validate_declarations(data.records, cfg.feature_config()));
    for (const auto& rec : data.records) {
        CHECK(rec.gross_amount > 0.0);
        CHECK(rec.duties() <= rec.gross_amount);  // no confiscatory burden
        CHECK_FALSE(rec.payer_nace.empty());
        CHECK_FALSE(rec.payer_org_type.empty());
    }
}

TEST_CASE("planted anomalies sit at least five sigma out on their target features") {
    GeneratorConfig cfg = GeneratorConfig::with_default_plan();
    cfg.seed = 7;
    cfg.n_entities = 600;
    const auto data = gen::generate(cfg);
    CHECK(data.ground_truth.size() >= 20);  // four kinds at 1 percent

    const auto checks = gen::verify_separation(data, cfg);
    REQUIRE(checks.size() == 4);
    for (const auto& c : checks) {
        INFO(gen::anomaly_kind_name(c.kind), " on ", c.feature, ": ", c.worst_sigmas, " sigmas");
        CHECK(c.ok);
        CHECK(c.worst_sigmas >= 5.0);
    }
}

TEST_CASE("anomaly rates control the number of affected entities") {
    GeneratorConfig cfg;
    cfg.n_entities = 400;
    cfg.anomaly_plan = {{AnomalyKind::SparsePayments, 0.05, 1.0}};
    const auto data = gen::generate(cfg);
    CHECK(data.ground_truth.size() == 20);
    for (const auto& [tin, kind] : data.ground_truth)
        CHECK(kind == AnomalyKind::SparsePayments);
}

TEST_CASE("ground truth csv lists one row per planted anomaly") {
    GeneratorConfig cfg = GeneratorConfig::with_default_plan();
    cfg.n_entities = 200;
    const auto data = gen::generate(cfg);
    const auto table = gen::ground_truth_to_csv(data);
    CHECK(table.header == std::vector<std::string>{"tin", "kind"});
    CHECK(table.rows.size() == data.ground_truth.size());
    std::set<std::string> tins;
    for (const auto& row : table.rows) tins.insert(row[0]);
    CHECK(tins.size() == table.rows.size());
}
