/*
 * SPDX-License-Identifier: Apache-2.0
 */
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "hunod/autoencoder.hpp"
#include "hunod/data_model.hpp"
#include "hunod/feature_engineering.hpp"
#include "hunod/kmeans.hpp"
#include "hunod/outlier_set.hpp"
#include "hunod/surrogate.hpp"
#include "hunod/synth_datagen.hpp"

#include "json.hpp"

namespace hunod::pipeline {

struct PipelineConfig {
    // Input: either an existing declarations CSV or a generated population.
    std::string declarations_path;
    bool generate_input = true;
    gen::GeneratorConfig generator = gen::GeneratorConfig::with_default_plan();

    FeatureConfig features;
    ScoringConfig scoring;

    std::vector<std::size_t> k_grid = {10, 15, 20, 25, 30};
    double small_pct = 5.0;
    double l10_max_outliers_pct = 1.0;
    double a10_max_outliers_pct = 5.0;
    std::size_t kmeans_n_init = 10;
    std::size_t kmeans_max_iters = 100;
    std::size_t report_k = 0;  // 0 -> first entry of the grid

    // Ponder scheme: family or feature name -> weight; unlisted features get 1.
    // Empty map -> the built-in default scheme.
    std::map<std::string, double> ponders;

    ae::AutoencoderConfig autoencoder;
    // Optional layout spec resolved against the subset width, e.g. "d/2,d/4,d/2".
    std::string ae_layers_spec;
    surrogate::TreeParams tree;

    std::uint64_t seed = 42;
    std::string out_dir = ".";
    // Subsets smaller than this are reported as skipped rather than detected on.
    std::size_t min_subset_size = 50;
};

/// Flat key=value config file; unknown keys are an error. The HUNOD_SEED
/// environment variable overrides the seed.
PipelineConfig load_config(const std::string& path);

/// Default pondering scheme: fiscal-burden-on-salaries families weight 10,
/// salary families and fball weight 5, everything else 1.
std::map<std::string, double> default_ponder_scheme();

/// Expands a family/feature -> weight map against a schema. A key matches a
/// feature when it equals the full name or the feature name is key + "_..." .
kmeans::PonderVector make_ponders(const std::map<std::string, double>& scheme,
                                  const FeatureSchema& schema);

std::map<std::string, double> ponders_from_json_file(const std::string& path);

/// Hidden-layer widths from a spec like "d/2,d/4,d/2", "3d/4,120" (ceiling
/// division against the input width d).
std::vector<std::size_t> parse_layout(const std::string& spec, std::size_t d);

struct SubsetOutcome {
    std::string name;
    bool skipped = false;
    std::vector<OutlierSet> kmeans_sets;       // aligned with k_grid
    std::vector<std::vector<double>> jaccard;  // pairwise over the grid
    ae::TrainingSelection selection;
    std::vector<ae::CrossCheckReport> crosschecks;  // per K
    OutlierSet ae_set;
    double training_max_error = 0.0;
    double surrogate_accuracy = 0.0;
    bool contradictory_duplicates = false;
    std::map<std::string, double> importance;
    std::map<std::string, std::vector<std::string>> explanations;  // ae-flagged tin -> path
};

struct RunResult {
    nlohmann::ordered_json report;
    std::vector<SubsetOutcome> subsets;
};

/// Full HUNOD run; writes declarations/ground-truth (when generated), feature
/// tables, the machine-readable report and the flagged-entity CSV under
/// config.out_dir. Deterministic for fixed config + seed.
RunResult run(const PipelineConfig& config);

// Serialization helpers shared by the CLI subcommands.
nlohmann::ordered_json outlier_set_to_json(const OutlierSet& set);
OutlierSet outlier_set_from_json(const nlohmann::ordered_json& j);

}  // namespace hunod::pipeline
