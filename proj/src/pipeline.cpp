/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include "hunod/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hunod/error.hpp"

namespace hunod::pipeline {

namespace {

using nlohmann::ordered_json;

class StageTimer {
public:
    explicit StageTimer(std::string name) : name_(std::move(name)), start_(clock::now()) {
        std::cerr << "[hunod] stage " << name_ << " ...\n";
    }
    ~StageTimer() {
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start_);
        std::cerr << "[hunod] stage " << name_ << " done in " << ms.count() << " ms\n";
    }

private:
    using clock = std::chrono::steady_clock;
    std::string name_;
    clock::time_point start_;
};

template <typename F>
auto stage(const std::string& name, F&& f) {
    StageTimer timer(name);
    try {
        return f();
    } catch (const Error& e) {
        throw Error(e.kind(), "stage " + name + ": " + e.what());
    }
}

std::size_t pct_count(double pct, std::size_t n) {
    return std::max<std::size_t>(
        1, static_cast<std::size_t>(pct * static_cast<double>(n) / 100.0));
}

}  // namespace

std::map<std::string, double> default_ponder_scheme() {
    return {{"fbs", 10.0},           {"tbs", 10.0},          {"average_salary", 5.0},
            {"median_salary", 5.0},  {"stdev_salary", 5.0},  {"fball", 5.0}};
}

kmeans::PonderVector make_ponders(const std::map<std::string, double>& scheme,
                                  const FeatureSchema& schema) {
    kmeans::PonderVector w;
    w.weights.assign(schema.dim(), 1.0);
    std::set<std::string> used;
    for (std::size_t c = 0; c < schema.dim(); ++c) {
        const std::string& name = schema.names[c];
        for (const auto& [key, weight] : scheme) {
            if (name == key || name.compare(0, key.size() + 1, key + "_") == 0) {
                w.weights[c] = weight;
                used.insert(key);
                break;
            }
        }
    }
    for (const auto& [key, weight] : scheme)
        if (!used.count(key)) throw_config("ponder key '" + key + "' matches no feature");
    w.check(schema.dim());
    return w;
}

std::map<std::string, double> ponders_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_config("cannot open ponder file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw_config("bad ponder file '" + path + "': " + e.what());
    }
    std::map<std::string, double> scheme;
    for (const auto& [key, value] : j.items()) scheme[key] = value.get<double>();
    return scheme;
}

std::vector<std::size_t> parse_layout(const std::string& spec, std::size_t d) {
    std::vector<std::size_t> layout;
    std::istringstream in(spec);
    std::string token;
    while (std::getline(in, token, ',')) {
        if (token.empty()) continue;
        const auto slash = token.find('/');
        if (slash == std::string::npos) {
            layout.push_back(static_cast<std::size_t>(
                csv::parse_long(token, "layer spec '" + spec + "'")));
            continue;
        }
        // "d/2" or "3d/4": <mult>d/<div> with ceiling division.
        std::string head = token.substr(0, slash);
        const std::size_t div = static_cast<std::size_t>(
            csv::parse_long(token.substr(slash + 1), "layer spec '" + spec + "'"));
        if (head.empty() || head.back() != 'd' || div == 0)
            throw_config("bad layer token '" + token + "'");
        head.pop_back();
        const std::size_t mult =
            head.empty() ? 1 : static_cast<std::size_t>(csv::parse_long(head, "layer spec"));
        layout.push_back((mult * d + div - 1) / div);
    }
    if (layout.empty()) throw_config("empty layer spec '" + spec + "'");
    return layout;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw_config("cannot open config file '" + path + "'");
    PipelineConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r'))
            line.pop_back();
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw_config(path + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key = line.substr(0, eq);
        const std::string value = line.substr(eq + 1);
        const auto ctx = path + ":" + std::to_string(lineno);

        if (key == "seed") cfg.seed = static_cast<std::uint64_t>(csv::parse_long(value, ctx));
        else if (key == "declarations") { cfg.declarations_path = value; cfg.generate_input = false; }
        else if (key == "entities") cfg.generator.n_entities =
            static_cast<std::size_t>(csv::parse_long(value, ctx));
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "k_grid") {
            cfg.k_grid.clear();
            std::istringstream ks(value);
            std::string k;
            while (std::getline(ks, k, ','))
                cfg.k_grid.push_back(static_cast<std::size_t>(csv::parse_long(k, ctx)));
            if (cfg.k_grid.empty()) throw_config(ctx + ": empty k_grid");
        }
        else if (key == "report_k") cfg.report_k = static_cast<std::size_t>(csv::parse_long(value, ctx));
        else if (key == "small_pct") cfg.small_pct = csv::parse_double(value, ctx);
        else if (key == "l10_max_outliers_pct") cfg.l10_max_outliers_pct = csv::parse_double(value, ctx);
        else if (key == "a10_max_outliers_pct") cfg.a10_max_outliers_pct = csv::parse_double(value, ctx);
        else if (key == "kmeans_n_init") cfg.kmeans_n_init =
            static_cast<std::size_t>(csv::parse_long(value, ctx));
        else if (key == "kmeans_max_iters") cfg.kmeans_max_iters =
            static_cast<std::size_t>(csv::parse_long(value, ctx));
        else if (key == "score_threshold") cfg.scoring.threshold = csv::parse_double(value, ctx);
        else if (key == "alpha") cfg.autoencoder.keep_prob = csv::parse_double(value, ctx);
        else if (key == "lambda") cfg.autoencoder.activity_reg = csv::parse_double(value, ctx);
        else if (key == "epochs") cfg.autoencoder.epochs =
            static_cast<std::size_t>(csv::parse_long(value, ctx));
        else if (key == "batch") cfg.autoencoder.batch_size =
            static_cast<std::size_t>(csv::parse_long(value, ctx));
        else if (key == "layers") cfg.ae_layers_spec = value;
        else if (key == "ponder_file") cfg.ponders = ponders_from_json_file(value);
        else if (key == "average_salary") {
            cfg.features.average_salary = csv::parse_double(value, ctx);
            cfg.generator.average_salary = cfg.features.average_salary;
        }
        else if (key == "min_subset_size") cfg.min_subset_size =
            static_cast<std::size_t>(csv::parse_long(value, ctx));
        else throw_config(ctx + ": unknown key '" + key + "'");
    }
    if (const char* env = std::getenv("HUNOD_SEED"))
        cfg.seed = static_cast<std::uint64_t>(csv::parse_long(env, "HUNOD_SEED"));
    return cfg;
}

nlohmann::ordered_json outlier_set_to_json(const OutlierSet& set) {
    ordered_json j;
    j["provenance"] = set.provenance;
    j["outliers"] = ordered_json::array();
    for (const auto& e : set.entries)
        j["outliers"].push_back(ordered_json{{"tin", e.id}, {"score", e.score}});
    return j;
}

OutlierSet outlier_set_from_json(const nlohmann::ordered_json& j) {
    OutlierSet set;
    set.provenance = j.at("provenance").get<std::string>();
    for (const auto& e : j.at("outliers"))
        set.entries.push_back({e.at("tin").get<std::string>(), e.at("score").get<double>()});
    return set;
}

namespace {

SubsetOutcome run_subset(const PipelineConfig& config, const std::string& name,
                         const Dataset& subset, double max_outliers_pct) {
    SubsetOutcome outcome;
    outcome.name = name;
    if (subset.size() < config.min_subset_size) {
        outcome.skipped = true;
        std::cerr << "[hunod] subset " << name << ": " << subset.size()
                  << " entities, below minimum " << config.min_subset_size << "; skipped\n";
        return outcome;
    }

    const kmeans::PonderVector ponders = make_ponders(
        config.ponders.empty() ? default_ponder_scheme() : config.ponders, subset.schema());

    kmeans::KMeansConfig kcfg;
    kcfg.small_threshold = pct_count(config.small_pct, subset.size());
    kcfg.max_outliers = pct_count(max_outliers_pct, subset.size());
    kcfg.n_init = config.kmeans_n_init;
    kcfg.max_iters = config.kmeans_max_iters;
    kcfg.seed = config.seed;

    stage(name + ".kmeans", [&] {
        for (std::size_t k : config.k_grid) {
            kcfg.k = k;
            outcome.kmeans_sets.push_back(kmeans::detect(subset, ponders, kcfg));
        }
        return 0;
    });
    {
        std::vector<std::set<std::string>> id_sets;
        for (const auto& s : outcome.kmeans_sets) id_sets.push_back(s.id_set());
        outcome.jaccard = agreement_matrix(id_sets);
    }

    const std::size_t report_k = config.report_k ? config.report_k : config.k_grid.front();
    std::size_t report_idx = 0;
    for (std::size_t i = 0; i < config.k_grid.size(); ++i)
        if (config.k_grid[i] == report_k) report_idx = i;
    const OutlierSet& reference_set = outcome.kmeans_sets[report_idx];

    const std::vector<double> scores = scoring_indicator(subset, config.features);
    outcome.selection = stage(name + ".select_training", [&] {
        return ae::select_training(subset, scores, config.scoring.threshold, reference_set);
    });

    const ScaledDataset scaled = scale_to_unit(subset);
    const Dataset scaled_ds = scaled.as_dataset();
    const Dataset training = select_rows(scaled_ds, outcome.selection.training_ids);
    const Dataset rest = select_rows(scaled_ds, outcome.selection.rest_ids);

    ae::AutoencoderConfig acfg = config.autoencoder;
    acfg.seed = config.seed;
    if (!config.ae_layers_spec.empty())
        acfg.hidden_layout = parse_layout(config.ae_layers_spec, subset.dim());

    const ae::NetworkModel model =
        stage(name + ".autoencoder", [&] { return ae::train(training, acfg); });
    outcome.training_max_error = model.training_max_error;
    outcome.ae_set = ae::detect_outliers(model, rest);

    for (std::size_t i = 0; i < config.k_grid.size(); ++i) {
        const ae::TrainingSelection sel_k = ae::select_training(
            subset, scores, config.scoring.threshold, outcome.kmeans_sets[i]);
        outcome.crosschecks.push_back(ae::cross_check(outcome.ae_set, outcome.kmeans_sets[i], sel_k));
    }

    stage(name + ".surrogate", [&] {
        const surrogate::LabeledDataset labeled = surrogate::label_dataset(subset, outcome.ae_set);
        outcome.contradictory_duplicates = surrogate::has_contradictory_duplicates(labeled);
        if (outcome.contradictory_duplicates)
            std::cerr << "[hunod] warning: subset " << name
                      << " has contradictory duplicate rows; surrogate accuracy below 1 expected\n";
        const surrogate::DecisionTree tree = surrogate::build_tree(labeled, config.tree);
        outcome.surrogate_accuracy = surrogate::accuracy(tree, labeled);
        outcome.importance = surrogate::feature_importance(tree);
        for (const auto& entry : outcome.ae_set.entries) {
            const std::size_t row = std::distance(
                subset.ids().begin(),
                std::find(subset.ids().begin(), subset.ids().end(), entry.id));
            outcome.explanations[entry.id] =
                surrogate::classify(tree, std::span<const double>(subset.row(row), subset.dim()))
                    .path;
        }
        return 0;
    });
    return outcome;
}

ordered_json subset_to_json(const PipelineConfig& config, const SubsetOutcome& o) {
    ordered_json j;
    j["skipped"] = o.skipped;
    if (o.skipped) return j;
    ordered_json km;
    km["k_grid"] = config.k_grid;
    {
        ordered_json counts = ordered_json::array();
        for (const auto& s : o.kmeans_sets) counts.push_back(s.size());
        km["outlier_counts"] = counts;
        km["jaccard_matrix"] = o.jaccard;
    }
    j["kmeans"] = km;
    j["training"] = ordered_json{{"size", o.selection.training_ids.size()},
                                 {"rest_size", o.selection.rest_ids.size()},
                                 {"max_reconstruction_error", o.training_max_error}};
    {
        ordered_json cc = ordered_json::array();
        for (std::size_t i = 0; i < o.crosschecks.size(); ++i) {
            const auto& c = o.crosschecks[i];
            cc.push_back(ordered_json{{"k", config.k_grid[i]},
                                      {"c_t_jaccard", c.c_t_jaccard},
                                      {"v_t", c.v_t},
                                      {"c_a_jaccard", c.c_a_jaccard},
                                      {"v_o", c.v_o}});
        }
        j["crosscheck"] = cc;
    }
    j["autoencoder"] = ordered_json{{"outlier_count", o.ae_set.size()}};
    {
        ordered_json sur;
        sur["accuracy"] = o.surrogate_accuracy;
        sur["contradictory_duplicates"] = o.contradictory_duplicates;
        std::vector<std::pair<std::string, double>> ranked(o.importance.begin(),
                                                           o.importance.end());
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        ordered_json top = ordered_json::array();
        for (std::size_t i = 0; i < ranked.size() && i < 10; ++i)
            top.push_back(ordered_json{{"feature", ranked[i].first}, {"importance", ranked[i].second}});
        sur["top_importance"] = top;
        j["surrogate"] = sur;
    }
    {
        // Per-entity records for everything flagged by either detector; the
        // K-means flag refers to the first K in the grid.
        std::map<std::string, double> km_score, ae_score;
        for (const auto& e : o.kmeans_sets.front().entries) km_score[e.id] = e.score;
        for (const auto& e : o.ae_set.entries) ae_score[e.id] = e.score;
        std::set<std::string> flagged;
        for (const auto& [id, s] : km_score) flagged.insert(id);
        for (const auto& [id, s] : ae_score) flagged.insert(id);
        ordered_json entities = ordered_json::array();
        for (const auto& id : flagged) {
            ordered_json e;
            e["tin"] = id;
            e["kmeans_flag"] = km_score.count(id) > 0;
            if (km_score.count(id)) e["kmeans_score"] = km_score[id];
            e["ae_flag"] = ae_score.count(id) > 0;
            if (ae_score.count(id)) {
                e["reconstruction_error"] = ae_score[id];
                e["explanation"] = o.explanations.at(id);
            }
            entities.push_back(e);
        }
        j["entities"] = entities;
    }
    return j;
}

}  // namespace

RunResult run(const PipelineConfig& config) {
    namespace fs = std::filesystem;
    fs::create_directories(config.out_dir);
    const auto out_path = [&config](const std::string& file) {
        return (fs::path(config.out_dir) / file).string();
    };

    std::vector<DeclarationRecord> declarations;
    if (config.generate_input) {
        gen::GeneratorConfig gcfg = config.generator;
        gcfg.seed = config.seed;
        const gen::GeneratedData data = stage("generate", [&] { return gen::generate(gcfg); });
        declarations = data.records;
        csv::write_file(out_path("declarations.csv"), declarations_to_csv(declarations));
        csv::write_file(out_path("ground_truth.csv"), gen::ground_truth_to_csv(data));
    } else {
        declarations = stage("load_declarations", [&] {
            return declarations_from_csv(csv::read_file(config.declarations_path));
        });
    }

    const FeatureTable table =
        stage("features", [&] { return build_feature_table(declarations, config.features); });
    const Dataset features = one_hot_encode(table.rows);
    const Dataset l10 = select_rows(features, table.l10_tins);
    const Dataset a10 = select_rows(features, table.a10_tins);
    csv::write_file(out_path("features_l10.csv"), dataset_to_csv(l10));
    csv::write_file(out_path("features_a10.csv"), dataset_to_csv(a10));

    RunResult result;
    result.subsets.push_back(run_subset(config, "l10", l10, config.l10_max_outliers_pct));
    result.subsets.push_back(run_subset(config, "a10", a10, config.a10_max_outliers_pct));

    ordered_json report;
    report["schema_version"] = 1;
    report["seed"] = config.seed;
    report["config"] = ordered_json{
        {"k_grid", config.k_grid},
        {"small_pct", config.small_pct},
        {"l10_max_outliers_pct", config.l10_max_outliers_pct},
        {"a10_max_outliers_pct", config.a10_max_outliers_pct},
        {"score_threshold", config.scoring.threshold},
        {"alpha", config.autoencoder.keep_prob},
        {"lambda", config.autoencoder.activity_reg},
        {"epochs", config.autoencoder.epochs},
        {"batch", config.autoencoder.batch_size},
    };
    for (const auto& outcome : result.subsets)
        report["subsets"][outcome.name] = subset_to_json(config, outcome);

    std::ofstream out(out_path("report.json"), std::ios::binary);
    out << report.dump(2) << '\n';

    csv::Table flagged;
    flagged.header = {"tin", "subset", "kmeans_flag", "kmeans_score", "ae_flag",
                      "reconstruction_error"};
    for (const auto& outcome : result.subsets) {
        if (outcome.skipped) continue;
        std::map<std::string, double> km_score, ae_score;
        for (const auto& e : outcome.kmeans_sets.front().entries) km_score[e.id] = e.score;
        for (const auto& e : outcome.ae_set.entries) ae_score[e.id] = e.score;
        std::set<std::string> ids;
        for (const auto& [id, s] : km_score) ids.insert(id);
        for (const auto& [id, s] : ae_score) ids.insert(id);
        for (const auto& id : ids)
            flagged.rows.push_back(
                {id, outcome.name, km_score.count(id) ? "1" : "0",
                 km_score.count(id) ? csv::format_double(km_score[id]) : "",
                 ae_score.count(id) ? "1" : "0",
                 ae_score.count(id) ? csv::format_double(ae_score[id]) : ""});
    }
    csv::write_file(out_path("flagged.csv"), flagged);

    result.report = std::move(report);
    return result;
}

}  // namespace hunod::pipeline
