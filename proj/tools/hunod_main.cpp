/*
 * SPDX-License-Identifier: Apache-2.0
 */
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "hunod/error.hpp"
#include "hunod/pipeline.hpp"

namespace {

using hunod::Dataset;
using nlohmann::ordered_json;

ordered_json json_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) hunod::throw_data("cannot open '" + path + "'");
    ordered_json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        hunod::throw_data("bad json in '" + path + "': " + e.what());
    }
    return j;
}

void json_to_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) hunod::throw_data("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

std::vector<hunod::gen::AnomalySpec> plan_from_file(const std::string& path) {
    const ordered_json j = json_from_file(path);
    std::vector<hunod::gen::AnomalySpec> plan;
    for (const auto& item : j.at("anomalies")) {
        hunod::gen::AnomalySpec spec;
        spec.kind = hunod::gen::anomaly_kind_from_name(item.at("kind").get<std::string>());
        spec.rate = item.at("rate").get<double>();
        if (item.contains("magnitude")) spec.magnitude = item.at("magnitude").get<double>();
        plan.push_back(spec);
    }
    return plan;
}

std::vector<double> resolve_scores(const Dataset& features, const std::string& score_col) {
    if (score_col == "auto")
        return hunod::scoring_indicator(features, hunod::FeatureConfig{});
    const std::size_t c = features.schema().index_of(score_col);
    std::vector<double> scores(features.size());
    for (std::size_t r = 0; r < features.size(); ++r) scores[r] = features.at(r, c);
    return scores;
}

ordered_json tree_to_json(const hunod::surrogate::TreeNode* node,
                          const hunod::FeatureSchema& schema) {
    ordered_json j;
    j["n_positive"] = node->n_positive;
    j["n_negative"] = node->n_negative;
    if (node->is_leaf()) {
        j["class"] = node->leaf_class;
        return j;
    }
    j["feature"] = schema.names[static_cast<std::size_t>(node->feature)];
    j["threshold"] = node->threshold;
    j["gain"] = node->gain;
    j["left"] = tree_to_json(node->left.get(), schema);
    j["right"] = tree_to_json(node->right.get(), schema);
    return j;
}

int cmd_gen(const std::string& plan_path, std::uint64_t seed, std::size_t entities,
            const std::string& out, const std::string& truth_out) {
    hunod::gen::GeneratorConfig cfg = hunod::gen::GeneratorConfig::with_default_plan();
    cfg.seed = seed;
    cfg.n_entities = entities;
    if (!plan_path.empty()) cfg.anomaly_plan = plan_from_file(plan_path);
    const auto data = hunod::gen::generate(cfg);
    hunod::csv::write_file(out, hunod::declarations_to_csv(data.records));
    hunod::csv::write_file(truth_out, hunod::gen::ground_truth_to_csv(data));
    std::cerr << "[hunod] wrote " << data.records.size() << " declarations, "
              << data.ground_truth.size() << " planted anomalies\n";
    return 0;
}

int cmd_features(const std::string& declarations, const std::string& out_l10,
                 const std::string& out_a10, double average_salary) {
    hunod::FeatureConfig cfg;
    cfg.average_salary = average_salary;
    const auto records = hunod::declarations_from_csv(hunod::csv::read_file(declarations));
    const auto table = hunod::build_feature_table(records, cfg);
    const Dataset features = hunod::one_hot_encode(table.rows);
    hunod::csv::write_file(out_l10,
                           hunod::dataset_to_csv(hunod::select_rows(features, table.l10_tins)));
    hunod::csv::write_file(out_a10,
                           hunod::dataset_to_csv(hunod::select_rows(features, table.a10_tins)));
    std::cerr << "[hunod] " << table.l10_tins.size() << " entities in L10, "
              << table.a10_tins.size() << " in A10\n";
    return 0;
}

int cmd_kmeans(const std::string& features_path, const std::string& ponders_path, std::size_t k,
               double small_pct, double max_outliers_pct, std::uint64_t seed, std::size_t n_init,
               const std::string& init_mode, const std::string& out) {
    const Dataset features =
        hunod::dataset_from_csv(hunod::csv::read_file(features_path));
    const auto scheme = ponders_path.empty() ? hunod::pipeline::default_ponder_scheme()
                                             : hunod::pipeline::ponders_from_json_file(ponders_path);
    const auto ponders = hunod::pipeline::make_ponders(scheme, features.schema());

    hunod::kmeans::KMeansConfig cfg;
    cfg.k = k;
    cfg.seed = seed;
    cfg.n_init = n_init;
    cfg.small_threshold = std::max<std::size_t>(
        1, static_cast<std::size_t>(small_pct * static_cast<double>(features.size()) / 100.0));
    cfg.max_outliers = std::max<std::size_t>(
        1, static_cast<std::size_t>(max_outliers_pct * static_cast<double>(features.size()) / 100.0));
    if (init_mode == "uniform-box")
        cfg.init = hunod::kmeans::InitMode::UniformBox;
    else if (init_mode != "kmeans++")
        hunod::throw_config("unknown init mode '" + init_mode + "'");

    const auto outliers = hunod::kmeans::detect(features, ponders, cfg);
    json_to_file(out, hunod::pipeline::outlier_set_to_json(outliers));
    std::cerr << "[hunod] kmeans flagged " << outliers.size() << " of " << features.size() << "\n";
    return 0;
}

int cmd_ae(const std::string& features_path, const std::string& score_col, double threshold,
           const std::string& layers, double alpha, double lambda, std::size_t epochs,
           std::size_t batch, std::uint64_t seed, const std::string& kmeans_path,
           const std::string& out, const std::string& report_path, const std::string& model_path) {
    const Dataset features = hunod::dataset_from_csv(hunod::csv::read_file(features_path));
    const auto kmeans_set = hunod::pipeline::outlier_set_from_json(json_from_file(kmeans_path));
    const std::vector<double> scores = resolve_scores(features, score_col);

    const auto selection = hunod::ae::select_training(features, scores, threshold, kmeans_set);
    const Dataset scaled = hunod::scale_to_unit(features).as_dataset();
    const Dataset training = hunod::select_rows(scaled, selection.training_ids);
    const Dataset rest = hunod::select_rows(scaled, selection.rest_ids);

    hunod::ae::AutoencoderConfig cfg;
    cfg.keep_prob = alpha;
    cfg.activity_reg = lambda;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.seed = seed;
    if (!layers.empty()) cfg.hidden_layout = hunod::pipeline::parse_layout(layers, features.dim());

    const auto model = hunod::ae::train(training, cfg);
    const auto outliers = hunod::ae::detect_outliers(model, rest);
    json_to_file(out, hunod::pipeline::outlier_set_to_json(outliers));
    if (!model_path.empty()) model.save(model_path);

    const auto cc = hunod::ae::cross_check(outliers, kmeans_set, selection);
    json_to_file(report_path, ordered_json{{"training_size", selection.training_ids.size()},
                                           {"rest_size", selection.rest_ids.size()},
                                           {"training_max_error", model.training_max_error},
                                           {"c_t_jaccard", cc.c_t_jaccard},
                                           {"v_t", cc.v_t},
                                           {"c_a_jaccard", cc.c_a_jaccard},
                                           {"v_o", cc.v_o}});
    std::cerr << "[hunod] autoencoder flagged " << outliers.size() << " of " << rest.size() << "\n";
    return 0;
}

int cmd_surrogate(const std::string& features_path, const std::string& ae_path,
                  const std::string& measure, const std::string& out,
                  const std::string& importance_path, const std::string& explanations_path) {
    const Dataset features = hunod::dataset_from_csv(hunod::csv::read_file(features_path));
    const auto ae_set = hunod::pipeline::outlier_set_from_json(json_from_file(ae_path));

    hunod::surrogate::TreeParams params;
    if (measure == "entropy")
        params.measure = hunod::surrogate::Impurity::Entropy;
    else if (measure != "gini")
        hunod::throw_config("unknown impurity measure '" + measure + "'");

    const auto labeled = hunod::surrogate::label_dataset(features, ae_set);
    if (hunod::surrogate::has_contradictory_duplicates(labeled))
        std::cerr << "[hunod] warning: contradictory duplicate rows; accuracy below 1 expected\n";
    const auto tree = hunod::surrogate::build_tree(labeled, params);
    const double acc = hunod::surrogate::accuracy(tree, labeled);

    ordered_json tj;
    tj["schema_version"] = 1;
    tj["accuracy"] = acc;
    tj["depth"] = tree.depth;
    tj["node_count"] = tree.node_count;
    tj["root"] = tree_to_json(tree.root.get(), *tree.schema);
    json_to_file(out, tj);

    if (!importance_path.empty()) {
        hunod::csv::Table imp;
        imp.header = {"feature", "importance"};
        std::vector<std::pair<std::string, double>> ranked;
        for (const auto& [name, v] : hunod::surrogate::feature_importance(tree))
            ranked.emplace_back(name, v);
        std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
            if (a.second != b.second) return a.second > b.second;
            return a.first < b.first;
        });
        for (const auto& [name, v] : ranked)
            imp.rows.push_back({name, hunod::csv::format_double(v)});
        hunod::csv::write_file(importance_path, imp);
    }
    if (!explanations_path.empty()) {
        std::ofstream out_expl(explanations_path, std::ios::binary);
        for (const auto& entry : ae_set.entries) {
            std::size_t row = 0;
            for (; row < features.size(); ++row)
                if (features.ids()[row] == entry.id) break;
            const auto c = hunod::surrogate::classify(
                tree, std::span<const double>(features.row(row), features.dim()));
            out_expl << ordered_json{{"tin", entry.id}, {"class", c.predicted}, {"path", c.path}}
                            .dump()
                     << '\n';
        }
    }
    std::cerr << "[hunod] surrogate accuracy " << acc << ", depth " << tree.depth << "\n";
    return 0;
}

int cmd_agreement(const std::vector<std::string>& set_paths, const std::string& out) {
    if (set_paths.size() < 2) hunod::throw_config("agreement needs at least two outlier sets");
    std::vector<std::set<std::string>> sets;
    for (const auto& path : set_paths)
        sets.push_back(hunod::pipeline::outlier_set_from_json(json_from_file(path)).id_set());
    const auto matrix = hunod::agreement_matrix(sets);
    json_to_file(out, ordered_json{{"sets", set_paths}, {"jaccard_matrix", matrix}});
    return 0;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool seed_given,
            std::size_t entities, const std::string& out_dir) {
    hunod::pipeline::PipelineConfig cfg;
    if (!config_path.empty()) cfg = hunod::pipeline::load_config(config_path);
    if (seed_given) cfg.seed = seed;
    if (entities) cfg.generator.n_entities = entities;
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    const auto result = hunod::pipeline::run(cfg);
    for (const auto& subset : result.subsets) {
        if (subset.skipped) continue;
        std::cerr << "[hunod] " << subset.name << ": kmeans " << subset.kmeans_sets.front().size()
                  << ", autoencoder " << subset.ae_set.size() << ", surrogate accuracy "
                  << subset.surrogate_accuracy << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HUNOD hybrid unsupervised outlier detection"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic declaration population");
    std::uint64_t gen_seed = 42;
    std::size_t gen_entities = 5000;
    std::string gen_plan, gen_out = "declarations.csv", gen_truth = "ground_truth.csv";
    gen->add_option("--seed", gen_seed);
    gen->add_option("--entities", gen_entities);
    gen->add_option("--plan", gen_plan, "Anomaly plan JSON");
    gen->add_option("--out", gen_out);
    gen->add_option("--ground-truth", gen_truth);

    // features
    auto* features = app.add_subcommand("features", "Aggregate declarations to entity features");
    std::string feat_decl = "declarations.csv", feat_l10 = "features_l10.csv",
                feat_a10 = "features_a10.csv";
    double feat_avg_salary = 60000.0;
    features->add_option("--declarations", feat_decl);
    features->add_option("--out-l10", feat_l10);
    features->add_option("--out-a10", feat_a10);
    features->add_option("--average-salary", feat_avg_salary);

    // kmeans
    auto* km = app.add_subcommand("kmeans", "Ponder-weighted K-means outlier detection");
    std::string km_features = "features_l10.csv", km_ponders, km_out = "outliers_kmeans.json",
                km_init = "kmeans++";
    std::size_t km_k = 10, km_n_init = 10;
    double km_small_pct = 5.0, km_max_pct = 1.0;
    std::uint64_t km_seed = 42;
    km->add_option("--features", km_features);
    km->add_option("--ponders", km_ponders, "Feature/family -> weight JSON (default scheme if omitted)");
    km->add_option("--k", km_k);
    km->add_option("--small-pct", km_small_pct);
    km->add_option("--max-outliers-pct", km_max_pct);
    km->add_option("--seed", km_seed);
    km->add_option("--n-init", km_n_init);
    km->add_option("--init", km_init, "kmeans++ | uniform-box");
    km->add_option("--out", km_out);

    // ae
    auto* ae = app.add_subcommand("ae", "Autoencoder outlier detection with cross-check");
    std::string ae_features = "features_l10.csv", ae_score_col = "auto", ae_layers,
                ae_kmeans = "outliers_kmeans.json", ae_out = "outliers_ae.json",
                ae_report = "crosscheck.json", ae_model;
    double ae_threshold = 0.30, ae_alpha = 0.8, ae_lambda = 0.1;
    std::size_t ae_epochs = 200, ae_batch = 32;
    std::uint64_t ae_seed = 42;
    ae->add_option("--features", ae_features);
    ae->add_option("--score-col", ae_score_col, "auto = mean of the 13 fball columns");
    ae->add_option("--threshold", ae_threshold);
    ae->add_option("--layers", ae_layers, "e.g. d/2,d/4,d/2");
    ae->add_option("--alpha", ae_alpha);
    ae->add_option("--lambda", ae_lambda);
    ae->add_option("--epochs", ae_epochs);
    ae->add_option("--batch", ae_batch);
    ae->add_option("--seed", ae_seed);
    ae->add_option("--kmeans", ae_kmeans);
    ae->add_option("--out", ae_out);
    ae->add_option("--report", ae_report);
    ae->add_option("--model", ae_model, "Optional model checkpoint path");

    // surrogate
    auto* sur = app.add_subcommand("surrogate", "Explainable decision-tree surrogate");
    std::string sur_features = "features_l10.csv", sur_ae = "outliers_ae.json",
                sur_out = "tree.json", sur_importance = "importance.csv",
                sur_expl = "explanations.jsonl", sur_measure = "gini";
    sur->add_option("--features", sur_features);
    sur->add_option("--ae-outliers", sur_ae);
    sur->add_option("--measure", sur_measure, "gini | entropy");
    sur->add_option("--out", sur_out);
    sur->add_option("--importance", sur_importance);
    sur->add_option("--explanations", sur_expl);

    // agreement
    auto* agr = app.add_subcommand("agreement", "Pairwise Jaccard over outlier sets");
    std::vector<std::string> agr_sets;
    std::string agr_out = "agreement.json";
    agr->add_option("--sets", agr_sets)->expected(-1);
    agr->add_option("--out", agr_out);

    // run
    auto* runc = app.add_subcommand("run", "Full pipeline run");
    std::string run_config, run_out_dir;
    std::uint64_t run_seed = 0;
    std::size_t run_entities = 0;
    auto* run_seed_opt = runc->add_option("--seed", run_seed);
    runc->add_option("--config", run_config, "Flat key=value config file");
    runc->add_option("--entities", run_entities);
    runc->add_option("--out-dir", run_out_dir);

    try {
        app.parse(argc, argv);
        if (*gen) return cmd_gen(gen_plan, gen_seed, gen_entities, gen_out, gen_truth);
        if (*features) return cmd_features(feat_decl, feat_l10, feat_a10, feat_avg_salary);
        if (*km)
            return cmd_kmeans(km_features, km_ponders, km_k, km_small_pct, km_max_pct, km_seed,
                              km_n_init, km_init, km_out);
        if (*ae)
            return cmd_ae(ae_features, ae_score_col, ae_threshold, ae_layers, ae_alpha, ae_lambda,
                          ae_epochs, ae_batch, ae_seed, ae_kmeans, ae_out, ae_report, ae_model);
        if (*sur)
            return cmd_surrogate(sur_features, sur_ae, sur_measure, sur_out, sur_importance,
                                 sur_expl);
        if (*agr) return cmd_agreement(agr_sets, agr_out);
        if (*runc)
            return cmd_run(run_config, run_seed, run_seed_opt->count() > 0, run_entities,
                           run_out_dir);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const hunod::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
