#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskpipe/annotator.hpp"
#include "riskpipe/consensus.hpp"
#include "riskpipe/datasplit.hpp"
#include "riskpipe/domain.hpp"
#include "riskpipe/ensemble.hpp"
#include "riskpipe/errors.hpp"
#include "riskpipe/llm_gateway.hpp"
#include "riskpipe/metrics.hpp"
#include "riskpipe/pipeline_config.hpp"
#include "riskpipe/softf1.hpp"

namespace {

namespace fs = std::filesystem;
using namespace riskpipe;

constexpr int kExitOk = 0;
constexpr int kExitUserError = 1;
constexpr int kExitRuntimeError = 2;

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::string out;
};

void add_common_options(CLI::App* sub, CommonArgs& args) {
    sub->add_option("--config", args.config_path, "Pipeline config file (TOML)");
    sub->add_option("--seed", args.seed, "Override the config seed");
    sub->add_option("--parallelism", args.parallelism, "Override the config parallelism")
        ->check(CLI::PositiveNumber);
    sub->add_option("--out", args.out, "Output path (command-specific default otherwise)");
}

PipelineConfig load_config(const CommonArgs& args, bool required) {
    PipelineConfig config;
    if (!args.config_path.empty()) {
        config = PipelineConfig::load(args.config_path);
    } else if (required) {
        throw ConfigError("--config is required for this command");
    }
    if (args.seed.has_value()) {
        config.seed = *args.seed;
    }
    if (args.parallelism.has_value()) {
        config.parallelism = *args.parallelism;
    }
    return config;
}

std::string out_path(const CommonArgs& args, const PipelineConfig& config,
                     const std::string& default_name) {
    fs::path path = args.out.empty() ? fs::path(config.out_dir) / default_name
                                     : fs::path(args.out);
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    return path.string();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open for writing: " + path);
    }
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void print_class_counts(std::ostream& os, const std::map<RiskLevel, std::size_t>& counts) {
    for (RiskLevel level : kAllRiskLevels) {
        const auto it = counts.find(level);
        os << "  " << to_string(level) << ": " << (it == counts.end() ? 0 : it->second) << "\n";
    }
}

// post_id -> label pairs from annotation-shaped or dataset-shaped JSONL.
std::map<std::string, RiskLevel> read_labels_by_post(const std::string& path) {
    std::map<std::string, RiskLevel> labels;
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!row.contains("post_id") || !row.contains("label") || row["label"].is_null()) {
            throw FormatError(path + ": line " + std::to_string(line_no) +
                              ": row needs post_id and a non-null label");
        }
        const std::string post_id = row["post_id"].get<std::string>();
        const RiskLevel label = parse_risk_level(row["label"].get<std::string>());
        if (!labels.emplace(post_id, label).second) {
            throw DuplicateIdError(path + ": duplicate post_id " + post_id);
        }
    }
    return labels;
}

int cmd_annotate(const CommonArgs& args) {
    const PipelineConfig config = load_config(args, true);
    if (config.fleet.empty()) {
        throw ConfigError("config defines no [[annotators]]");
    }
    if (config.posts_path.empty()) {
        throw ConfigError("config needs paths.posts for annotate");
    }
    const Dataset posts = ingest(config.posts_path, format_for_path(config.posts_path));
    std::vector<Post> post_list;
    post_list.reserve(posts.size());
    for (const DatasetRow& row : posts.rows()) {
        post_list.push_back(row.post);
    }

    const LlmClient client(config.retry);
    const AnnotationPolicy policy;
    std::vector<Annotation> all_annotations;
    std::size_t failures = 0;
    for (const FleetEntry& entry : config.fleet) {
        AnnotatorTemplates templates = AnnotatorTemplates::defaults();
        if (!entry.classification_template.empty()) {
            templates.classification = PromptTemplate::load_file(entry.classification_template,
                                                                 TemplateKind::Classification);
        }
        if (!entry.moveon_template.empty()) {
            templates.moveon = PromptTemplate::load_file(entry.moveon_template,
                                                         TemplateKind::MoveOn);
        }
        const AnnotatorSpec spec{entry.annotator_id, entry.decoding};
        const AnnotationRun run = annotate_many(post_list, client, spec, templates, policy,
                                                config.parallelism);
        for (const AnnotationFailure& failure : run.failures) {
            std::cerr << "[" << entry.annotator_id << "] " << failure.post_id << ": "
                      << failure.message << "\n";
        }
        failures += run.failures.size();
        all_annotations.insert(all_annotations.end(), run.annotations.begin(),
                               run.annotations.end());
    }

    const std::string path = out_path(args, config, "annotations.jsonl");
    write_annotations(path, all_annotations);

    std::map<RiskLevel, std::size_t> counts;
    for (const Annotation& annotation : all_annotations) {
        ++counts[annotation.label];
    }
    std::cout << "annotations: " << all_annotations.size() << " rows -> " << path << "\n";
    print_class_counts(std::cout, counts);
    std::cout << "parse failures: " << failures << "\n";
    return kExitOk;
}

int cmd_consensus(const CommonArgs& args, const std::string& annotations_path,
                  const std::string& assemble_path) {
    const PipelineConfig config = load_config(args, false);
    const std::vector<Annotation> annotations = read_annotations(annotations_path);
    std::set<std::string> required = config.required_annotators;
    if (required.empty()) {
        for (const Annotation& annotation : annotations) {
            required.insert(annotation.annotator_id);
        }
    }
    if (required.empty()) {
        throw ConfigError("no annotators found; set [consensus] required or supply annotations");
    }

    const auto [kept, report] = unanimous_filter(annotations, required);
    std::cout << report.to_json() << "\n";

    const std::string path = out_path(args, config, "pseudo_labels.jsonl");
    std::ostringstream rows;
    for (const auto& [post_id, label] : kept) {
        const nlohmann::json row = {{"post_id", post_id}, {"label", to_string(label)}};
        rows << row.dump() << '\n';
    }
    write_file(path, rows.str());
    std::cout << "pseudo labels: " << kept.size() << " rows -> " << path << "\n";

    if (!assemble_path.empty()) {
        if (config.gold_path.empty() || config.posts_path.empty()) {
            throw ConfigError("assembling needs paths.gold and paths.posts in the config");
        }
        const Dataset gold_set = ingest(config.gold_path, format_for_path(config.gold_path));
        const Dataset store = ingest(config.posts_path, format_for_path(config.posts_path));
        std::vector<Post> gold;
        gold.reserve(gold_set.size());
        for (const DatasetRow& row : gold_set.rows()) {
            gold.push_back(row.post);
        }
        const Dataset training = assemble_training_set(gold, kept, store);
        write_dataset(training, assemble_path, format_for_path(assemble_path));
        std::cout << "training set: " << training.size() << " rows (" << gold.size()
                  << " gold + " << kept.size() << " pseudo) -> " << assemble_path << "\n";
        print_class_counts(std::cout, training.class_counts());
    }
    return kExitOk;
}

int cmd_split(const CommonArgs& args, const std::string& dataset_path) {
    const PipelineConfig config = load_config(args, false);
    const std::string path = !dataset_path.empty() ? dataset_path : config.gold_path;
    if (path.empty()) {
        throw ConfigError("split needs a dataset argument or paths.gold in the config");
    }
    const Dataset dataset = ingest(path, format_for_path(path));
    const FoldAssignment folds = stratified_folds(dataset, config.k, config.seed);

    std::vector<std::size_t> sizes(static_cast<std::size_t>(folds.k), 0);
    for (const auto& [post_id, fold] : folds.assignment) {
        ++sizes[static_cast<std::size_t>(fold)];
    }
    const std::string out = out_path(args, config, "folds.json");
    write_file(out, folds.to_json());
    std::cout << "folds: k=" << folds.k << ", " << folds.assignment.size() << " posts -> " << out
              << "\n";
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        std::cout << "  fold " << i << ": " << sizes[i] << " posts\n";
    }
    return kExitOk;
}

int cmd_ensemble(const CommonArgs& args, const std::string& predictions_path) {
    const PipelineConfig config = load_config(args, false);
    std::cout << config.ensemble.to_json() << "\n";
    if (predictions_path.empty()) {
        return kExitOk;
    }

    const std::vector<Annotation> predictions = read_annotations(predictions_path);
    std::map<std::string, std::map<std::string, RiskLevel>> by_post;
    for (const Annotation& prediction : predictions) {
        auto [it, inserted] =
            by_post[prediction.post_id].emplace(prediction.annotator_id, prediction.label);
        if (!inserted) {
            throw DuplicateAnnotationError("post " + prediction.post_id +
                                           " predicted twice by " + prediction.annotator_id);
        }
    }

    std::ostringstream rows;
    for (const auto& [post_id, votes] : by_post) {
        const RiskLevel label = weighted_vote(votes, config.ensemble);
        const nlohmann::json row = {{"post_id", post_id}, {"label", to_string(label)}};
        rows << row.dump() << '\n';
    }
    const std::string out = out_path(args, config, "ensemble_labels.jsonl");
    write_file(out, rows.str());
    std::cout << "ensemble labels: " << by_post.size() << " rows -> " << out << "\n";
    return kExitOk;
}

int cmd_evaluate(const CommonArgs& args, const std::string& preds_path,
                 const std::string& truths_path) {
    const PipelineConfig config = load_config(args, false);
    const std::map<std::string, RiskLevel> pred_labels = read_labels_by_post(preds_path);
    const std::map<std::string, RiskLevel> truth_labels = read_labels_by_post(truths_path);

    std::vector<RiskLevel> preds;
    std::vector<RiskLevel> truths;
    std::vector<std::string> missing;
    for (const auto& [post_id, truth] : truth_labels) {
        const auto it = pred_labels.find(post_id);
        if (it == pred_labels.end()) {
            missing.push_back(post_id);
            continue;
        }
        preds.push_back(it->second);
        truths.push_back(truth);
    }
    if (!missing.empty()) {
        std::string joined;
        for (std::size_t i = 0; i < missing.size() && i < 5; ++i) {
            joined += (i > 0 ? ", " : "") + missing[i];
        }
        throw LengthMismatchError("predictions missing for " + std::to_string(missing.size()) +
                                  " posts (" + joined + (missing.size() > 5 ? ", ..." : "") +
                                  ")");
    }

    const MetricsReport report = evaluate(preds, truths);
    std::cout << report.to_text();
    if (!args.out.empty()) {
        const std::string out = out_path(args, config, "metrics.json");
        write_file(out, report.to_json());
        std::cout << "report -> " << out << "\n";
    }
    return kExitOk;
}

// Four well-separated Gaussian blobs in feature space with the class mix
// drawn from `proportions`, for the demo path of train-toy.
FeatureDataset demo_blobs(std::size_t n, std::size_t dim, std::uint64_t seed) {
    const std::array<double, kNumRiskLevels> proportions = {0.385, 0.357, 0.204, 0.054};
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 0.35);

    FeatureDataset data;
    std::array<std::size_t, kNumRiskLevels> counts{};
    for (std::size_t c = 0; c + 1 < kNumRiskLevels; ++c) {
        counts[c] = static_cast<std::size_t>(proportions[c] * static_cast<double>(n));
    }
    counts[kNumRiskLevels - 1] = n - counts[0] - counts[1] - counts[2];

    for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            std::vector<double> row(dim, 0.0);
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] = (j % kNumRiskLevels == c ? 2.0 : 0.0) + noise(rng);
            }
            data.features.push_back(std::move(row));
            data.labels.push_back(risk_level_from_rank(static_cast<int>(c)));
        }
    }
    return data;
}

int cmd_train_toy(const CommonArgs& args, const std::string& features_path,
                  const std::string& loss_name, std::optional<int> epochs,
                  std::optional<double> lr) {
    const PipelineConfig config = load_config(args, false);
    FeatureDataset data;
    if (features_path.empty()) {
        data = demo_blobs(200, 8, config.seed);
        std::cout << "no features file given; training on a built-in synthetic task\n";
    } else {
        data = read_features(features_path);
    }

    TrainConfig train;
    train.loss = config.train_loss;
    train.lr = lr.value_or(config.train_lr);
    train.epochs = epochs.value_or(config.train_epochs);
    train.seed = config.seed;
    if (!loss_name.empty()) {
        if (loss_name == "soft_f1") {
            train.loss = LossKind::SoftF1;
        } else if (loss_name == "cross_entropy") {
            train.loss = LossKind::CrossEntropy;
        } else {
            throw ConfigError("--loss must be soft_f1 or cross_entropy");
        }
    }

    const TrainResult result = train_toy(data.features, data.labels, train);
    std::cout << result.train_metrics.to_text();

    const std::string out = out_path(args, config, "loss_curve.csv");
    write_file(out, loss_curve_to_csv(result.loss_curve));
    std::cout << "loss curve: " << result.loss_curve.size() << " epochs -> " << out << "\n";
    return kExitOk;
}

int cmd_stats(const CommonArgs& args, const std::string& posts_path, int bucket) {
    const PipelineConfig config = load_config(args, false);
    const std::string path = !posts_path.empty() ? posts_path : config.posts_path;
    if (path.empty()) {
        throw ConfigError("stats needs a posts argument or paths.posts in the config");
    }
    const Dataset dataset = ingest(path, format_for_path(path));
    const WhitespaceTokenizer tokenizer;

    std::vector<std::size_t> word_counts;
    std::vector<std::size_t> token_counts;
    std::size_t max_count = 0;
    for (const DatasetRow& row : dataset.rows()) {
        std::size_t words = 0;
        bool in_word = false;
        for (char ch : row.post.text) {
            const bool space = std::isspace(static_cast<unsigned char>(ch)) != 0;
            if (!space && !in_word) {
                ++words;
            }
            in_word = !space;
        }
        const std::size_t tokens = tokenizer.encode(row.post.text).size();
        word_counts.push_back(words);
        token_counts.push_back(tokens);
        max_count = std::max({max_count, words, tokens});
    }

    std::ostringstream csv;
    csv << "bucket_start,bucket_end,posts_by_words,posts_by_tokens\n";
    const std::size_t width = static_cast<std::size_t>(bucket);
    for (std::size_t start = 0; start <= max_count; start += width) {
        const std::size_t end = start + width - 1;
        std::size_t by_words = 0;
        std::size_t by_tokens = 0;
        for (std::size_t count : word_counts) {
            by_words += (count >= start && count <= end) ? 1 : 0;
        }
        for (std::size_t count : token_counts) {
            by_tokens += (count >= start && count <= end) ? 1 : 0;
        }
        csv << start << ',' << end << ',' << by_words << ',' << by_tokens << '\n';
        if (dataset.size() == 0) {
            break;
        }
    }

    if (args.out.empty()) {
        std::cout << csv.str();
    } else {
        const std::string out = out_path(args, config, "stats.csv");
        write_file(out, csv.str());
        std::cout << dataset.size() << " posts, max count " << max_count << " -> " << out
                  << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Pseudo-labeling, consensus, and evaluation pipeline for risk-level text "
                 "classification"};
    app.require_subcommand(1);

    CommonArgs annotate_args;
    CLI::App* annotate = app.add_subcommand("annotate", "Annotate posts via the configured fleet");
    add_common_options(annotate, annotate_args);

    CommonArgs consensus_args;
    std::string consensus_annotations;
    std::string consensus_assemble;
    CLI::App* consensus =
        app.add_subcommand("consensus", "Filter annotations by unanimous agreement");
    consensus->add_option("annotations", consensus_annotations, "Annotations JSONL file")
        ->required();
    consensus->add_option("--assemble", consensus_assemble,
                          "Also write gold + pseudo training set to this path");
    add_common_options(consensus, consensus_args);

    CommonArgs split_args;
    std::string split_dataset;
    CLI::App* split = app.add_subcommand("split", "Stratified k-fold assignment over gold rows");
    split->add_option("dataset", split_dataset, "Dataset file (defaults to paths.gold)");
    add_common_options(split, split_args);

    CommonArgs ensemble_args;
    std::string ensemble_predictions;
    CLI::App* ensemble =
        app.add_subcommand("ensemble", "Print ensemble weights and vote over predictions");
    ensemble->add_option("predictions", ensemble_predictions,
                         "Per-annotator predictions JSONL file");
    add_common_options(ensemble, ensemble_args);

    CommonArgs evaluate_args;
    std::string evaluate_preds;
    std::string evaluate_truths;
    CLI::App* evaluate = app.add_subcommand("evaluate", "Score predictions against gold labels");
    evaluate->add_option("predictions", evaluate_preds, "Predictions JSONL file")->required();
    evaluate->add_option("truths", evaluate_truths, "Gold labels JSONL file")->required();
    add_common_options(evaluate, evaluate_args);

    CommonArgs train_args;
    std::string train_features;
    std::string train_loss;
    std::optional<int> train_epochs;
    std::optional<double> train_lr;
    CLI::App* train =
        app.add_subcommand("train-toy", "Train the linear classifier head at desk scale");
    train->add_option("features", train_features,
                      "Features file (CSV/JSONL); omitted = built-in synthetic task");
    train->add_option("--loss", train_loss, "soft_f1 or cross_entropy");
    train->add_option("--epochs", train_epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    train->add_option("--lr", train_lr, "Learning rate");
    add_common_options(train, train_args);

    CommonArgs stats_args;
    std::string stats_posts;
    int stats_bucket = 100;
    CLI::App* stats = app.add_subcommand("stats", "Word/token count histograms for a corpus");
    stats->add_option("posts", stats_posts, "Posts file (defaults to paths.posts)");
    stats->add_option("--bucket", stats_bucket, "Histogram bucket width")
        ->check(CLI::PositiveNumber);
    add_common_options(stats, stats_args);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUserError;
    }

    try {
        if (app.got_subcommand(annotate)) {
            return cmd_annotate(annotate_args);
        }
        if (app.got_subcommand(consensus)) {
            return cmd_consensus(consensus_args, consensus_annotations, consensus_assemble);
        }
        if (app.got_subcommand(split)) {
            return cmd_split(split_args, split_dataset);
        }
        if (app.got_subcommand(ensemble)) {
            return cmd_ensemble(ensemble_args, ensemble_predictions);
        }
        if (app.got_subcommand(evaluate)) {
            return cmd_evaluate(evaluate_args, evaluate_preds, evaluate_truths);
        }
        if (app.got_subcommand(train)) {
            return cmd_train_toy(train_args, train_features, train_loss, train_epochs, train_lr);
        }
        if (app.got_subcommand(stats)) {
            return cmd_stats(stats_args, stats_posts, stats_bucket);
        }
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    } catch (const ProtocolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    } catch (const BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    } catch (const AnnotationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUserError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntimeError;
    }
    return kExitUserError;
}
