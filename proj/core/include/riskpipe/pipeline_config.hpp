#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "riskpipe/ensemble.hpp"
#include "riskpipe/llm_gateway.hpp"
#include "riskpipe/softf1.hpp"
#include "riskpipe/toml.hpp"

namespace riskpipe {

// One annotator in the fleet. Empty template paths mean the built-in
// defaults. API keys come from the environment, never from config.
struct FleetEntry {
    std::string annotator_id;
    DecodingConfig decoding;
    std::string classification_template;
    std::string moveon_template;
};

// Parsed pipeline configuration. All paths are resolved relative to the
// config file's directory; referenced files must exist at load time.
struct PipelineConfig {
    std::uint64_t seed = 0;
    int parallelism = 1;

    std::string posts_path;  // unlabeled corpus
    std::string gold_path;   // gold-labeled dataset
    std::string out_dir = ".";

    int token_budget = 2500;
    bool truncation_marker = true;
    std::string marker = "...";

    int k = 5;

    std::vector<FleetEntry> fleet;
    std::set<std::string> required_annotators;  // defaults to the fleet ids

    EnsembleConfig ensemble = EnsembleConfig::default_config();
    RetryPolicy retry;

    LossKind train_loss = LossKind::SoftF1;
    double train_lr = 1e-3;
    int train_epochs = 200;

    static PipelineConfig load(const std::string& path);
    static PipelineConfig from_table(const toml::Table& table, const std::string& base_dir);
};

}  // namespace riskpipe
