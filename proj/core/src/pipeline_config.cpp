#include "riskpipe/pipeline_config.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "riskpipe/errors.hpp"

namespace riskpipe {

namespace {

namespace fs = std::filesystem;

std::string resolve_path(const std::string& base_dir, const std::string& path) {
    if (path.empty()) {
        return path;
    }
    fs::path p(path);
    if (p.is_absolute()) {
        return p.lexically_normal().string();
    }
    return (fs::path(base_dir) / p).lexically_normal().string();
}

void require_exists(const std::string& path, const std::string& what) {
    if (!path.empty() && !fs::exists(path)) {
        throw ConfigError(what + " does not exist: " + path);
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot open file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

int checked_int(std::int64_t value, std::int64_t lo, std::int64_t hi, const std::string& what) {
    if (value < lo || value > hi) {
        throw ConfigError(what + " must be in [" + std::to_string(lo) + ", " +
                          std::to_string(hi) + "], got " + std::to_string(value));
    }
    return static_cast<int>(value);
}

bool looks_like_secret(const std::string& key) {
    std::string lower;
    for (char ch : key) {
        if (ch != '_' && ch != '-') {
            lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        }
    }
    return lower == "apikey" || lower == "token" || lower == "secret" ||
           lower == "authorization" || lower == "bearer" || lower == "password";
}

// Credentials belong in the RISKPIPE_API_KEY environment variable, never in
// a config file that might get committed or shared.
void reject_secrets(const toml::Table& table) {
    for (const auto& [key, value] : table.values) {
        if (looks_like_secret(key)) {
            throw ConfigError("config key \"" + key + "\" looks like a credential; set " +
                              std::string(kApiKeyEnvVar) + " in the environment instead");
        }
    }
    for (const auto& [key, sub] : table.tables) {
        reject_secrets(sub);
    }
    for (const auto& [key, subs] : table.table_arrays) {
        for (const toml::Table& sub : subs) {
            reject_secrets(sub);
        }
    }
}

}  // namespace

PipelineConfig PipelineConfig::from_table(const toml::Table& table, const std::string& base_dir) {
    reject_secrets(table);

    PipelineConfig config;

    const std::int64_t seed = table.get_integer_or("seed", 0);
    if (seed < 0) {
        throw ConfigError("seed must be >= 0");
    }
    config.seed = static_cast<std::uint64_t>(seed);
    config.parallelism =
        checked_int(table.get_integer_or("parallelism", 1), 1, 4096, "parallelism");

    if (table.has_table("paths")) {
        const toml::Table& paths = table.table("paths");
        config.posts_path = resolve_path(base_dir, paths.get_string_or("posts", ""));
        config.gold_path = resolve_path(base_dir, paths.get_string_or("gold", ""));
        config.out_dir = resolve_path(base_dir, paths.get_string_or("out_dir", "."));
    } else {
        config.out_dir = resolve_path(base_dir, ".");
    }
    require_exists(config.posts_path, "posts file");
    require_exists(config.gold_path, "gold file");

    if (table.has_table("truncation")) {
        const toml::Table& truncation = table.table("truncation");
        config.token_budget =
            checked_int(truncation.get_integer_or("token_budget", 2500), 2, 1 << 24,
                        "truncation.token_budget");
        config.truncation_marker = truncation.get_boolean_or("use_marker", true);
        config.marker = truncation.get_string_or("marker", "...");
        if (config.marker.empty()) {
            throw ConfigError("truncation.marker must be non-empty (or disable use_marker)");
        }
    }

    if (table.has_table("split")) {
        config.k = checked_int(table.table("split").get_integer_or("k", 5), 2, 1 << 16, "split.k");
    }

    if (table.has_table_array("annotators")) {
        std::set<std::string> seen;
        for (const toml::Table& entry : table.table_array("annotators")) {
            FleetEntry fleet_entry;
            fleet_entry.annotator_id = entry.get_string("id");
            if (fleet_entry.annotator_id.empty()) {
                throw ConfigError("annotator id must be non-empty");
            }
            if (!seen.insert(fleet_entry.annotator_id).second) {
                throw ConfigError("duplicate annotator id: " + fleet_entry.annotator_id);
            }
            fleet_entry.decoding.endpoint_url = entry.get_string("endpoint");
            fleet_entry.decoding.model_name =
                entry.get_string_or("model", fleet_entry.annotator_id);
            fleet_entry.decoding.temperature = entry.get_number_or("temperature", 0.0);
            if (fleet_entry.decoding.temperature < 0.0) {
                throw ConfigError("temperature must be >= 0 for " + fleet_entry.annotator_id);
            }
            fleet_entry.decoding.max_new_tokens = checked_int(
                entry.get_integer_or("max_new_tokens", 1024), 1, 1 << 24, "max_new_tokens");
            fleet_entry.classification_template =
                resolve_path(base_dir, entry.get_string_or("classification_template", ""));
            fleet_entry.moveon_template =
                resolve_path(base_dir, entry.get_string_or("moveon_template", ""));
            require_exists(fleet_entry.classification_template,
                           "classification template for " + fleet_entry.annotator_id);
            require_exists(fleet_entry.moveon_template,
                           "moveon template for " + fleet_entry.annotator_id);
            config.fleet.push_back(std::move(fleet_entry));
        }
    }

    if (table.has_table("consensus")) {
        for (const std::string& id :
             table.table("consensus").get_string_array_or("required")) {
            if (!config.required_annotators.insert(id).second) {
                throw ConfigError("duplicate required annotator: " + id);
            }
        }
    }
    if (config.required_annotators.empty()) {
        for (const FleetEntry& entry : config.fleet) {
            config.required_annotators.insert(entry.annotator_id);
        }
    }

    if (table.has_table("ensemble")) {
        const toml::Table& ensemble = table.table("ensemble");
        if (ensemble.has_value("config")) {
            const std::string path = resolve_path(base_dir, ensemble.get_string("config"));
            require_exists(path, "ensemble config");
            try {
                config.ensemble = EnsembleConfig::from_json(read_file(path));
            } catch (const Error& e) {
                throw ConfigError("ensemble config " + path + ": " + e.what());
            }
        } else if (ensemble.has_table_array("members")) {
            std::vector<EnsembleMember> members;
            for (const toml::Table& member : ensemble.table_array("members")) {
                members.push_back(
                    EnsembleMember{member.get_string("id"), member.get_number_or("weight", 1.0)});
            }
            config.ensemble = EnsembleConfig(std::move(members));
        }
    }

    if (table.has_table("gateway")) {
        const toml::Table& gateway = table.table("gateway");
        config.retry.max_retries =
            checked_int(gateway.get_integer_or("max_retries", 3), 0, 100, "gateway.max_retries");
        config.retry.backoff_base_ms = checked_int(
            gateway.get_integer_or("backoff_base_ms", 500), 0, 600000, "gateway.backoff_base_ms");
        config.retry.timeout_s =
            checked_int(gateway.get_integer_or("timeout_s", 120), 1, 3600, "gateway.timeout_s");
    }

    if (table.has_table("train")) {
        const toml::Table& train = table.table("train");
        const std::string loss = train.get_string_or("loss", "soft_f1");
        if (loss == "soft_f1") {
            config.train_loss = LossKind::SoftF1;
        } else if (loss == "cross_entropy") {
            config.train_loss = LossKind::CrossEntropy;
        } else {
            throw ConfigError("train.loss must be soft_f1 or cross_entropy, got '" + loss + "'");
        }
        config.train_lr = train.get_number_or("lr", 1e-3);
        if (config.train_lr <= 0.0) {
            throw ConfigError("train.lr must be > 0");
        }
        config.train_epochs =
            checked_int(train.get_integer_or("epochs", 200), 0, 1 << 24, "train.epochs");
    }

    return config;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
    const toml::Table table = toml::load_file(path);
    const std::string base_dir = fs::path(path).parent_path().string();
    try {
        return from_table(table, base_dir.empty() ? "." : base_dir);
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

}  // namespace riskpipe
