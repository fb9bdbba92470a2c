#include "riskpipe/ensemble.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

#include "riskpipe/errors.hpp"

namespace riskpipe {

using nlohmann::json;

EnsembleConfig::EnsembleConfig(std::vector<EnsembleMember> members) : members_(std::move(members)) {
    if (members_.empty()) {
        throw DomainError("ensemble config needs at least one member");
    }
    std::set<std::string> seen;
    for (const auto& member : members_) {
        if (member.annotator_id.empty()) {
            throw DomainError("ensemble member with empty id");
        }
        if (!std::isfinite(member.weight) || member.weight <= 0.0) {
            throw DomainError("ensemble member \"" + member.annotator_id +
                              "\" has non-positive weight");
        }
        if (!seen.insert(member.annotator_id).second) {
            throw DomainError("duplicate ensemble member \"" + member.annotator_id + "\"");
        }
    }
}

EnsembleConfig EnsembleConfig::default_config() {
    return EnsembleConfig({
        {"qwen2-72b-instruct", 2.0},
        {"llama3-8b-1", 1.0},
        {"llama3-8b-2", 1.0},
        {"llama3.1-8b", 1.0},
        {"gemma2-9b", 1.0},
    });
}

std::string EnsembleConfig::to_json() const {
    json members = json::array();
    for (const auto& member : members_) {
        members.push_back({{"id", member.annotator_id}, {"weight", member.weight}});
    }
    return json{{"members", members}}.dump(2);
}

EnsembleConfig EnsembleConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("ensemble config: ") + e.what());
    }
    if (!j.contains("members") || !j["members"].is_array()) {
        throw ConfigError("ensemble config: missing \"members\" array");
    }
    std::vector<EnsembleMember> members;
    for (const auto& entry : j["members"]) {
        EnsembleMember member;
        member.annotator_id = entry.at("id").get<std::string>();
        member.weight = entry.value("weight", 1.0);
        members.push_back(std::move(member));
    }
    return EnsembleConfig(std::move(members));
}

ProbabilityVector cv_average(const std::vector<ProbabilityVector>& fold_outputs) {
    if (fold_outputs.empty()) {
        throw EmptyInputError("cv_average: no probability vectors");
    }
    std::array<double, kNumRiskLevels> mean{};
    for (const auto& v : fold_outputs) {
        for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
            mean[c] += v[c];
        }
    }
    for (double& component : mean) {
        component /= static_cast<double>(fold_outputs.size());
    }
    return ProbabilityVector(mean);
}

RiskLevel argmax_class(const ProbabilityVector& p) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumRiskLevels; ++c) {
        if (p[c] >= p[best]) {  // >= breaks ties toward higher severity
            best = c;
        }
    }
    return risk_level_from_rank(static_cast<int>(best));
}

RiskLevel weighted_vote(const std::map<std::string, RiskLevel>& predictions,
                        const EnsembleConfig& config) {
    std::string missing;
    for (const auto& member : config.members()) {
        if (!predictions.contains(member.annotator_id)) {
            if (!missing.empty()) missing += ", ";
            missing += member.annotator_id;
        }
    }
    if (!missing.empty()) {
        throw MissingMemberError("weighted_vote: missing predictions for " + missing);
    }
    if (predictions.size() != config.members().size()) {
        std::string extra;
        for (const auto& [id, level] : predictions) {
            bool known = false;
            for (const auto& member : config.members()) {
                if (member.annotator_id == id) known = true;
            }
            if (!known) {
                if (!extra.empty()) extra += ", ";
                extra += id;
            }
        }
        throw MissingMemberError("weighted_vote: predictions from non-members: " + extra);
    }

    std::array<double, kNumRiskLevels> scores{};
    for (const auto& member : config.members()) {
        const RiskLevel vote = predictions.at(member.annotator_id);
        scores[static_cast<std::size_t>(severity_rank(vote))] += member.weight;
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumRiskLevels; ++c) {
        if (scores[c] >= scores[best]) {
            best = c;
        }
    }
    return risk_level_from_rank(static_cast<int>(best));
}

}  // namespace riskpipe
