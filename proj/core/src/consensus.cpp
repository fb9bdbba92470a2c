#include "riskpipe/consensus.hpp"

#include <json.hpp>

#include "riskpipe/errors.hpp"

namespace riskpipe {

std::string ConsensusReport::to_json() const {
    nlohmann::json per_class = nlohmann::json::object();
    for (const auto& [level, count] : per_class_counts) {
        per_class[to_string(level)] = count;
    }
    nlohmann::json out = {
        {"total_posts", total_posts},
        {"agreed_posts", agreed_posts},
        {"coverage", coverage},
        {"per_class_counts", per_class},
    };
    return out.dump(2);
}

std::pair<std::vector<std::pair<std::string, RiskLevel>>, ConsensusReport> unanimous_filter(
    const std::vector<Annotation>& annotations, const std::set<std::string>& required_annotators) {
    if (required_annotators.empty()) {
        throw PreconditionError("required annotator set must be non-empty");
    }

    // post_id -> annotator_id -> label, restricted to required annotators.
    std::map<std::string, std::map<std::string, RiskLevel>> by_post;
    for (const Annotation& annotation : annotations) {
        if (required_annotators.count(annotation.annotator_id) == 0) {
            continue;
        }
        auto& per_annotator = by_post[annotation.post_id];
        auto [it, inserted] = per_annotator.emplace(annotation.annotator_id, annotation.label);
        if (!inserted) {
            throw DuplicateAnnotationError("post " + annotation.post_id +
                                           " annotated twice by " + annotation.annotator_id);
        }
    }

    std::vector<std::pair<std::string, RiskLevel>> kept;
    ConsensusReport report;
    report.total_posts = by_post.size();
    for (const auto& [post_id, per_annotator] : by_post) {
        if (per_annotator.size() != required_annotators.size()) {
            continue;
        }
        bool unanimous = true;
        const RiskLevel first = per_annotator.begin()->second;
        for (const auto& [annotator_id, label] : per_annotator) {
            if (label != first) {
                unanimous = false;
                break;
            }
        }
        if (unanimous) {
            kept.emplace_back(post_id, first);
            ++report.per_class_counts[first];
        }
    }
    report.agreed_posts = kept.size();
    report.coverage = report.total_posts == 0
                          ? 0.0
                          : static_cast<double>(report.agreed_posts) /
                                static_cast<double>(report.total_posts);
    return {std::move(kept), report};
}

Dataset assemble_training_set(const std::vector<Post>& gold,
                              const std::vector<std::pair<std::string, RiskLevel>>& pseudo,
                              const Dataset& post_store) {
    Dataset out;
    std::set<std::string> gold_ids;
    for (const Post& post : gold) {
        if (!post.gold_label.has_value()) {
            throw DomainError("gold post " + post.post_id + " has no label");
        }
        gold_ids.insert(post.post_id);
        out.add_row(post, Provenance::Gold);
    }
    for (const auto& [post_id, label] : pseudo) {
        if (gold_ids.count(post_id) != 0) {
            throw OverlapError("pseudo post " + post_id + " already present in gold");
        }
        Post post = post_store.row_for(post_id).post;
        post.gold_label = label;
        out.add_row(std::move(post), Provenance::Pseudo);
    }
    return out;
}

}  // namespace riskpipe
