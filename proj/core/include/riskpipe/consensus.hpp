#pragma once

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "riskpipe/datasplit.hpp"
#include "riskpipe/domain.hpp"

namespace riskpipe {

struct ConsensusReport {
    std::size_t total_posts = 0;
    std::size_t agreed_posts = 0;
    double coverage = 0.0;  // agreed / total, 0 when total = 0
    std::map<RiskLevel, std::size_t> per_class_counts;

    std::string to_json() const;
};

// Keeps a post iff every required annotator labeled it and all labels
// match; a missing annotation vetoes the post. Annotations from ids outside
// the required set are ignored. The kept list is sorted by post_id.
// Throws DuplicateAnnotationError on a (post_id, annotator_id) collision.
std::pair<std::vector<std::pair<std::string, RiskLevel>>, ConsensusReport> unanimous_filter(
    const std::vector<Annotation>& annotations, const std::set<std::string>& required_annotators);

// Gold rows plus pseudo-labeled rows (text resolved via post_store), tagged
// by provenance. Gold posts must carry gold labels; pseudo ids must be
// absent from gold (OverlapError) and present in the store
// (MissingPostError).
Dataset assemble_training_set(const std::vector<Post>& gold,
                              const std::vector<std::pair<std::string, RiskLevel>>& pseudo,
                              const Dataset& post_store);

}  // namespace riskpipe
