#pragma once

#include <map>
#include <string>
#include <vector>

#include "riskpipe/domain.hpp"

namespace riskpipe {

struct EnsembleMember {
    std::string annotator_id;
    double weight = 1.0;

    bool operator==(const EnsembleMember&) const = default;
};

// Set of voting members. At least one member; weights finite and positive.
class EnsembleConfig {
  public:
    explicit EnsembleConfig(std::vector<EnsembleMember> members);

    const std::vector<EnsembleMember>& members() const { return members_; }

    // The five-member setup this project ships as its default: one
    // prompting model at weight 2 and four fine-tuned models at weight 1.
    static EnsembleConfig default_config();

    std::string to_json() const;
    static EnsembleConfig from_json(const std::string& text);

  private:
    std::vector<EnsembleMember> members_;
};

// Componentwise arithmetic mean of probability vectors.
// Throws EmptyInputError on an empty list.
ProbabilityVector cv_average(const std::vector<ProbabilityVector>& fold_outputs);

// Class of the maximal component; exact ties break toward the higher
// severity rank.
RiskLevel argmax_class(const ProbabilityVector& p);

// Weighted majority vote: the class maximizing the summed weights of its
// voters, ties toward higher severity. `predictions` must cover exactly the
// configured member ids (MissingMemberError otherwise).
RiskLevel weighted_vote(const std::map<std::string, RiskLevel>& predictions,
                        const EnsembleConfig& config);

}  // namespace riskpipe
