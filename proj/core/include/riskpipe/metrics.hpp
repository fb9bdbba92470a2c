#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "riskpipe/domain.hpp"

namespace riskpipe {

struct PerClassScores {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
};

// Standard one-vs-rest scores over the four risk levels.
//
// Conventions: precision/recall with a zero denominator are 0; macro_f1
// averages over all four classes; weighted_f1 weights each class F1 by
// n_c / N, so zero-support classes contribute nothing.
struct MetricsReport {
    // confusion[true][pred]
    std::array<std::array<std::size_t, kNumRiskLevels>, kNumRiskLevels> confusion{};
    std::map<RiskLevel, PerClassScores> per_class;
    std::size_t total = 0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;

    std::string to_json() const;

    // Aligned per-class precision/recall/F1/support table, sklearn style.
    std::string to_text() const;
};

// Throws LengthMismatchError when the lists differ in length, EmptyError
// when both are empty.
MetricsReport evaluate(const std::vector<RiskLevel>& preds, const std::vector<RiskLevel>& truths);

// Pairwise raw match rates between prediction lists. Symmetric with unit
// diagonal; ids are reported in sorted order.
struct AgreementMatrix {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> rates;

    std::string to_json() const;
    std::string to_csv() const;
};

AgreementMatrix agreement_matrix(const std::map<std::string, std::vector<RiskLevel>>& model_preds);

}  // namespace riskpipe
