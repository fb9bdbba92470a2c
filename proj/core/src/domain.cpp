#include "riskpipe/domain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "riskpipe/errors.hpp"

namespace riskpipe {

namespace {

std::string lowercase(std::string_view text) {
    std::string out(text);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

RiskLevel risk_level_from_rank(int rank) {
    if (rank < 0 || rank >= static_cast<int>(kNumRiskLevels)) {
        throw DomainError("risk level rank out of range: " + std::to_string(rank));
    }
    return static_cast<RiskLevel>(rank);
}

std::string to_string(RiskLevel level) {
    switch (level) {
        case RiskLevel::Indicator: return "indicator";
        case RiskLevel::Ideation: return "ideation";
        case RiskLevel::Behaviour: return "behaviour";
        case RiskLevel::Attempt: return "attempt";
    }
    throw DomainError("invalid RiskLevel value");
}

RiskLevel parse_risk_level(std::string_view text) {
    const std::string lower = lowercase(text);
    if (lower == "indicator") return RiskLevel::Indicator;
    if (lower == "ideation") return RiskLevel::Ideation;
    if (lower == "behaviour" || lower == "behavior") return RiskLevel::Behaviour;
    if (lower == "attempt") return RiskLevel::Attempt;
    throw DomainError("unknown risk level: \"" + std::string(text) + "\"");
}

std::string to_string(YesNo v) { return v == YesNo::Yes ? "yes" : "no"; }

YesNo parse_yes_no(std::string_view text) {
    const std::string lower = lowercase(text);
    if (lower == "yes") return YesNo::Yes;
    if (lower == "no") return YesNo::No;
    throw DomainError("expected yes/no, got \"" + std::string(text) + "\"");
}

ProbabilityVector::ProbabilityVector(const std::array<double, kNumRiskLevels>& p) : p_(p) {
    double sum = 0.0;
    for (double v : p_) {
        if (!std::isfinite(v) || v < 0.0 || v > 1.0) {
            throw DomainError("probability component outside [0, 1]");
        }
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw DomainError("probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
}

ProbabilityVector ProbabilityVector::one_hot(RiskLevel level) {
    std::array<double, kNumRiskLevels> p{};
    p[static_cast<std::size_t>(severity_rank(level))] = 1.0;
    return ProbabilityVector(p);
}

}  // namespace riskpipe
