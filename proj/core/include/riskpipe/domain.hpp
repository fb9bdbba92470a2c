#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace riskpipe {

enum class YesNo : std::uint8_t { No = 0, Yes = 1 };

// The four risk levels, ordered by increasing severity.
enum class RiskLevel : std::uint8_t {
    Indicator = 0,
    Ideation = 1,
    Behaviour = 2,
    Attempt = 3,
};

inline constexpr std::size_t kNumRiskLevels = 4;

inline constexpr std::array<RiskLevel, kNumRiskLevels> kAllRiskLevels = {
    RiskLevel::Indicator,
    RiskLevel::Ideation,
    RiskLevel::Behaviour,
    RiskLevel::Attempt,
};

// Severity rank: Indicator=0, Ideation=1, Behaviour=2, Attempt=3.
constexpr int severity_rank(RiskLevel level) { return static_cast<int>(level); }

// Inverse of severity_rank. Throws DomainError outside [0, 4).
RiskLevel risk_level_from_rank(int rank);

// Canonical lowercase form: "indicator", "ideation", "behaviour", "attempt".
std::string to_string(RiskLevel level);

// Case-insensitive; also accepts the US spelling "behavior".
// Throws DomainError on anything else.
RiskLevel parse_risk_level(std::string_view text);

std::string to_string(YesNo v);  // "yes" / "no"

// Case-insensitive "yes"/"no". Throws DomainError on anything else.
YesNo parse_yes_no(std::string_view text);

// One text unit to classify. gold_label is set only for expert-annotated
// posts.
struct Post {
    std::string post_id;
    std::string text;
    std::optional<RiskLevel> gold_label;

    bool operator==(const Post&) const = default;
};

// The three Yes/No answers collected from a completion, in question order
// (ideation, behaviour, attempt).
struct AnswerTriple {
    YesNo ideation = YesNo::No;
    YesNo behaviour = YesNo::No;
    YesNo attempt = YesNo::No;

    bool operator==(const AnswerTriple&) const = default;
};

// One annotator's verdict on one post. When triple is present, label must
// equal triple_to_label(*triple); `refined` records that the move-on flip
// was applied.
struct Annotation {
    std::string post_id;
    std::string annotator_id;
    RiskLevel label = RiskLevel::Indicator;
    std::optional<AnswerTriple> triple;
    bool refined = false;

    bool operator==(const Annotation&) const = default;
};

// Length-4 probability vector over the risk levels. Validated on
// construction: components in [0, 1] and summing to 1 within 1e-9.
class ProbabilityVector {
  public:
    explicit ProbabilityVector(const std::array<double, kNumRiskLevels>& p);

    double operator[](std::size_t i) const { return p_[i]; }
    double operator[](RiskLevel level) const { return p_[static_cast<std::size_t>(level)]; }
    const std::array<double, kNumRiskLevels>& values() const { return p_; }

    static ProbabilityVector one_hot(RiskLevel level);

    bool operator==(const ProbabilityVector&) const = default;

  private:
    std::array<double, kNumRiskLevels> p_;
};

}  // namespace riskpipe
