#pragma once

#include <array>
#include <string>
#include <vector>

#include "riskpipe/domain.hpp"
#include "riskpipe/llm_gateway.hpp"
#include "riskpipe/prompt_engine.hpp"

namespace riskpipe {

// The three Yes/No answers recovered from a completion, plus the rationale
// text of any Answer lines and the compiled line they came from.
struct ParsedCompletion {
    AnswerTriple triple;
    std::array<std::string, 3> raw_answers;
    std::string compiled_line;
};

// Finds the last line holding a brace- or comma-delimited run of Yes/No
// tokens (case-insensitive) and reads it positionally as (Ideation,
// Behaviour, Attempt). Throws ParseError when no such line exists or the
// run does not hold exactly three tokens.
ParsedCompletion parse_answer_triple(const std::string& completion_text);

// Right-to-left first-Yes rule: Attempt, then Behaviour, then Ideation,
// else Indicator. Total over all 8 triples.
RiskLevel triple_to_label(const AnswerTriple& triple);

// First standalone Yes/No token in the completion. ParseError if absent.
YesNo parse_moveon(const std::string& completion_text);

// Flips attempt to No when the writer has moved on; requires attempt = Yes
// (PreconditionError otherwise). Never touches ideation/behaviour.
AnswerTriple refine_attempt(const AnswerTriple& triple, YesNo moveon);

struct AnnotationPolicy {
    int reprompts = 1;  // identical re-asks allowed after an unparseable completion
    // Rejected variant: relabel straight to Indicator on a positive move-on
    // signal instead of flipping attempt. Off by default.
    bool moveon_relabels_to_indicator = false;
};

struct AnnotatorSpec {
    std::string annotator_id;
    DecodingConfig decoding;
};

struct AnnotatorTemplates {
    PromptTemplate classification;
    PromptTemplate moveon;

    static AnnotatorTemplates defaults();
};

// Classification prompt, parse, label; posts initially labeled Attempt get
// the move-on prompt and, on Yes, the refinement flip plus relabel.
// Annotation.refined is set iff a flip (or variant relabel) was applied.
// Throws AnnotationError after the policy's re-prompt budget is spent or
// when the gateway fails.
Annotation annotate_post(const Post& post, const LlmClient& client, const AnnotatorSpec& spec,
                         const AnnotatorTemplates& templates, const AnnotationPolicy& policy);

struct AnnotationFailure {
    std::string post_id;
    std::string message;
};

struct AnnotationRun {
    std::vector<Annotation> annotations;  // input order, failed posts omitted
    std::vector<AnnotationFailure> failures;
};

AnnotationRun annotate_many(const std::vector<Post>& posts, const LlmClient& client,
                            const AnnotatorSpec& spec, const AnnotatorTemplates& templates,
                            const AnnotationPolicy& policy, int parallelism);

// JSONL rows {post_id, annotator_id, label, triple, refined}.
std::string annotations_to_text(const std::vector<Annotation>& annotations);
void write_annotations(const std::string& path, const std::vector<Annotation>& annotations);
std::vector<Annotation> parse_annotations_text(const std::string& text);
std::vector<Annotation> read_annotations(const std::string& path);

}  // namespace riskpipe
