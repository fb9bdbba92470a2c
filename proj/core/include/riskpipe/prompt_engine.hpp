#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "riskpipe/domain.hpp"

namespace riskpipe {

inline constexpr std::string_view kPostPlaceholder = "{{POST}}";

// One worked classification example: a post, three answered questions with
// short rationales in (Ideation, Behaviour, Attempt) order, and the compiled
// final-answer triple, which must agree with the three answer heads.
struct Exemplar {
    std::string post_text;
    std::array<std::pair<YesNo, std::string>, 3> responses;
    AnswerTriple compiled;
};

// One worked move-on example: a post and its Yes/No answer.
struct MoveonExemplar {
    std::string post_text;
    YesNo answer;
};

enum class TemplateKind { Classification, MoveOn };

// A few-shot prompt parsed from a plain-text template file. The file is a
// sequence of sections introduced by marker lines: one [instruction], one or
// more [example], and one [target] whose body contains {{POST}} exactly once.
// Lines starting with '#' before the first marker are comments.
class PromptTemplate {
public:
    static PromptTemplate parse(const std::string& text, TemplateKind kind);
    static PromptTemplate load_file(const std::string& path, TemplateKind kind);
    static const PromptTemplate& default_classification();
    static const PromptTemplate& default_moveon();

    TemplateKind kind() const { return kind_; }
    const std::string& instruction() const { return instruction_; }
    const std::vector<Exemplar>& exemplars() const { return exemplars_; }
    const std::vector<MoveonExemplar>& moveon_exemplars() const { return moveon_exemplars_; }
    std::size_t exemplar_count() const { return exemplar_blocks_.size(); }
    const std::vector<std::string>& exemplar_blocks() const { return exemplar_blocks_; }
    const std::string& target_block() const { return target_block_; }

private:
    PromptTemplate() = default;

    TemplateKind kind_ = TemplateKind::Classification;
    std::string instruction_;
    std::vector<Exemplar> exemplars_;
    std::vector<MoveonExemplar> moveon_exemplars_;
    std::vector<std::string> exemplar_blocks_;
    std::string target_block_;
};

// Instruction, exemplar blocks in order, then the target block with the
// placeholder replaced by post.text. Byte-identical across repeat calls.
std::string render_classification_prompt(const Post& post, const PromptTemplate& tmpl);
std::string render_moveon_prompt(const Post& post, const PromptTemplate& tmpl);

}  // namespace riskpipe
