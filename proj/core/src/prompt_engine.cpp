#include "riskpipe/prompt_engine.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "riskpipe/default_templates.hpp"
#include "riskpipe/errors.hpp"

namespace riskpipe {

namespace {

std::string trim(std::string_view s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin])) != 0) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1])) != 0) {
        --end;
    }
    return std::string(s.substr(begin, end - begin));
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string current;
    for (char ch : text) {
        if (ch == '\n') {
            if (!current.empty() && current.back() == '\r') {
                current.pop_back();
            }
            lines.push_back(current);
            current.clear();
        } else {
            current.push_back(ch);
        }
    }
    if (!current.empty()) {
        lines.push_back(current);
    }
    return lines;
}

std::string join_block(const std::vector<std::string>& lines, std::size_t begin, std::size_t end) {
    while (begin < end && trim(lines[begin]).empty()) {
        ++begin;
    }
    while (end > begin && trim(lines[end - 1]).empty()) {
        --end;
    }
    std::string out;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) {
            out.push_back('\n');
        }
        out += lines[i];
    }
    return out;
}

std::size_t count_placeholder(const std::string& text) {
    std::size_t count = 0;
    std::size_t pos = 0;
    while ((pos = text.find(kPostPlaceholder, pos)) != std::string::npos) {
        ++count;
        pos += kPostPlaceholder.size();
    }
    return count;
}

// Extracts all standalone yes/no word tokens from a line, case-insensitive.
std::vector<YesNo> yes_no_tokens(const std::string& line) {
    std::vector<YesNo> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isalpha(static_cast<unsigned char>(line[i])) == 0) {
            ++i;
            continue;
        }
        std::size_t begin = i;
        while (i < line.size() && std::isalpha(static_cast<unsigned char>(line[i])) != 0) {
            ++i;
        }
        std::string word = line.substr(begin, i - begin);
        for (char& ch : word) {
            ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
        }
        if (word == "yes") {
            tokens.push_back(YesNo::Yes);
        } else if (word == "no") {
            tokens.push_back(YesNo::No);
        }
    }
    return tokens;
}

Exemplar parse_classification_exemplar(const std::string& block, std::size_t index) {
    const std::vector<std::string> lines = split_lines(block);
    Exemplar exemplar;
    std::vector<std::string> post_lines;
    bool in_post = false;
    int answers_seen = 0;
    bool have_final = false;
    AnswerTriple compiled;

    for (const std::string& line : lines) {
        const std::string stripped = trim(line);
        if (stripped.rfind("Post:", 0) == 0) {
            in_post = true;
            post_lines.push_back(trim(stripped.substr(5)));
            continue;
        }
        if (stripped.rfind("Question", 0) == 0) {
            in_post = false;
            continue;
        }
        if (stripped.rfind("Answer", 0) == 0 && stripped.rfind("Answer:", 0) != 0) {
            in_post = false;
            const std::size_t colon = stripped.find(':');
            if (colon == std::string::npos || answers_seen >= 3) {
                throw TemplateError("exemplar " + std::to_string(index) +
                                    ": malformed or surplus Answer line");
            }
            const std::string body = trim(stripped.substr(colon + 1));
            const std::vector<YesNo> heads = yes_no_tokens(body.substr(0, body.find_first_of(".,")));
            if (heads.size() != 1) {
                throw TemplateError("exemplar " + std::to_string(index) +
                                    ": Answer line must start with Yes or No");
            }
            std::size_t rest = body.find_first_of(".,");
            std::string rationale = rest == std::string::npos ? "" : trim(body.substr(rest + 1));
            exemplar.responses[static_cast<std::size_t>(answers_seen)] = {heads[0],
                                                                          std::move(rationale)};
            ++answers_seen;
            continue;
        }
        if (stripped.rfind("Final answer:", 0) == 0) {
            in_post = false;
            const std::vector<YesNo> tokens = yes_no_tokens(stripped);
            if (tokens.size() != 3) {
                throw TemplateError("exemplar " + std::to_string(index) +
                                    ": final answer must contain exactly three Yes/No tokens");
            }
            compiled = AnswerTriple{tokens[0], tokens[1], tokens[2]};
            have_final = true;
            continue;
        }
        if (in_post) {
            post_lines.push_back(line);
        }
    }

    if (post_lines.empty()) {
        throw TemplateError("exemplar " + std::to_string(index) + ": missing Post line");
    }
    if (answers_seen != 3) {
        throw TemplateError("exemplar " + std::to_string(index) + ": expected 3 Answer lines, got " +
                            std::to_string(answers_seen));
    }
    if (!have_final) {
        throw TemplateError("exemplar " + std::to_string(index) + ": missing Final answer line");
    }
    const AnswerTriple heads{exemplar.responses[0].first, exemplar.responses[1].first,
                             exemplar.responses[2].first};
    if (!(heads == compiled)) {
        throw TemplateError("exemplar " + std::to_string(index) +
                            ": Answer heads disagree with the final answer triple");
    }
    exemplar.compiled = compiled;

    std::ostringstream post;
    for (std::size_t i = 0; i < post_lines.size(); ++i) {
        if (i > 0) {
            post << '\n';
        }
        post << post_lines[i];
    }
    exemplar.post_text = post.str();
    return exemplar;
}

MoveonExemplar parse_moveon_exemplar(const std::string& block, std::size_t index) {
    const std::vector<std::string> lines = split_lines(block);
    MoveonExemplar exemplar;
    std::vector<std::string> post_lines;
    bool in_post = false;
    bool have_answer = false;

    for (const std::string& line : lines) {
        const std::string stripped = trim(line);
        if (stripped.rfind("Post:", 0) == 0) {
            in_post = true;
            post_lines.push_back(trim(stripped.substr(5)));
            continue;
        }
        if (stripped.rfind("Answer:", 0) == 0) {
            in_post = false;
            const std::vector<YesNo> tokens = yes_no_tokens(stripped.substr(7));
            if (tokens.size() != 1) {
                throw TemplateError("exemplar " + std::to_string(index) +
                                    ": Answer line must contain exactly one Yes/No token");
            }
            exemplar.answer = tokens[0];
            have_answer = true;
            continue;
        }
        if (in_post) {
            post_lines.push_back(line);
        }
    }

    if (post_lines.empty() || !have_answer) {
        throw TemplateError("exemplar " + std::to_string(index) +
                            ": move-on exemplar needs a Post and an Answer line");
    }
    std::ostringstream post;
    for (std::size_t i = 0; i < post_lines.size(); ++i) {
        if (i > 0) {
            post << '\n';
        }
        post << post_lines[i];
    }
    exemplar.post_text = post.str();
    return exemplar;
}

std::string render(const Post& post, const PromptTemplate& tmpl) {
    if (post.text.empty()) {
        throw PreconditionError("post text must be non-empty");
    }
    std::string out = tmpl.instruction();
    for (const std::string& block : tmpl.exemplar_blocks()) {
        out += "\n\n";
        out += block;
    }
    std::string target = tmpl.target_block();
    const std::size_t pos = target.find(kPostPlaceholder);
    target.replace(pos, kPostPlaceholder.size(), post.text);
    out += "\n\n";
    out += target;
    out.push_back('\n');
    return out;
}

}  // namespace

PromptTemplate PromptTemplate::parse(const std::string& text, TemplateKind kind) {
    const std::vector<std::string> lines = split_lines(text);

    struct Section {
        std::string name;
        std::size_t begin;
        std::size_t end;
    };
    std::vector<Section> sections;
    bool before_first = true;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string stripped = trim(lines[i]);
        if (stripped == "[instruction]" || stripped == "[example]" || stripped == "[target]") {
            if (!sections.empty()) {
                sections.back().end = i;
            }
            sections.push_back({stripped, i + 1, lines.size()});
            before_first = false;
        } else if (before_first && !stripped.empty() && stripped[0] != '#') {
            throw TemplateError("template text before the first section marker");
        }
    }
    if (sections.empty()) {
        throw TemplateError("template has no sections");
    }

    PromptTemplate tmpl;
    tmpl.kind_ = kind;
    bool have_instruction = false;
    bool have_target = false;
    for (const Section& section : sections) {
        const std::string body = join_block(lines, section.begin, section.end);
        if (section.name == "[instruction]") {
            if (have_instruction) {
                throw TemplateError("duplicate [instruction] section");
            }
            have_instruction = true;
            tmpl.instruction_ = body;
        } else if (section.name == "[example]") {
            tmpl.exemplar_blocks_.push_back(body);
        } else {
            if (have_target) {
                throw TemplateError("duplicate [target] section");
            }
            have_target = true;
            tmpl.target_block_ = body;
        }
    }

    if (!have_instruction || tmpl.instruction_.empty()) {
        throw TemplateError("template needs a non-empty [instruction] section");
    }
    if (tmpl.exemplar_blocks_.empty()) {
        throw TemplateError("template needs at least one [example] section");
    }
    if (!have_target) {
        throw TemplateError("template needs a [target] section");
    }
    if (count_placeholder(tmpl.target_block_) != 1) {
        throw TemplateError("target section must contain " + std::string(kPostPlaceholder) +
                            " exactly once");
    }
    // Count over parsed sections, not the raw text, so leading # comments
    // may mention the placeholder.
    std::size_t rendered_placeholders = count_placeholder(tmpl.instruction_);
    for (const std::string& block : tmpl.exemplar_blocks_) {
        rendered_placeholders += count_placeholder(block);
    }
    rendered_placeholders += count_placeholder(tmpl.target_block_);
    if (rendered_placeholders != 1) {
        throw TemplateError("placeholder must appear exactly once in the template");
    }

    for (std::size_t i = 0; i < tmpl.exemplar_blocks_.size(); ++i) {
        if (kind == TemplateKind::Classification) {
            tmpl.exemplars_.push_back(parse_classification_exemplar(tmpl.exemplar_blocks_[i], i));
        } else {
            tmpl.moveon_exemplars_.push_back(parse_moveon_exemplar(tmpl.exemplar_blocks_[i], i));
        }
    }
    return tmpl;
}

PromptTemplate PromptTemplate::load_file(const std::string& path, TemplateKind kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw TemplateError("cannot open template file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str(), kind);
}

const PromptTemplate& PromptTemplate::default_classification() {
    static const PromptTemplate tmpl =
        parse(std::string(kDefaultClassificationTemplateText), TemplateKind::Classification);
    return tmpl;
}

const PromptTemplate& PromptTemplate::default_moveon() {
    static const PromptTemplate tmpl =
        parse(std::string(kDefaultMoveonTemplateText), TemplateKind::MoveOn);
    return tmpl;
}

std::string render_classification_prompt(const Post& post, const PromptTemplate& tmpl) {
    if (tmpl.kind() != TemplateKind::Classification) {
        throw TemplateError("template is not a classification template");
    }
    return render(post, tmpl);
}

std::string render_moveon_prompt(const Post& post, const PromptTemplate& tmpl) {
    if (tmpl.kind() != TemplateKind::MoveOn) {
        throw TemplateError("template is not a move-on template");
    }
    return render(post, tmpl);
}

}  // namespace riskpipe
