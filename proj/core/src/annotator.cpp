#include "riskpipe/annotator.hpp"

#include <atomic>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "riskpipe/errors.hpp"

namespace riskpipe {

namespace {

struct WordToken {
    std::string lower;
    std::size_t begin;
    std::size_t end;
};

std::vector<WordToken> word_tokens(const std::string& line) {
    std::vector<WordToken> words;
    std::size_t i = 0;
    while (i < line.size()) {
        if (std::isalpha(static_cast<unsigned char>(line[i])) == 0) {
            ++i;
            continue;
        }
        const std::size_t begin = i;
        std::string lower;
        while (i < line.size() && std::isalpha(static_cast<unsigned char>(line[i])) != 0) {
            lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(line[i]))));
            ++i;
        }
        words.push_back({std::move(lower), begin, i});
    }
    return words;
}

bool is_run_gap(const std::string& line, std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
        const char ch = line[i];
        if (ch != ' ' && ch != '\t' && ch != ',' && ch != '{' && ch != '}') {
            return false;
        }
    }
    return true;
}

// All maximal runs of Yes/No tokens separated only by spaces, commas, and
// braces. Any other word or separator breaks the run.
std::vector<std::vector<YesNo>> yes_no_runs(const std::string& line) {
    std::vector<std::vector<YesNo>> runs;
    std::vector<YesNo> current;
    std::size_t prev_end = 0;
    for (const WordToken& word : word_tokens(line)) {
        const bool is_yes = word.lower == "yes";
        const bool is_no = word.lower == "no";
        if (!is_yes && !is_no) {
            if (!current.empty()) {
                runs.push_back(std::move(current));
                current.clear();
            }
            continue;
        }
        if (!current.empty() && !is_run_gap(line, prev_end, word.begin)) {
            runs.push_back(std::move(current));
            current.clear();
        }
        current.push_back(is_yes ? YesNo::Yes : YesNo::No);
        prev_end = word.end;
    }
    if (!current.empty()) {
        runs.push_back(std::move(current));
    }
    return runs;
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

std::string trim(const std::string& s) {
    std::size_t begin = 0;
    std::size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin])) != 0) {
        ++begin;
    }
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1])) != 0) {
        --end;
    }
    return s.substr(begin, end - begin);
}

template <typename Parsed, typename ParseFn>
Parsed complete_and_parse(const Post& post, const LlmClient& client, const AnnotatorSpec& spec,
                          const AnnotationPolicy& policy, const std::string& prompt,
                          ParseFn parse) {
    std::string parse_failure;
    for (int attempt = 0; attempt <= policy.reprompts; ++attempt) {
        CompletionResult completion;
        try {
            completion = client.complete(prompt, spec.decoding);
        } catch (const Error& e) {
            throw AnnotationError("post " + post.post_id + ": gateway failure: " + e.what());
        }
        try {
            return parse(completion.text);
        } catch (const ParseError& e) {
            parse_failure = e.what();
        }
    }
    throw AnnotationError("post " + post.post_id + ": unparseable completion after " +
                          std::to_string(policy.reprompts + 1) + " prompts: " + parse_failure);
}

}  // namespace

ParsedCompletion parse_answer_triple(const std::string& completion_text) {
    const std::vector<std::string> lines = split_lines(completion_text);
    ParsedCompletion parsed;
    int answers_seen = 0;
    std::optional<std::vector<YesNo>> compiled_run;
    for (const std::string& line : lines) {
        const std::string stripped = trim(line);
        if (stripped.rfind("Answer", 0) == 0 && answers_seen < 3) {
            const std::size_t colon = stripped.find(':');
            if (colon != std::string::npos) {
                parsed.raw_answers[static_cast<std::size_t>(answers_seen)] =
                    trim(stripped.substr(colon + 1));
                ++answers_seen;
            }
        }
        std::vector<std::vector<YesNo>> runs = yes_no_runs(line);
        for (auto it = runs.rbegin(); it != runs.rend(); ++it) {
            if (it->size() >= 2) {
                compiled_run = *it;
                parsed.compiled_line = line;
                break;
            }
        }
    }
    if (!compiled_run.has_value()) {
        throw ParseError("no compiled answer line found");
    }
    if (compiled_run->size() != 3) {
        throw ParseError("compiled answer line has " + std::to_string(compiled_run->size()) +
                         " Yes/No tokens, expected 3: " + parsed.compiled_line);
    }
    parsed.triple = AnswerTriple{(*compiled_run)[0], (*compiled_run)[1], (*compiled_run)[2]};
    return parsed;
}

RiskLevel triple_to_label(const AnswerTriple& triple) {
    if (triple.attempt == YesNo::Yes) {
        return RiskLevel::Attempt;
    }
    if (triple.behaviour == YesNo::Yes) {
        return RiskLevel::Behaviour;
    }
    if (triple.ideation == YesNo::Yes) {
        return RiskLevel::Ideation;
    }
    return RiskLevel::Indicator;
}

YesNo parse_moveon(const std::string& completion_text) {
    for (const WordToken& word : word_tokens(completion_text)) {
        if (word.lower == "yes") {
            return YesNo::Yes;
        }
        if (word.lower == "no") {
            return YesNo::No;
        }
    }
    throw ParseError("no standalone Yes/No token in completion");
}

AnswerTriple refine_attempt(const AnswerTriple& triple, YesNo moveon) {
    if (triple.attempt != YesNo::Yes) {
        throw PreconditionError("refinement only applies when attempt = Yes");
    }
    AnswerTriple refined = triple;
    if (moveon == YesNo::Yes) {
        refined.attempt = YesNo::No;
    }
    return refined;
}

AnnotatorTemplates AnnotatorTemplates::defaults() {
    return AnnotatorTemplates{PromptTemplate::default_classification(),
                              PromptTemplate::default_moveon()};
}

Annotation annotate_post(const Post& post, const LlmClient& client, const AnnotatorSpec& spec,
                         const AnnotatorTemplates& templates, const AnnotationPolicy& policy) {
    if (policy.reprompts < 0) {
        throw PreconditionError("reprompts must be >= 0");
    }
    const std::string prompt = render_classification_prompt(post, templates.classification);
    const ParsedCompletion parsed = complete_and_parse<ParsedCompletion>(
        post, client, spec, policy, prompt,
        [](const std::string& text) { return parse_answer_triple(text); });

    Annotation annotation;
    annotation.post_id = post.post_id;
    annotation.annotator_id = spec.annotator_id;
    annotation.triple = parsed.triple;
    annotation.label = triple_to_label(parsed.triple);
    annotation.refined = false;

    if (annotation.label == RiskLevel::Attempt) {
        const std::string moveon_prompt = render_moveon_prompt(post, templates.moveon);
        const YesNo moveon = complete_and_parse<YesNo>(
            post, client, spec, policy, moveon_prompt,
            [](const std::string& text) { return parse_moveon(text); });
        if (moveon == YesNo::Yes) {
            if (policy.moveon_relabels_to_indicator) {
                annotation.label = RiskLevel::Indicator;
            } else {
                annotation.triple = refine_attempt(parsed.triple, moveon);
                annotation.label = triple_to_label(*annotation.triple);
            }
            annotation.refined = true;
        }
    }
    return annotation;
}

AnnotationRun annotate_many(const std::vector<Post>& posts, const LlmClient& client,
                            const AnnotatorSpec& spec, const AnnotatorTemplates& templates,
                            const AnnotationPolicy& policy, int parallelism) {
    if (parallelism < 1) {
        throw PreconditionError("parallelism must be >= 1");
    }
    std::vector<std::optional<Annotation>> slots(posts.size());
    std::vector<std::optional<AnnotationFailure>> failures(posts.size());

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= posts.size()) {
                return;
            }
            try {
                slots[i] = annotate_post(posts[i], client, spec, templates, policy);
            } catch (const std::exception& e) {
                failures[i] = AnnotationFailure{posts[i].post_id, e.what()};
            }
        }
    };

    const std::size_t threads =
        std::min(static_cast<std::size_t>(parallelism), std::max<std::size_t>(posts.size(), 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    AnnotationRun run;
    for (std::size_t i = 0; i < posts.size(); ++i) {
        if (slots[i].has_value()) {
            run.annotations.push_back(std::move(*slots[i]));
        } else if (failures[i].has_value()) {
            run.failures.push_back(std::move(*failures[i]));
        }
    }
    return run;
}

std::string annotations_to_text(const std::vector<Annotation>& annotations) {
    std::ostringstream out;
    for (const Annotation& annotation : annotations) {
        nlohmann::json row = {
            {"post_id", annotation.post_id},
            {"annotator_id", annotation.annotator_id},
            {"label", to_string(annotation.label)},
            {"refined", annotation.refined},
        };
        if (annotation.triple.has_value()) {
            row["triple"] = nlohmann::json::array({to_string(annotation.triple->ideation),
                                                   to_string(annotation.triple->behaviour),
                                                   to_string(annotation.triple->attempt)});
        } else {
            row["triple"] = nullptr;
        }
        out << row.dump() << '\n';
    }
    return out.str();
}

void write_annotations(const std::string& path, const std::vector<Annotation>& annotations) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot open for writing: " + path);
    }
    out << annotations_to_text(annotations);
}

std::vector<Annotation> parse_annotations_text(const std::string& text) {
    std::vector<Annotation> annotations;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        nlohmann::json row;
        try {
            row = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            Annotation annotation;
            annotation.post_id = row.at("post_id").get<std::string>();
            annotation.annotator_id = row.at("annotator_id").get<std::string>();
            annotation.label = parse_risk_level(row.at("label").get<std::string>());
            annotation.refined = row.value("refined", false);
            if (row.contains("triple") && !row["triple"].is_null()) {
                const nlohmann::json& triple = row["triple"];
                if (!triple.is_array() || triple.size() != 3) {
                    throw FormatError("triple must be an array of three Yes/No strings");
                }
                annotation.triple =
                    AnswerTriple{parse_yes_no(triple[0].get<std::string>()),
                                 parse_yes_no(triple[1].get<std::string>()),
                                 parse_yes_no(triple[2].get<std::string>())};
            }
            annotations.push_back(std::move(annotation));
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return annotations;
}

std::vector<Annotation> read_annotations(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open annotations file: " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_annotations_text(buffer.str());
    } catch (const FormatError& e) {
        throw FormatError(path + ": " + e.what());
    }
}

}  // namespace riskpipe
