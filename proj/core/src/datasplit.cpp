#include "riskpipe/datasplit.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "riskpipe/errors.hpp"

namespace riskpipe {

using nlohmann::json;

namespace {

bool is_blank(std::string_view line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c) != 0; });
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::string csv_quote(std::string_view field) {
    const bool needs_quotes = field.find_first_of(",\"\r\n") != std::string_view::npos;
    if (!needs_quotes) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

// RFC-4180 records; quoted fields may embed commas, quotes ("") and
// newlines. Returns one vector of fields per record.
std::vector<std::vector<std::string>> parse_csv(std::string_view content) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < content.size(); ++i) {
        const char c = content[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < content.size() && content[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"' && !field_started) {
            in_quotes = true;
            field_started = true;
        } else if (c == ',') {
            end_field();
        } else if (c == '\r' && i + 1 < content.size() && content[i + 1] == '\n') {
            end_record();
            ++i;
        } else if (c == '\n') {
            end_record();
        } else {
            field += c;
            field_started = true;
        }
    }
    if (in_quotes) {
        throw FormatError("csv: unterminated quoted field");
    }
    if (field_started || !record.empty() || !field.empty()) {
        end_record();
    }
    // Drop a trailing fully-empty record produced by a final newline.
    if (!records.empty() && records.back().size() == 1 && records.back()[0].empty()) {
        records.pop_back();
    }
    return records;
}

constexpr std::string_view kCsvHeader = "post_id,text,label,provenance";

}  // namespace

std::string to_string(Provenance p) { return p == Provenance::Gold ? "gold" : "pseudo"; }

Provenance parse_provenance(std::string_view text) {
    if (text == "gold") return Provenance::Gold;
    if (text == "pseudo") return Provenance::Pseudo;
    throw FormatError("unknown provenance: \"" + std::string(text) + "\"");
}

void Dataset::add_row(Post post, Provenance provenance) {
    if (post.post_id.empty()) {
        throw FormatError("row with empty post_id");
    }
    if (is_blank(post.text)) {
        throw FormatError("post \"" + post.post_id + "\" has empty text");
    }
    if (!index_.emplace(post.post_id, rows_.size()).second) {
        throw DuplicateIdError("duplicate post_id \"" + post.post_id + "\"");
    }
    rows_.push_back({std::move(post), provenance});
}

const DatasetRow& Dataset::row_for(const std::string& post_id) const {
    auto it = index_.find(post_id);
    if (it == index_.end()) {
        throw MissingPostError("no post with id \"" + post_id + "\"");
    }
    return rows_[it->second];
}

std::map<RiskLevel, std::size_t> Dataset::class_counts() const {
    std::map<RiskLevel, std::size_t> counts;
    for (RiskLevel level : kAllRiskLevels) counts[level] = 0;
    for (const auto& row : rows_) {
        if (row.post.gold_label) {
            counts[*row.post.gold_label] += 1;
        }
    }
    return counts;
}

FileFormat format_for_path(const std::filesystem::path& path) {
    return path.extension() == ".csv" ? FileFormat::Csv : FileFormat::Jsonl;
}

Dataset ingest_text(std::string_view content, FileFormat format) {
    Dataset dataset;
    if (format == FileFormat::Jsonl) {
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= content.size()) {
            std::size_t end = content.find('\n', start);
            if (end == std::string_view::npos) end = content.size();
            const std::string_view line = content.substr(start, end - start);
            ++line_no;
            start = end + 1;
            if (is_blank(line)) {
                if (end == content.size()) break;
                continue;
            }
            json j;
            try {
                j = json::parse(line);
            } catch (const json::parse_error& e) {
                throw FormatError("jsonl line " + std::to_string(line_no) + ": " + e.what());
            }
            try {
                Post post;
                post.post_id = j.at("post_id").get<std::string>();
                post.text = j.at("text").get<std::string>();
                if (j.contains("label") && !j["label"].is_null()) {
                    post.gold_label = parse_risk_level(j["label"].get<std::string>());
                }
                Provenance provenance = Provenance::Gold;
                if (j.contains("provenance") && !j["provenance"].is_null()) {
                    provenance = parse_provenance(j["provenance"].get<std::string>());
                }
                dataset.add_row(std::move(post), provenance);
            } catch (const json::exception& e) {
                throw FormatError("jsonl line " + std::to_string(line_no) + ": " + e.what());
            } catch (const DomainError& e) {
                throw FormatError("jsonl line " + std::to_string(line_no) + ": " + e.what());
            } catch (const FormatError& e) {
                throw FormatError("jsonl line " + std::to_string(line_no) + ": " + e.what());
            }
            if (end == content.size()) break;
        }
        return dataset;
    }

    const auto records = parse_csv(content);
    if (records.empty()) return dataset;
    std::size_t record_no = 0;
    for (const auto& record : records) {
        ++record_no;
        if (record_no == 1) {
            if (record.size() < 2 || record[0] != "post_id") {
                throw FormatError("csv: expected header \"" + std::string(kCsvHeader) + "\"");
            }
            continue;
        }
        if (record.size() != 4) {
            throw FormatError("csv record " + std::to_string(record_no) + ": expected 4 fields, got " +
                              std::to_string(record.size()));
        }
        try {
            Post post;
            post.post_id = record[0];
            post.text = record[1];
            if (!record[2].empty()) {
                post.gold_label = parse_risk_level(record[2]);
            }
            const Provenance provenance =
                record[3].empty() ? Provenance::Gold : parse_provenance(record[3]);
            dataset.add_row(std::move(post), provenance);
        } catch (const DomainError& e) {
            throw FormatError("csv record " + std::to_string(record_no) + ": " + e.what());
        } catch (const FormatError& e) {
            throw FormatError("csv record " + std::to_string(record_no) + ": " + e.what());
        }
    }
    return dataset;
}

Dataset ingest(const std::filesystem::path& path, FileFormat format) {
    return ingest_text(read_file(path), format);
}

std::string dataset_to_text(const Dataset& dataset, FileFormat format) {
    std::ostringstream out;
    if (format == FileFormat::Jsonl) {
        for (const auto& row : dataset.rows()) {
            json j;
            j["post_id"] = row.post.post_id;
            j["text"] = row.post.text;
            j["label"] = row.post.gold_label ? json(to_string(*row.post.gold_label)) : json(nullptr);
            j["provenance"] = to_string(row.provenance);
            out << j.dump() << "\n";
        }
        return out.str();
    }
    out << kCsvHeader << "\n";
    for (const auto& row : dataset.rows()) {
        out << csv_quote(row.post.post_id) << "," << csv_quote(row.post.text) << ","
            << (row.post.gold_label ? to_string(*row.post.gold_label) : "") << ","
            << to_string(row.provenance) << "\n";
    }
    return out.str();
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path, FileFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw FormatError("cannot write " + path.string());
    }
    out << dataset_to_text(dataset, format);
}

std::string FoldAssignment::to_json() const {
    json j;
    j["k"] = k;
    j["assignment"] = assignment;
    return j.dump(2);
}

FoldAssignment FoldAssignment::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("fold assignment: ") + e.what());
    }
    FoldAssignment folds;
    folds.k = j.at("k").get<int>();
    for (const auto& [post_id, fold] : j.at("assignment").items()) {
        folds.assignment[post_id] = fold.get<int>();
    }
    return folds;
}

FoldAssignment stratified_folds(const Dataset& dataset, int k, std::uint64_t seed) {
    if (k < 2) {
        throw DomainError("stratified_folds: k must be >= 2, got " + std::to_string(k));
    }
    std::map<RiskLevel, std::vector<std::string>> by_class;
    for (RiskLevel level : kAllRiskLevels) by_class[level] = {};
    for (const auto& row : dataset.rows()) {
        if (row.provenance != Provenance::Gold) continue;
        if (!row.post.gold_label) {
            throw DomainError("gold post \"" + row.post.post_id + "\" has no label");
        }
        by_class[*row.post.gold_label].push_back(row.post.post_id);
    }
    for (RiskLevel level : kAllRiskLevels) {
        if (by_class[level].size() < static_cast<std::size_t>(k)) {
            throw InsufficientClassError("class \"" + to_string(level) + "\" has " +
                                         std::to_string(by_class[level].size()) +
                                         " gold posts, need at least " + std::to_string(k));
        }
    }

    FoldAssignment folds;
    folds.k = k;
    std::mt19937_64 rng(seed);
    // The round-robin cursor carries over between classes so the per-class
    // remainders spread across folds instead of piling onto fold 0; both the
    // per-class and the total fold sizes then differ by at most one.
    std::size_t cursor = 0;
    for (RiskLevel level : kAllRiskLevels) {
        auto& ids = by_class[level];
        std::shuffle(ids.begin(), ids.end(), rng);
        for (const std::string& id : ids) {
            folds.assignment[id] = static_cast<int>(cursor % static_cast<std::size_t>(k));
            ++cursor;
        }
    }
    return folds;
}

std::vector<std::string> WhitespaceTokenizer::encode(std::string_view text) const {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        std::size_t start = i;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) {
            tokens.emplace_back(text.substr(start, i - start));
        }
    }
    return tokens;
}

std::string WhitespaceTokenizer::decode(const std::vector<std::string>& tokens) const {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out += ' ';
        out += tokens[i];
    }
    return out;
}

std::string truncate_middle(std::string_view text, const Tokenizer& tokenizer, std::size_t budget,
                            const TruncateOptions& options) {
    const std::size_t marker_tokens = options.use_marker ? 1 : 0;
    if (budget < 2 + marker_tokens) {
        throw BudgetError("truncate_middle: budget " + std::to_string(budget) +
                          " cannot hold head and tail" +
                          (options.use_marker ? " plus marker" : ""));
    }
    auto tokens = tokenizer.encode(text);
    if (tokens.size() <= budget) {
        return std::string(text);
    }
    const std::size_t keep = budget - marker_tokens;
    const std::size_t head = (keep + 1) / 2;
    const std::size_t tail = keep / 2;

    std::vector<std::string> kept;
    kept.reserve(budget);
    kept.insert(kept.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(head));
    if (options.use_marker) {
        kept.push_back(options.marker);
    }
    kept.insert(kept.end(), tokens.end() - static_cast<std::ptrdiff_t>(tail), tokens.end());
    return tokenizer.decode(kept);
}

}  // namespace riskpipe
