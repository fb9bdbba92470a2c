#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "riskpipe/domain.hpp"

namespace riskpipe {

enum class Provenance { Gold, Pseudo };

std::string to_string(Provenance p);
Provenance parse_provenance(std::string_view text);

struct DatasetRow {
    Post post;
    Provenance provenance = Provenance::Gold;

    bool operator==(const DatasetRow&) const = default;
};

// Ordered collection of rows with unique post ids. class_counts covers the
// labeled rows only.
class Dataset {
  public:
    Dataset() = default;

    // Throws DuplicateIdError when the post_id is already present.
    void add_row(Post post, Provenance provenance);

    const std::vector<DatasetRow>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool contains(const std::string& post_id) const { return index_.contains(post_id); }
    const DatasetRow& row_for(const std::string& post_id) const;

    std::map<RiskLevel, std::size_t> class_counts() const;

  private:
    std::vector<DatasetRow> rows_;
    std::map<std::string, std::size_t> index_;
};

enum class FileFormat { Jsonl, Csv };

// Picks Csv for a ".csv" extension, Jsonl otherwise.
FileFormat format_for_path(const std::filesystem::path& path);

// Row schema (both formats): post_id, text, label (may be empty/null),
// provenance ("gold"/"pseudo", defaults to gold). CSV uses RFC-4180
// quoting, so text may embed commas, quotes, and newlines.
// Throws FormatError (with a line/record number) or DuplicateIdError.
Dataset ingest(const std::filesystem::path& path, FileFormat format);
Dataset ingest_text(std::string_view content, FileFormat format);

void write_dataset(const Dataset& dataset, const std::filesystem::path& path, FileFormat format);
std::string dataset_to_text(const Dataset& dataset, FileFormat format);

// Fold labels for the gold rows of a dataset.
struct FoldAssignment {
    int k = 0;
    std::map<std::string, int> assignment;  // post_id -> fold in [0, k)

    std::string to_json() const;
    static FoldAssignment from_json(const std::string& text);
};

// Stratified k-fold assignment over gold rows: within each class the rows
// are shuffled by `seed` and dealt round-robin, so per-class fold sizes
// differ by at most one. Deterministic in (dataset order, k, seed).
// Throws InsufficientClassError when a class has fewer than k gold rows.
FoldAssignment stratified_folds(const Dataset& dataset, int k, std::uint64_t seed);

// Text/token conversion used for budgeting. decode(encode(t)) preserves t
// up to the tokenizer's own normalization.
class Tokenizer {
  public:
    virtual ~Tokenizer() = default;
    virtual std::vector<std::string> encode(std::string_view text) const = 0;
    virtual std::string decode(const std::vector<std::string>& tokens) const = 0;
};

// Splits on runs of whitespace; decode joins with single spaces.
class WhitespaceTokenizer final : public Tokenizer {
  public:
    std::vector<std::string> encode(std::string_view text) const override;
    std::string decode(const std::vector<std::string>& tokens) const override;
};

struct TruncateOptions {
    bool use_marker = true;
    std::string marker = "...";  // inserted at the cut, counted as one token
};

// Enforces a token budget by removing the middle of the text. Within
// budget the text comes back unchanged; otherwise the result holds the
// first ceil((budget-m)/2) and last floor((budget-m)/2) tokens around the
// marker (m = 1 when the marker is enabled), for exactly `budget` tokens.
// Throws BudgetError when the budget cannot hold head + tail + marker.
std::string truncate_middle(std::string_view text, const Tokenizer& tokenizer, std::size_t budget,
                            const TruncateOptions& options = {});

}  // namespace riskpipe
