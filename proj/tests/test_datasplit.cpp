#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "riskpipe/datasplit.hpp"
#include "riskpipe/errors.hpp"

using namespace riskpipe;

namespace {

Dataset counted_gold(const std::map<RiskLevel, std::size_t>& counts) {
    Dataset dataset;
    std::size_t next = 0;
    for (const auto& [level, count] : counts) {
        for (std::size_t i = 0; i < count; ++i) {
            Post post;
            post.post_id = "p" + std::to_string(next++);
            post.text = "text";
            post.gold_label = level;
            dataset.add_row(std::move(post), Provenance::Gold);
        }
    }
    return dataset;
}

}  // namespace

TEST_CASE("jsonl ingestion round-trips") {
    const std::string jsonl =
        R"({"post_id": "a", "text": "first", "label": "ideation"})"
        "\n"
        R"({"post_id": "b", "text": "second", "label": null})"
        "\n"
        R"({"post_id": "c", "text": "third", "label": "attempt", "provenance": "pseudo"})"
        "\n";
    const Dataset dataset = ingest_text(jsonl, FileFormat::Jsonl);
    REQUIRE(dataset.size() == 3);
    CHECK(dataset.row_for("a").post.gold_label == RiskLevel::Ideation);
    CHECK_FALSE(dataset.row_for("b").post.gold_label.has_value());
    CHECK(dataset.row_for("c").provenance == Provenance::Pseudo);

    const std::string out = dataset_to_text(dataset, FileFormat::Jsonl);
    const Dataset again = ingest_text(out, FileFormat::Jsonl);
    CHECK(again.size() == 3);
    CHECK(again.row_for("c").provenance == Provenance::Pseudo);
}

TEST_CASE("csv ingestion round-trips with quoting") {
    const std::string csv =
        "post_id,text,label,provenance\n"
        "a,\"hello, world\",indicator,gold\n"
        "b,\"line\nbreak and \"\"quotes\"\"\",behaviour,pseudo\n";
    const Dataset dataset = ingest_text(csv, FileFormat::Csv);
    REQUIRE(dataset.size() == 2);
    CHECK(dataset.row_for("a").post.text == "hello, world");
    CHECK(dataset.row_for("b").post.text == "line\nbreak and \"quotes\"");
    CHECK(dataset.row_for("b").provenance == Provenance::Pseudo);

    const std::string out = dataset_to_text(dataset, FileFormat::Csv);
    const Dataset again = ingest_text(out, FileFormat::Csv);
    CHECK(again.row_for("b").post.text == "line\nbreak and \"quotes\"");
}

TEST_CASE("format detection by extension") {
    CHECK(format_for_path("x/posts.jsonl") == FileFormat::Jsonl);
    CHECK(format_for_path("x/posts.csv") == FileFormat::Csv);
    // anything that is not .csv reads as JSONL
    CHECK(format_for_path("x/posts.txt") == FileFormat::Jsonl);
}

TEST_CASE("ingestion failures") {
    CHECK_THROWS_AS(ingest_text("{\"post_id\": \"a\"}\n", FileFormat::Jsonl), FormatError);
    CHECK_THROWS_AS(ingest_text("not json\n", FileFormat::Jsonl), FormatError);
    CHECK_THROWS_AS(
        ingest_text("{\"post_id\": \"a\", \"text\": \"t\", \"label\": \"bogus\"}\n",
                    FileFormat::Jsonl),
        FormatError);
    CHECK_THROWS_AS(
        ingest_text(
            "{\"post_id\": \"a\", \"text\": \"t\"}\n{\"post_id\": \"a\", \"text\": \"t\"}\n",
            FileFormat::Jsonl),
        DuplicateIdError);
    CHECK_THROWS_AS(ingest_text("wrong,header\na,b\n", FileFormat::Csv), FormatError);
    CHECK_THROWS_AS(ingest_text("post_id,text,label,provenance\na,b,c\n", FileFormat::Csv),
                    FormatError);
    CHECK_THROWS_AS(
        ingest_text("{\"post_id\": \"a\", \"text\": \"\"}\n", FileFormat::Jsonl), FormatError);
}

TEST_CASE("class counts see only labeled rows") {
    Dataset dataset;
    Post labeled;
    labeled.post_id = "a";
    labeled.text = "t";
    labeled.gold_label = RiskLevel::Attempt;
    dataset.add_row(std::move(labeled), Provenance::Gold);
    Post unlabeled;
    unlabeled.post_id = "b";
    unlabeled.text = "t";
    dataset.add_row(std::move(unlabeled), Provenance::Gold);

    const auto counts = dataset.class_counts();
    CHECK(counts.at(RiskLevel::Attempt) == 1);
    CHECK(counts.at(RiskLevel::Indicator) == 0);
}

TEST_CASE("stratified folds balance every class and the total") {
    const Dataset dataset = counted_gold({{RiskLevel::Indicator, 129},
                                          {RiskLevel::Ideation, 190},
                                          {RiskLevel::Behaviour, 140},
                                          {RiskLevel::Attempt, 41}});
    for (std::uint64_t seed : {0ULL, 1ULL, 99ULL}) {
        const FoldAssignment folds = stratified_folds(dataset, 5, seed);
        REQUIRE(folds.k == 5);
        CHECK(folds.assignment.size() == 500);

        std::map<int, std::size_t> totals;
        std::map<RiskLevel, std::map<int, std::size_t>> per_class;
        for (const auto& [post_id, fold] : folds.assignment) {
            REQUIRE(fold >= 0);
            REQUIRE(fold < 5);
            ++totals[fold];
            ++per_class[*dataset.row_for(post_id).post.gold_label][fold];
        }
        const auto spread = [](const std::map<int, std::size_t>& sizes) {
            std::size_t lo = SIZE_MAX, hi = 0;
            for (const auto& [fold, count] : sizes) {
                lo = std::min(lo, count);
                hi = std::max(hi, count);
            }
            return hi - lo;
        };
        CHECK(spread(totals) <= 1);
        for (const auto& [level, sizes] : per_class) {
            CHECK(sizes.size() == 5);
            CHECK(spread(sizes) <= 1);
        }
    }
}

TEST_CASE("fold assignment is deterministic in the seed") {
    const Dataset dataset = counted_gold({{RiskLevel::Indicator, 10},
                                          {RiskLevel::Ideation, 10},
                                          {RiskLevel::Behaviour, 10},
                                          {RiskLevel::Attempt, 10}});
    const FoldAssignment a = stratified_folds(dataset, 5, 7);
    const FoldAssignment b = stratified_folds(dataset, 5, 7);
    const FoldAssignment c = stratified_folds(dataset, 5, 8);
    CHECK(a.assignment == b.assignment);
    CHECK(a.assignment != c.assignment);
}

TEST_CASE("fold validation errors") {
    const Dataset dataset = counted_gold({{RiskLevel::Indicator, 10},
                                          {RiskLevel::Ideation, 10},
                                          {RiskLevel::Behaviour, 10},
                                          {RiskLevel::Attempt, 3}});
    CHECK_THROWS_AS(stratified_folds(dataset, 5, 0), InsufficientClassError);
    CHECK_THROWS_AS(stratified_folds(dataset, 1, 0), DomainError);

    Dataset unlabeled;
    Post post;
    post.post_id = "a";
    post.text = "t";
    unlabeled.add_row(std::move(post), Provenance::Gold);
    CHECK_THROWS_AS(stratified_folds(unlabeled, 2, 0), DomainError);
}

TEST_CASE("fold assignment json round-trips") {
    const Dataset dataset = counted_gold({{RiskLevel::Indicator, 5},
                                          {RiskLevel::Ideation, 5},
                                          {RiskLevel::Behaviour, 5},
                                          {RiskLevel::Attempt, 5}});
    const FoldAssignment folds = stratified_folds(dataset, 5, 3);
    const FoldAssignment parsed = FoldAssignment::from_json(folds.to_json());
    CHECK(parsed.k == folds.k);
    CHECK(parsed.assignment == folds.assignment);
}

TEST_CASE("whitespace tokenizer splits on runs and rejoins with single spaces") {
    const WhitespaceTokenizer tokenizer;
    const auto tokens = tokenizer.encode("  a\tbb \n ccc  ");
    CHECK(tokens == std::vector<std::string>{"a", "bb", "ccc"});
    CHECK(tokenizer.decode(tokens) == "a bb ccc");
    CHECK(tokenizer.encode("").empty());
}

TEST_CASE("middle truncation keeps head and tail within the budget") {
    const WhitespaceTokenizer tokenizer;
    std::string text;
    for (int i = 0; i < 10; ++i) {
        text += "w" + std::to_string(i) + " ";
    }

    SUBCASE("under budget is identity, byte for byte") {
        CHECK(truncate_middle(text, tokenizer, 10) == text);
        CHECK(truncate_middle(text, tokenizer, 2500) == text);
    }

    SUBCASE("over budget splits around the marker, head gets the odd token") {
        const std::string out = truncate_middle(text, tokenizer, 6);
        CHECK(out == "w0 w1 w2 ... w8 w9");
        CHECK(tokenizer.encode(out).size() == 6);
    }

    SUBCASE("marker can be disabled") {
        TruncateOptions options;
        options.use_marker = false;
        const std::string out = truncate_middle(text, tokenizer, 6, options);
        CHECK(out == "w0 w1 w2 w7 w8 w9");
    }

    SUBCASE("custom marker text") {
        TruncateOptions options;
        options.marker = "<snip>";
        const std::string out = truncate_middle(text, tokenizer, 5);
        CHECK(truncate_middle(text, tokenizer, 5, options) ==
              "w0 w1 <snip> w8 w9");
        CHECK(out == "w0 w1 ... w8 w9");
    }

    SUBCASE("budgets too small to hold head, tail, and marker are rejected") {
        CHECK_THROWS_AS(truncate_middle(text, tokenizer, 2), BudgetError);
        TruncateOptions options;
        options.use_marker = false;
        CHECK_NOTHROW(truncate_middle(text, tokenizer, 2, options));
        CHECK_THROWS_AS(truncate_middle(text, tokenizer, 1, options), BudgetError);
    }

    SUBCASE("truncation is idempotent") {
        const std::string once = truncate_middle(text, tokenizer, 7);
        CHECK(truncate_middle(once, tokenizer, 7) == once);
    }
}
