#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "riskpipe/errors.hpp"
#include "riskpipe/pipeline_config.hpp"
#include "riskpipe/softf1.hpp"

using namespace riskpipe;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;

    TempDir() {
        path = fs::temp_directory_path() /
               ("riskpipe_cfg_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }

    static int& counter() {
        static int value = 0;
        return value;
    }

    fs::path write(const std::string& name, const std::string& content) const {
        const fs::path file = path / name;
        fs::create_directories(file.parent_path());
        std::ofstream out(file);
        out << content;
        return file;
    }
};

const std::string kPosts = R"({"post_id": "p1", "text": "hello"})"
                           "\n";
const std::string kGold = R"({"post_id": "g1", "text": "hi", "label": "ideation"})"
                          "\n";

std::string base_config(const std::string& extra = "") {
    return R"(seed = 9
parallelism = 3

[paths]
posts = "posts.jsonl"
gold = "sub/gold.jsonl"
out_dir = "outputs"

[truncation]
token_budget = 1200
use_marker = true
marker = "<cut>"

[split]
k = 4

[gateway]
max_retries = 2
backoff_base_ms = 250
timeout_s = 30

[[annotators]]
id = "big-model"
endpoint = "http://127.0.0.1:9000"
model = "big-model-v1"
temperature = 0.0
max_new_tokens = 512

[[annotators]]
id = "small-model"
endpoint = "http://127.0.0.1:9001"
model = "small-model-v1"

[train]
loss = "cross_entropy"
lr = 0.01
epochs = 50
)" + extra;
}

}  // namespace

TEST_CASE("a full config loads with paths resolved against the config file") {
    TempDir dir;
    dir.write("posts.jsonl", kPosts);
    dir.write("sub/gold.jsonl", kGold);
    const fs::path file = dir.write("pipeline.toml", base_config());

    const PipelineConfig config = PipelineConfig::load(file.string());
    CHECK(config.seed == 9);
    CHECK(config.parallelism == 3);
    CHECK(config.posts_path == (dir.path / "posts.jsonl").lexically_normal().string());
    CHECK(config.gold_path == (dir.path / "sub/gold.jsonl").lexically_normal().string());
    CHECK(config.out_dir == (dir.path / "outputs").lexically_normal().string());
    CHECK(config.token_budget == 1200);
    CHECK(config.marker == "<cut>");
    CHECK(config.k == 4);
    CHECK(config.retry.max_retries == 2);
    CHECK(config.retry.backoff_base_ms == 250);
    CHECK(config.retry.timeout_s == 30);
    CHECK(config.train_loss == LossKind::CrossEntropy);
    CHECK(config.train_lr == doctest::Approx(0.01));
    CHECK(config.train_epochs == 50);

    REQUIRE(config.fleet.size() == 2);
    CHECK(config.fleet[0].annotator_id == "big-model");
    CHECK(config.fleet[0].decoding.model_name == "big-model-v1");
    CHECK(config.fleet[0].decoding.endpoint_url == "http://127.0.0.1:9000");
    CHECK(config.fleet[0].decoding.max_new_tokens == 512);
    CHECK(config.fleet[1].decoding.max_new_tokens == 1024);  // default

    // required set defaults to the fleet
    CHECK(config.required_annotators ==
          std::set<std::string>{"big-model", "small-model"});

    // ensemble defaults to the shipped five-member config
    CHECK(config.ensemble.members().size() == 5);
}

TEST_CASE("defaults apply when sections are omitted") {
    TempDir dir;
    const fs::path file = dir.write("min.toml", "seed = 1\n");
    const PipelineConfig config = PipelineConfig::load(file.string());
    CHECK(config.seed == 1);
    CHECK(config.parallelism == 1);
    CHECK(config.k == 5);
    CHECK(config.token_budget == 2500);
    CHECK(config.marker == "...");
    CHECK(config.fleet.empty());
    CHECK(config.train_loss == LossKind::SoftF1);
}

TEST_CASE("inline ensemble members override the default") {
    TempDir dir;
    const fs::path file = dir.write("cfg.toml",
                                    "[[ensemble.members]]\nid = \"a\"\nweight = 2.0\n"
                                    "[[ensemble.members]]\nid = \"b\"\n");
    const PipelineConfig config = PipelineConfig::load(file.string());
    REQUIRE(config.ensemble.members().size() == 2);
    CHECK(config.ensemble.members()[0].weight == doctest::Approx(2.0));
    CHECK(config.ensemble.members()[1].weight == doctest::Approx(1.0));
}

TEST_CASE("ensemble config can come from a referenced json file") {
    TempDir dir;
    dir.write("weights.json",
              R"({"members": [{"id": "x", "weight": 3.0}, {"id": "y"}]})");
    const fs::path file =
        dir.write("cfg.toml", "[ensemble]\nconfig = \"weights.json\"\n");
    const PipelineConfig config = PipelineConfig::load(file.string());
    REQUIRE(config.ensemble.members().size() == 2);
    CHECK(config.ensemble.members()[0].annotator_id == "x");
    CHECK(config.ensemble.members()[0].weight == doctest::Approx(3.0));
}

TEST_CASE("config validation failures") {
    TempDir dir;
    dir.write("posts.jsonl", kPosts);

    SUBCASE("missing referenced file") {
        const fs::path file =
            dir.write("cfg.toml", "[paths]\nposts = \"missing.jsonl\"\n");
        CHECK_THROWS_AS(PipelineConfig::load(file.string()), ConfigError);
    }
    SUBCASE("bad k") {
        const fs::path file = dir.write("cfg.toml", "[split]\nk = 1\n");
        CHECK_THROWS_AS(PipelineConfig::load(file.string()), ConfigError);
    }
    SUBCASE("bad parallelism") {
        const fs::path file = dir.write("cfg.toml", "parallelism = 0\n");
        CHECK_THROWS_AS(PipelineConfig::load(file.string()), ConfigError);
    }
    SUBCASE("duplicate annotator ids") {
        const fs::path file = dir.write(
            "cfg.toml",
            "[[annotators]]\nid = \"a\"\nendpoint = \"http://h\"\nmodel = \"m\"\n"
            "[[annotators]]\nid = \"a\"\nendpoint = \"http://h\"\nmodel = \"m\"\n");
        CHECK_THROWS_AS(PipelineConfig::load(file.string()), ConfigError);
    }
    SUBCASE("annotator model falls back to the id") {
        const fs::path file =
            dir.write("cfg.toml", "[[annotators]]\nid = \"a\"\nendpoint = \"http://h\"\n");
        const PipelineConfig config = PipelineConfig::load(file.string());
        CHECK(config.fleet.at(0).decoding.model_name == "a");
    }
    SUBCASE("unknown train loss") {
        const fs::path file = dir.write("cfg.toml", "[train]\nloss = \"hinge\"\n");
        CHECK_THROWS_AS(PipelineConfig::load(file.string()), ConfigError);
    }
    SUBCASE("required id outside the fleet is allowed only as an explicit set") {
        // ids in [consensus] required do not need to be fleet members: the
        // consensus step can run over annotation files produced elsewhere.
        const fs::path file =
            dir.write("cfg.toml", "[consensus]\nrequired = [\"external-1\"]\n");
        const PipelineConfig config = PipelineConfig::load(file.string());
        CHECK(config.required_annotators == std::set<std::string>{"external-1"});
    }
    SUBCASE("missing config file") {
        CHECK_THROWS_AS(PipelineConfig::load((dir.path / "nope.toml").string()), ConfigError);
    }
    SUBCASE("syntax errors carry the file name") {
        const fs::path file = dir.write("cfg.toml", "broken =\n");
        try {
            PipelineConfig::load(file.string());
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("cfg.toml") != std::string::npos);
        }
    }
}

TEST_CASE("secrets never come from the config schema") {
    // The schema has no key-bearing field; the environment variable name is
    // the only channel.
    TempDir dir;
    const fs::path file = dir.write("cfg.toml", "api_key = \"sk-forbidden\"\n");
    CHECK_THROWS_AS(PipelineConfig::load(file.string()), ConfigError);
}
