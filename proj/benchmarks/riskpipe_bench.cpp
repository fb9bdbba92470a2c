#include <benchmark/benchmark.h>

#include <map>
#include <random>
#include <string>
#include <vector>

#include "riskpipe/annotator.hpp"
#include "riskpipe/datasplit.hpp"
#include "riskpipe/domain.hpp"
#include "riskpipe/ensemble.hpp"
#include "riskpipe/metrics.hpp"
#include "riskpipe/prompt_engine.hpp"
#include "riskpipe/softf1.hpp"

namespace {

using namespace riskpipe;

LossBatch make_batch(std::size_t b, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> logit(-4.0, 4.0);
    std::uniform_int_distribution<int> label(0, 3);
    LossBatch batch;
    for (std::size_t i = 0; i < b; ++i) {
        Vec4 row{};
        for (double& v : row) {
            v = logit(rng);
        }
        batch.logits.push_back(row);
        Vec4 y{};
        y[static_cast<std::size_t>(label(rng))] = 1.0;
        batch.y.push_back(y);
    }
    return batch;
}

void bm_soft_f1_loss(benchmark::State& state) {
    const LossBatch batch = make_batch(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) {
        benchmark::DoNotOptimize(soft_f1_loss(batch).first);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_soft_f1_loss)->Arg(16)->Arg(256)->Arg(4096);

void bm_soft_f1_grad(benchmark::State& state) {
    const LossBatch batch = make_batch(static_cast<std::size_t>(state.range(0)), 2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(soft_f1_grad(batch));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_soft_f1_grad)->Arg(16)->Arg(256)->Arg(4096);

void bm_cross_entropy(benchmark::State& state) {
    const LossBatch batch = make_batch(static_cast<std::size_t>(state.range(0)), 3);
    for (auto _ : state) {
        benchmark::DoNotOptimize(cross_entropy_loss(batch).first);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_cross_entropy)->Arg(16)->Arg(256)->Arg(4096);

void bm_evaluate(benchmark::State& state) {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> label(0, 3);
    const std::size_t n = static_cast<std::size_t>(state.range(0));
    std::vector<RiskLevel> preds(n);
    std::vector<RiskLevel> truths(n);
    for (std::size_t i = 0; i < n; ++i) {
        preds[i] = risk_level_from_rank(label(rng));
        truths[i] = risk_level_from_rank(label(rng));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(evaluate(preds, truths).weighted_f1);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_evaluate)->Arg(1000)->Arg(10000);

void bm_truncate_middle(benchmark::State& state) {
    const WhitespaceTokenizer tokenizer;
    std::string text;
    for (int i = 0; i < state.range(0); ++i) {
        text += "word" + std::to_string(i) + " ";
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(truncate_middle(text, tokenizer, 2500));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_truncate_middle)->Arg(1000)->Arg(10000);

void bm_weighted_vote(benchmark::State& state) {
    const EnsembleConfig config = EnsembleConfig::default_config();
    std::map<std::string, RiskLevel> votes;
    int rank = 0;
    for (const EnsembleMember& member : config.members()) {
        votes[member.annotator_id] = risk_level_from_rank(rank++ % 4);
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(weighted_vote(votes, config));
    }
}
BENCHMARK(bm_weighted_vote);

void bm_render_prompt(benchmark::State& state) {
    const PromptTemplate& tmpl = PromptTemplate::default_classification();
    Post post;
    post.post_id = "bench";
    post.text = std::string(2000, 'x');
    for (auto _ : state) {
        benchmark::DoNotOptimize(render_classification_prompt(post, tmpl));
    }
}
BENCHMARK(bm_render_prompt);

void bm_parse_answer_triple(benchmark::State& state) {
    const std::string completion =
        "Reasoning: the writer describes wanting to disappear.\n"
        "Answer 1: Yes\nAnswer 2: No\nAnswer 3: No\n"
        "Final answer: {Yes, No, No}\n";
    for (auto _ : state) {
        benchmark::DoNotOptimize(parse_answer_triple(completion).triple);
    }
}
BENCHMARK(bm_parse_answer_triple);

void bm_stratified_folds(benchmark::State& state) {
    Dataset dataset;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> label(0, 3);
    for (int i = 0; i < state.range(0); ++i) {
        Post post;
        post.post_id = "p" + std::to_string(i);
        post.text = "t";
        post.gold_label = risk_level_from_rank(label(rng));
        dataset.add_row(std::move(post), Provenance::Gold);
    }
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(stratified_folds(dataset, 5, seed++).assignment.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(bm_stratified_folds)->Arg(500)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
