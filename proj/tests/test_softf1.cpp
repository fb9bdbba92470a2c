#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "riskpipe/errors.hpp"
#include "riskpipe/softf1.hpp"

#include "support/synthetic.hpp"

using namespace riskpipe;

namespace {

LossBatch zero_logit_batch() {
    LossBatch batch;
    batch.logits = {{0.0, 0.0, 0.0, 0.0}};
    batch.y = {{1.0, 0.0, 0.0, 0.0}};
    return batch;
}

LossBatch random_batch(std::mt19937_64& rng, std::size_t max_b = 16) {
    std::uniform_int_distribution<std::size_t> size_dist(1, max_b);
    std::uniform_real_distribution<double> logit(-4.0, 4.0);
    std::uniform_int_distribution<int> label(0, 3);
    LossBatch batch;
    const std::size_t b = size_dist(rng);
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

// Max |analytic - central difference| over all logits, normalized by
// max(1, |numeric|).
template <typename LossFn>
double max_grad_error(const LossBatch& batch, const Mat4& analytic, LossFn loss_of) {
    const double h = 1e-5;
    double worst = 0.0;
    LossBatch probe = batch;
    for (std::size_t i = 0; i < batch.logits.size(); ++i) {
        for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
            const double saved = probe.logits[i][c];
            probe.logits[i][c] = saved + h;
            const double up = loss_of(probe);
            probe.logits[i][c] = saved - h;
            const double down = loss_of(probe);
            probe.logits[i][c] = saved;
            const double numeric = (up - down) / (2.0 * h);
            const double err =
                std::abs(analytic[i][c] - numeric) / std::max(1.0, std::abs(numeric));
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace

TEST_CASE("soft F1 loss at the zero-logit one-hot point is exactly 2/3") {
    const auto [loss, parts] = soft_f1_loss(zero_logit_batch());
    CHECK(loss == doctest::Approx(2.0 / 3.0).epsilon(1e-12));

    // positive class: tp = fn = 0.5, fp = tn = 0
    CHECK(parts.tp[0] == doctest::Approx(0.5));
    CHECK(parts.fn[0] == doctest::Approx(0.5));
    CHECK(parts.fp[0] == doctest::Approx(0.0));
    CHECK(parts.tn[0] == doctest::Approx(0.0));
    CHECK(parts.soft_f1_class1[0] == doctest::Approx(2.0 / 3.0));
    CHECK(parts.soft_f1_class0[0] == doctest::Approx(0.0));
    // negative classes mirror it
    CHECK(parts.fp[1] == doctest::Approx(0.5));
    CHECK(parts.tn[1] == doctest::Approx(0.5));
    CHECK(parts.soft_f1_class0[1] == doctest::Approx(2.0 / 3.0));
    for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
        CHECK(parts.cost[c] == doctest::Approx(2.0 / 3.0));
    }
}

TEST_CASE("soft F1 gradient at the zero-logit point is (-1/36, 1/36, 1/36, 1/36)") {
    const Mat4 grad = soft_f1_grad(zero_logit_batch());
    REQUIRE(grad.size() == 1);
    CHECK(grad[0][0] == doctest::Approx(-1.0 / 36.0).epsilon(1e-9));
    CHECK(grad[0][1] == doctest::Approx(1.0 / 36.0).epsilon(1e-9));
    CHECK(grad[0][2] == doctest::Approx(1.0 / 36.0).epsilon(1e-9));
    CHECK(grad[0][3] == doctest::Approx(1.0 / 36.0).epsilon(1e-9));
}

TEST_CASE("soft F1 gradient matches finite differences on random batches") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const LossBatch batch = random_batch(rng);
        const Mat4 analytic = soft_f1_grad(batch);
        const double err = max_grad_error(batch, analytic, [](const LossBatch& b) {
            return soft_f1_loss(b).first;
        });
        CHECK(err < 1e-4);
    }
}

TEST_CASE("cross entropy oracles") {
    LossBatch uniform;
    uniform.logits = {{1.0, 1.0, 1.0, 1.0}};
    uniform.y = {{0.0, 1.0, 0.0, 0.0}};
    const auto [loss_u, grad_u] = cross_entropy_loss(uniform);
    CHECK(loss_u == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(grad_u[0][0] == doctest::Approx(0.25));
    CHECK(grad_u[0][1] == doctest::Approx(-0.75));

    LossBatch confident;
    confident.logits = {{10.0, 0.0, 0.0, 0.0}};
    confident.y = {{1.0, 0.0, 0.0, 0.0}};
    const auto [loss_c, grad_c] = cross_entropy_loss(confident);
    CHECK(loss_c == doctest::Approx(std::log1p(3.0 * std::exp(-10.0))).epsilon(1e-12));
    CHECK(loss_c < 1.4e-4);
    CHECK(loss_c > 1.3e-4);

    // large logits must not overflow
    LossBatch huge;
    huge.logits = {{1000.0, 0.0, 0.0, 0.0}};
    huge.y = {{1.0, 0.0, 0.0, 0.0}};
    CHECK(std::isfinite(cross_entropy_loss(huge).first));
}

TEST_CASE("cross entropy gradient matches finite differences") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const LossBatch batch = random_batch(rng);
        const auto [loss, analytic] = cross_entropy_loss(batch);
        const double err = max_grad_error(batch, analytic, [](const LossBatch& b) {
            return cross_entropy_loss(b).first;
        });
        CHECK(err < 1e-6);
    }
}

TEST_CASE("losses validate shapes and one-hot targets") {
    LossBatch bad;
    bad.logits = {{0, 0, 0, 0}};
    bad.y = {};
    CHECK_THROWS_AS(soft_f1_loss(bad), ShapeError);

    bad.y = {{0.5, 0.5, 0.0, 0.0}};
    CHECK_THROWS_AS(soft_f1_loss(bad), ShapeError);
    CHECK_THROWS_AS(cross_entropy_loss(bad), ShapeError);

    bad.y = {{1.0, 1.0, 0.0, 0.0}};
    CHECK_THROWS_AS(soft_f1_loss(bad), ShapeError);

    LossBatch empty;
    CHECK_THROWS_AS(soft_f1_loss(empty), ShapeError);
}

TEST_CASE("one-hot encodes by severity rank") {
    const Mat4 y = one_hot({RiskLevel::Indicator, RiskLevel::Attempt});
    REQUIRE(y.size() == 2);
    CHECK(y[0][0] == 1.0);
    CHECK(y[0][3] == 0.0);
    CHECK(y[1][3] == 1.0);
}

TEST_CASE("linear model predicts argmax with severity tie-break") {
    LinearModel model;
    model.dim = 2;
    model.weights = {1.0, 0.0,   // indicator row
                     0.0, 1.0,   // ideation row
                     0.0, 0.0,   // behaviour row
                     0.0, 0.0};  // attempt row
    model.bias = {0.0, 0.0, 0.0, 0.0};
    CHECK(model.predict({3.0, 1.0}) == RiskLevel::Indicator);
    CHECK(model.predict({1.0, 3.0}) == RiskLevel::Ideation);
    // all-zero features: four-way tie, severity wins
    CHECK(model.predict({0.0, 0.0}) == RiskLevel::Attempt);

    const Vec4 logits = model.logits_for({2.0, 5.0});
    CHECK(logits[0] == doctest::Approx(2.0));
    CHECK(logits[1] == doctest::Approx(5.0));

    CHECK_THROWS_AS(model.logits_for({1.0}), ShapeError);
}

TEST_CASE("adamw first step and decoupled decay") {
    LinearModel model;
    model.dim = 1;
    model.weights = {1.0, 0.5, 0.0, -0.25};
    model.bias = {1.0, 0.0, 0.0, 0.0};

    AdamWHyper hyper;
    hyper.lr = 0.1;
    hyper.weight_decay = 0.1;
    AdamWState state = AdamWState::for_model(model, hyper);

    LinearModelGrads grads;
    grads.weights = {2.0, 0.0, 0.0, 0.0};
    grads.bias = {2.0, 0.0, 0.0, 0.0};
    adamw_step(model, grads, state);

    // after bias correction the first update is lr * g / (|g| + eps)
    CHECK(model.weights[0] == doctest::Approx(1.0 * (1.0 - 0.01) - 0.1).epsilon(1e-7));
    // zero-grad weights still decay multiplicatively
    CHECK(model.weights[1] == doctest::Approx(0.5 * 0.99).epsilon(1e-12));
    CHECK(model.weights[2] == doctest::Approx(0.0));
    CHECK(model.weights[3] == doctest::Approx(-0.25 * 0.99).epsilon(1e-12));
    // the bias gets the adam update but never the decay
    CHECK(model.bias[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-7));
    CHECK(model.bias[1] == doctest::Approx(0.0));
    CHECK(state.step == 1);

    LinearModelGrads wrong;
    wrong.weights = {1.0};
    CHECK_THROWS_AS(adamw_step(model, wrong, state), ShapeError);
}

TEST_CASE("zero epochs returns exactly the seeded initialization") {
    const auto blobs = testsupport::make_blobs(40, 3, 5);
    TrainConfig config;
    config.epochs = 0;
    config.seed = 1234;
    const TrainResult result = train_toy(blobs.features, blobs.labels, config);
    CHECK(result.loss_curve.empty());

    std::mt19937_64 rng(1234);
    std::uniform_real_distribution<double> init(-0.05, 0.05);
    for (double w : result.model.weights) {
        CHECK(w == init(rng));
    }
    for (double b : result.model.bias) {
        CHECK(b == init(rng));
    }
}

TEST_CASE("training drives the loss down and fits separable blobs") {
    const auto blobs = testsupport::make_blobs(80, 4, 7, 0.3);
    TrainConfig config;
    config.loss = LossKind::SoftF1;
    config.lr = 0.05;
    config.epochs = 120;
    config.seed = 3;
    const TrainResult result = train_toy(blobs.features, blobs.labels, config);
    REQUIRE(result.loss_curve.size() == 120);
    CHECK(result.loss_curve.back() < result.loss_curve.front());
    CHECK(result.train_metrics.accuracy > 0.9);

    TrainConfig ce = config;
    ce.loss = LossKind::CrossEntropy;
    const TrainResult ce_result = train_toy(blobs.features, blobs.labels, ce);
    CHECK(ce_result.train_metrics.accuracy > 0.9);
    CHECK(ce_result.loss_curve.back() < ce_result.loss_curve.front());
}

TEST_CASE("training is deterministic in the seed") {
    const auto blobs = testsupport::make_blobs(40, 3, 9);
    TrainConfig config;
    config.epochs = 10;
    config.seed = 42;
    const TrainResult a = train_toy(blobs.features, blobs.labels, config);
    const TrainResult b = train_toy(blobs.features, blobs.labels, config);
    CHECK(a.model.weights == b.model.weights);
    CHECK(a.loss_curve == b.loss_curve);
}

TEST_CASE("train_toy input validation") {
    const auto blobs = testsupport::make_blobs(40, 3, 5);
    TrainConfig config;

    auto labels = blobs.labels;
    labels.pop_back();
    CHECK_THROWS_AS(train_toy(blobs.features, labels, config), LengthMismatchError);

    const std::vector<std::vector<double>> tiny(4, std::vector<double>{1.0});
    const std::vector<RiskLevel> tiny_labels(4, RiskLevel::Indicator);
    CHECK_THROWS_AS(train_toy(tiny, tiny_labels, config), DegenerateDataError);

    std::vector<RiskLevel> one_class(blobs.labels.size(), RiskLevel::Ideation);
    CHECK_THROWS_AS(train_toy(blobs.features, one_class, config), DegenerateDataError);

    auto ragged = blobs.features;
    ragged[0].push_back(1.0);
    CHECK_THROWS_AS(train_toy(ragged, blobs.labels, config), ShapeError);

    config.epochs = -1;
    CHECK_THROWS_AS(train_toy(blobs.features, blobs.labels, config), DomainError);
}

TEST_CASE("feature files parse from csv and jsonl") {
    const std::string csv =
        "label,f0,f1\n"
        "ideation,0.5,1.5\n"
        "attempt,-1.0,2.0\n";
    const FeatureDataset from_csv = parse_features_text(csv, FileFormat::Csv);
    REQUIRE(from_csv.features.size() == 2);
    CHECK(from_csv.labels[0] == RiskLevel::Ideation);
    CHECK(from_csv.features[1][0] == doctest::Approx(-1.0));

    const std::string jsonl =
        R"({"label": "indicator", "features": [1, 2, 3]})"
        "\n"
        R"({"label": "behaviour", "features": [4, 5, 6]})"
        "\n";
    const FeatureDataset from_jsonl = parse_features_text(jsonl, FileFormat::Jsonl);
    REQUIRE(from_jsonl.features.size() == 2);
    CHECK(from_jsonl.labels[1] == RiskLevel::Behaviour);
    CHECK(from_jsonl.features[0][2] == doctest::Approx(3.0));

    CHECK_THROWS_AS(parse_features_text("f0,f1\n1,2\n", FileFormat::Csv), FormatError);
    CHECK_THROWS_AS(parse_features_text("label,f0\nideation,notanumber\n", FileFormat::Csv),
                    FormatError);
    CHECK_THROWS_AS(parse_features_text("label,f0\nideation,1,2\n", FileFormat::Csv),
                    FormatError);
    CHECK_THROWS_AS(
        parse_features_text("{\"label\": \"ideation\"}\n", FileFormat::Jsonl), FormatError);
    CHECK_THROWS_AS(parse_features_text(R"({"label": "ideation", "features": [1]})"
                                        "\n"
                                        R"({"label": "ideation", "features": [1, 2]})"
                                        "\n",
                                        FileFormat::Jsonl),
                    FormatError);
}

TEST_CASE("loss curves serialize as epoch,loss csv") {
    const std::string csv = loss_curve_to_csv({0.5, 0.25});
    CHECK(csv.rfind("epoch,loss\n", 0) == 0);
    CHECK(csv.find("0,0.5") != std::string::npos);
    CHECK(csv.find("1,0.25") != std::string::npos);
}
