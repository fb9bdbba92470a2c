#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "riskpipe/datasplit.hpp"
#include "riskpipe/domain.hpp"
#include "riskpipe/metrics.hpp"

namespace riskpipe {

using Vec4 = std::array<double, kNumRiskLevels>;
using Mat4 = std::vector<Vec4>;  // B x 4, row per sample

// One training batch: raw logits and one-hot targets, both B x 4.
struct LossBatch {
    Mat4 logits;
    Mat4 y;
};

// Continuous confusion counts and per-class scores behind the loss value.
struct SoftF1Intermediates {
    Vec4 tp{};
    Vec4 fp{};
    Vec4 fn{};
    Vec4 tn{};
    Vec4 soft_f1_class1{};
    Vec4 soft_f1_class0{};
    Vec4 cost{};
};

inline constexpr double kSoftF1Epsilon = 1e-16;

// Macro double soft F1 loss. Per class c, with y_hat = sigmoid(logits) and
// tp/fp/fn/tn accumulated as continuous sums over the batch:
//   f1_pos = 2*tp / (2*tp + fn + fp + eps)
//   f1_neg = 2*tn / (2*tn + fn + fp + eps)
//   cost   = 0.5 * ((1 - f1_pos) + (1 - f1_neg))
// and the loss is the mean cost over the four classes.
// Throws ShapeError on inconsistent shapes or non-one-hot targets.
std::pair<double, SoftF1Intermediates> soft_f1_loss(const LossBatch& batch);

// Analytic d(loss)/d(logits), same shape as batch.logits.
Mat4 soft_f1_grad(const LossBatch& batch);

// Softmax cross entropy (log-sum-exp stabilized), mean over the batch, with
// analytic gradient (softmax - y) / B.
std::pair<double, Mat4> cross_entropy_loss(const LossBatch& batch);

// Linear classifier head: logits = W x + b with W of shape 4 x dim.
struct LinearModel {
    std::size_t dim = 0;
    std::vector<double> weights;  // row-major, 4 rows of dim
    Vec4 bias{};

    Vec4 logits_for(const std::vector<double>& features) const;
    RiskLevel predict(const std::vector<double>& features) const;
};

struct LinearModelGrads {
    std::vector<double> weights;
    Vec4 bias{};
};

struct AdamWHyper {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.1;
};

// First/second moment accumulators for a LinearModel.
struct AdamWState {
    std::int64_t step = 0;
    std::vector<double> m_weights;
    std::vector<double> v_weights;
    Vec4 m_bias{};
    Vec4 v_bias{};
    AdamWHyper hyper;

    static AdamWState for_model(const LinearModel& model, const AdamWHyper& hyper = {});
};

// One decoupled-weight-decay Adam update, in place. Weight decay applies to
// the weight matrix only (multiplicative 1 - lr*weight_decay), never the
// bias. Throws ShapeError on mismatched shapes.
void adamw_step(LinearModel& model, const LinearModelGrads& grads, AdamWState& state);

enum class LossKind { SoftF1, CrossEntropy };

struct TrainConfig {
    LossKind loss = LossKind::SoftF1;
    double lr = 1e-3;
    int epochs = 200;
    std::uint64_t seed = 0;
    double weight_decay = 0.1;
};

struct TrainResult {
    LinearModel model;
    MetricsReport train_metrics;
    std::vector<double> loss_curve;  // one entry per epoch
};

// Deterministic full-batch training of a linear head on feature vectors.
// Requires N >= 8 with every class present (DegenerateDataError) and
// consistent feature dimensions (ShapeError).
TrainResult train_toy(const std::vector<std::vector<double>>& features,
                      const std::vector<RiskLevel>& labels, const TrainConfig& config);

// One-hot encoding of labels by severity rank.
Mat4 one_hot(const std::vector<RiskLevel>& labels);

struct FeatureDataset {
    std::vector<std::vector<double>> features;
    std::vector<RiskLevel> labels;
};

// CSV: header "label,<feature names...>" then one row per sample.
// JSONL: {"label": string, "features": [numbers]} per line.
// Throws FormatError with a line number on malformed input.
FeatureDataset parse_features_text(const std::string& text, FileFormat format);
FeatureDataset read_features(const std::filesystem::path& path);

// "epoch,loss" rows for plotting.
std::string loss_curve_to_csv(const std::vector<double>& curve);

}  // namespace riskpipe
