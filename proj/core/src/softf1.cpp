#include "riskpipe/softf1.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "riskpipe/errors.hpp"

namespace riskpipe {

namespace {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

void check_batch(const LossBatch& batch) {
    if (batch.logits.empty()) {
        throw ShapeError("batch must contain at least one sample");
    }
    if (batch.logits.size() != batch.y.size()) {
        std::ostringstream oss;
        oss << "logits rows (" << batch.logits.size() << ") != target rows (" << batch.y.size()
            << ")";
        throw ShapeError(oss.str());
    }
    for (std::size_t b = 0; b < batch.y.size(); ++b) {
        int ones = 0;
        for (double v : batch.y[b]) {
            if (v == 1.0) {
                ++ones;
            } else if (v != 0.0) {
                std::ostringstream oss;
                oss << "target row " << b << " has entry " << v << ", expected 0 or 1";
                throw ShapeError(oss.str());
            }
        }
        if (ones != 1) {
            std::ostringstream oss;
            oss << "target row " << b << " has " << ones << " ones, expected exactly 1";
            throw ShapeError(oss.str());
        }
    }
}

SoftF1Intermediates accumulate(const LossBatch& batch) {
    SoftF1Intermediates acc;
    for (std::size_t b = 0; b < batch.logits.size(); ++b) {
        for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
            const double p = sigmoid(batch.logits[b][c]);
            const double t = batch.y[b][c];
            acc.tp[c] += p * t;
            acc.fp[c] += p * (1.0 - t);
            acc.fn[c] += (1.0 - p) * t;
            acc.tn[c] += (1.0 - p) * (1.0 - t);
        }
    }
    for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
        acc.soft_f1_class1[c] =
            2.0 * acc.tp[c] / (2.0 * acc.tp[c] + acc.fn[c] + acc.fp[c] + kSoftF1Epsilon);
        acc.soft_f1_class0[c] =
            2.0 * acc.tn[c] / (2.0 * acc.tn[c] + acc.fn[c] + acc.fp[c] + kSoftF1Epsilon);
        acc.cost[c] = 0.5 * ((1.0 - acc.soft_f1_class1[c]) + (1.0 - acc.soft_f1_class0[c]));
    }
    return acc;
}

}  // namespace

std::pair<double, SoftF1Intermediates> soft_f1_loss(const LossBatch& batch) {
    check_batch(batch);
    SoftF1Intermediates acc = accumulate(batch);
    double loss = 0.0;
    for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
        loss += acc.cost[c];
    }
    loss /= static_cast<double>(kNumRiskLevels);
    return {loss, acc};
}

Mat4 soft_f1_grad(const LossBatch& batch) {
    check_batch(batch);
    const SoftF1Intermediates acc = accumulate(batch);

    // Per class: d(f1_pos)/d(tp) = 2*(fn+fp+eps)/D1^2 and
    // d(f1_pos)/d(fn) = d(f1_pos)/d(fp) = -2*tp/D1^2 with D1 = 2*tp+fn+fp+eps,
    // symmetrically for f1_neg with D0 = 2*tn+fn+fp+eps. The loss scales each
    // by -0.5/4 and the chain through sigmoid contributes p*(1-p).
    Vec4 a1{};
    Vec4 b1{};
    Vec4 a0{};
    Vec4 b0{};
    for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
        const double d1 = 2.0 * acc.tp[c] + acc.fn[c] + acc.fp[c] + kSoftF1Epsilon;
        const double d0 = 2.0 * acc.tn[c] + acc.fn[c] + acc.fp[c] + kSoftF1Epsilon;
        a1[c] = 2.0 * (acc.fn[c] + acc.fp[c] + kSoftF1Epsilon) / (d1 * d1);
        b1[c] = 2.0 * acc.tp[c] / (d1 * d1);
        a0[c] = 2.0 * (acc.fn[c] + acc.fp[c] + kSoftF1Epsilon) / (d0 * d0);
        b0[c] = 2.0 * acc.tn[c] / (d0 * d0);
    }

    const double scale = -0.5 / static_cast<double>(kNumRiskLevels);
    Mat4 grad(batch.logits.size());
    for (std::size_t b = 0; b < batch.logits.size(); ++b) {
        for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
            const double p = sigmoid(batch.logits[b][c]);
            const double t = batch.y[b][c];
            const double df1_dp = a1[c] * t + b1[c] * (2.0 * t - 1.0);
            const double df0_dp = b0[c] * t - (a0[c] + b0[c]) * (1.0 - t);
            grad[b][c] = scale * (df1_dp + df0_dp) * p * (1.0 - p);
        }
    }
    return grad;
}

std::pair<double, Mat4> cross_entropy_loss(const LossBatch& batch) {
    check_batch(batch);
    const double inv_b = 1.0 / static_cast<double>(batch.logits.size());
    double loss = 0.0;
    Mat4 grad(batch.logits.size());
    for (std::size_t b = 0; b < batch.logits.size(); ++b) {
        const Vec4& z = batch.logits[b];
        const double zmax = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        Vec4 shifted{};
        for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
            shifted[c] = std::exp(z[c] - zmax);
            sum += shifted[c];
        }
        const double lse = std::log(sum) + zmax;
        for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
            const double softmax = shifted[c] / sum;
            grad[b][c] = (softmax - batch.y[b][c]) * inv_b;
            if (batch.y[b][c] == 1.0) {
                loss += lse - z[c];
            }
        }
    }
    return {loss * inv_b, grad};
}

Vec4 LinearModel::logits_for(const std::vector<double>& features) const {
    if (features.size() != dim) {
        std::ostringstream oss;
        oss << "feature vector has " << features.size() << " entries, model expects " << dim;
        throw ShapeError(oss.str());
    }
    Vec4 out = bias;
    for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
        const double* row = weights.data() + c * dim;
        double dot = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            dot += row[j] * features[j];
        }
        out[c] += dot;
    }
    return out;
}

RiskLevel LinearModel::predict(const std::vector<double>& features) const {
    const Vec4 z = logits_for(features);
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumRiskLevels; ++c) {
        if (z[c] >= z[best]) {
            best = c;
        }
    }
    return risk_level_from_rank(static_cast<int>(best));
}

AdamWState AdamWState::for_model(const LinearModel& model, const AdamWHyper& hyper) {
    AdamWState state;
    state.m_weights.assign(model.weights.size(), 0.0);
    state.v_weights.assign(model.weights.size(), 0.0);
    state.hyper = hyper;
    return state;
}

void adamw_step(LinearModel& model, const LinearModelGrads& grads, AdamWState& state) {
    if (grads.weights.size() != model.weights.size() ||
        state.m_weights.size() != model.weights.size()) {
        throw ShapeError("gradient/state shape does not match model weights");
    }
    const AdamWHyper& h = state.hyper;
    state.step += 1;
    const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < model.weights.size(); ++i) {
        const double g = grads.weights[i];
        state.m_weights[i] = h.beta1 * state.m_weights[i] + (1.0 - h.beta1) * g;
        state.v_weights[i] = h.beta2 * state.v_weights[i] + (1.0 - h.beta2) * g * g;
        const double mhat = state.m_weights[i] / bc1;
        const double vhat = state.v_weights[i] / bc2;
        model.weights[i] =
            model.weights[i] * (1.0 - h.lr * h.weight_decay) - h.lr * mhat / (std::sqrt(vhat) + h.eps);
    }
    for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
        const double g = grads.bias[c];
        state.m_bias[c] = h.beta1 * state.m_bias[c] + (1.0 - h.beta1) * g;
        state.v_bias[c] = h.beta2 * state.v_bias[c] + (1.0 - h.beta2) * g * g;
        const double mhat = state.m_bias[c] / bc1;
        const double vhat = state.v_bias[c] / bc2;
        model.bias[c] -= h.lr * mhat / (std::sqrt(vhat) + h.eps);
    }
}

Mat4 one_hot(const std::vector<RiskLevel>& labels) {
    Mat4 out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = Vec4{};
        out[i][static_cast<std::size_t>(severity_rank(labels[i]))] = 1.0;
    }
    return out;
}

TrainResult train_toy(const std::vector<std::vector<double>>& features,
                      const std::vector<RiskLevel>& labels, const TrainConfig& config) {
    if (features.size() != labels.size()) {
        throw LengthMismatchError("feature and label counts differ");
    }
    if (features.size() < 8) {
        throw DegenerateDataError("need at least 8 samples to train");
    }
    std::array<std::size_t, kNumRiskLevels> counts{};
    for (RiskLevel label : labels) {
        ++counts[static_cast<std::size_t>(severity_rank(label))];
    }
    for (RiskLevel level : kAllRiskLevels) {
        if (counts[static_cast<std::size_t>(severity_rank(level))] == 0) {
            throw DegenerateDataError("class " + to_string(level) + " has no samples");
        }
    }
    const std::size_t dim = features.front().size();
    if (dim == 0) {
        throw ShapeError("feature vectors must be non-empty");
    }
    for (const auto& row : features) {
        if (row.size() != dim) {
            throw ShapeError("feature vectors must share one dimension");
        }
    }
    if (config.epochs < 0) {
        throw DomainError("epochs must be >= 0");
    }

    LinearModel model;
    model.dim = dim;
    model.weights.resize(kNumRiskLevels * dim);
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> init(-0.05, 0.05);
    for (double& w : model.weights) {
        w = init(rng);
    }
    for (double& b : model.bias) {
        b = init(rng);
    }

    AdamWHyper hyper;
    hyper.lr = config.lr;
    hyper.weight_decay = config.weight_decay;
    AdamWState state = AdamWState::for_model(model, hyper);

    const std::size_t n = features.size();
    LossBatch batch;
    batch.y = one_hot(labels);
    batch.logits.resize(n);

    TrainResult result;
    result.loss_curve.reserve(static_cast<std::size_t>(config.epochs));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t b = 0; b < n; ++b) {
            batch.logits[b] = model.logits_for(features[b]);
        }
        double loss = 0.0;
        Mat4 dlogits;
        if (config.loss == LossKind::SoftF1) {
            loss = soft_f1_loss(batch).first;
            dlogits = soft_f1_grad(batch);
        } else {
            std::tie(loss, dlogits) = cross_entropy_loss(batch);
        }
        result.loss_curve.push_back(loss);

        LinearModelGrads grads;
        grads.weights.assign(model.weights.size(), 0.0);
        for (std::size_t b = 0; b < n; ++b) {
            for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
                const double d = dlogits[b][c];
                grads.bias[c] += d;
                double* row = grads.weights.data() + c * dim;
                for (std::size_t j = 0; j < dim; ++j) {
                    row[j] += d * features[b][j];
                }
            }
        }
        adamw_step(model, grads, state);
    }

    std::vector<RiskLevel> preds;
    preds.reserve(n);
    for (const auto& row : features) {
        preds.push_back(model.predict(row));
    }
    result.train_metrics = evaluate(preds, labels);
    result.model = std::move(model);
    return result;
}

namespace {

FeatureDataset parse_features_csv(const std::string& text) {
    FeatureDataset out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t header_fields = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty()) {
            continue;
        }
        std::vector<std::string> fields;
        std::string field;
        for (char ch : line) {
            if (ch == ',') {
                fields.push_back(field);
                field.clear();
            } else {
                field.push_back(ch);
            }
        }
        fields.push_back(field);
        if (!header_seen) {
            if (fields.empty() || fields[0] != "label") {
                throw FormatError("line 1: feature CSV header must start with 'label'");
            }
            header_seen = true;
            header_fields = fields.size();
            continue;
        }
        if (fields.size() < 2) {
            throw FormatError("line " + std::to_string(line_no) +
                              ": expected a label and at least one feature");
        }
        if (fields.size() != header_fields) {
            throw FormatError("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(header_fields) + " fields, got " +
                              std::to_string(fields.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size() - 1);
        for (std::size_t i = 1; i < fields.size(); ++i) {
            try {
                std::size_t used = 0;
                row.push_back(std::stod(fields[i], &used));
                if (used != fields[i].size()) {
                    throw std::invalid_argument("trailing characters");
                }
            } catch (const std::exception&) {
                throw FormatError("line " + std::to_string(line_no) + ": bad number '" +
                                  fields[i] + "'");
            }
        }
        try {
            out.labels.push_back(parse_risk_level(fields[0]));
        } catch (const DomainError& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
        out.features.push_back(std::move(row));
    }
    if (!header_seen) {
        throw FormatError("feature CSV is empty");
    }
    return out;
}

FeatureDataset parse_features_jsonl(const std::string& text) {
    FeatureDataset out;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        bool blank = true;
        for (char ch : line) {
            if (std::isspace(static_cast<unsigned char>(ch)) == 0) {
                blank = false;
                break;
            }
        }
        if (blank) {
            continue;
        }
        try {
            const nlohmann::json row = nlohmann::json::parse(line);
            out.labels.push_back(parse_risk_level(row.at("label").get<std::string>()));
            out.features.push_back(row.at("features").get<std::vector<double>>());
        } catch (const std::exception& e) {
            throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace

FeatureDataset parse_features_text(const std::string& text, FileFormat format) {
    FeatureDataset out = format == FileFormat::Csv ? parse_features_csv(text)
                                                   : parse_features_jsonl(text);
    for (const auto& row : out.features) {
        if (row.size() != out.features.front().size()) {
            throw FormatError("feature rows have inconsistent dimensions");
        }
    }
    return out;
}

FeatureDataset read_features(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open features file: " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_features_text(buffer.str(), format_for_path(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::string loss_curve_to_csv(const std::vector<double>& curve) {
    std::ostringstream out;
    out << "epoch,loss\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < curve.size(); ++i) {
        out << i << ',' << curve[i] << '\n';
    }
    return out.str();
}

}  // namespace riskpipe
