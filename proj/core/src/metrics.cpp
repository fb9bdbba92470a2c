#include "riskpipe/metrics.hpp"

#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "riskpipe/errors.hpp"

namespace riskpipe {

using nlohmann::json;

MetricsReport evaluate(const std::vector<RiskLevel>& preds, const std::vector<RiskLevel>& truths) {
    if (preds.size() != truths.size()) {
        throw LengthMismatchError("evaluate: " + std::to_string(preds.size()) + " predictions vs " +
                                  std::to_string(truths.size()) + " truths");
    }
    if (preds.empty()) {
        throw EmptyError("evaluate: no samples");
    }

    MetricsReport report;
    report.total = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i) {
        const auto t = static_cast<std::size_t>(severity_rank(truths[i]));
        const auto p = static_cast<std::size_t>(severity_rank(preds[i]));
        report.confusion[t][p] += 1;
    }

    const double n = static_cast<double>(report.total);
    std::size_t correct = 0;
    double macro_sum = 0.0;
    double weighted_sum = 0.0;
    for (RiskLevel level : kAllRiskLevels) {
        const auto c = static_cast<std::size_t>(severity_rank(level));
        std::size_t tp = report.confusion[c][c];
        std::size_t fp = 0;
        std::size_t fn = 0;
        std::size_t support = 0;
        for (std::size_t other = 0; other < kNumRiskLevels; ++other) {
            support += report.confusion[c][other];
            if (other != c) {
                fp += report.confusion[other][c];
                fn += report.confusion[c][other];
            }
        }
        correct += tp;

        PerClassScores scores;
        scores.support = support;
        scores.precision = (tp + fp) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        scores.recall = (tp + fn) > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        const double pr = scores.precision + scores.recall;
        scores.f1 = pr > 0.0 ? 2.0 * scores.precision * scores.recall / pr : 0.0;
        report.per_class[level] = scores;

        macro_sum += scores.f1;
        weighted_sum += (static_cast<double>(support) / n) * scores.f1;
    }

    report.accuracy = static_cast<double>(correct) / n;
    report.macro_f1 = macro_sum / static_cast<double>(kNumRiskLevels);
    report.weighted_f1 = weighted_sum;
    return report;
}

std::string MetricsReport::to_json() const {
    json j;
    j["total"] = total;
    j["accuracy"] = accuracy;
    j["macro_f1"] = macro_f1;
    j["weighted_f1"] = weighted_f1;
    json conf = json::array();
    for (const auto& row : confusion) {
        conf.push_back(row);
    }
    j["confusion"] = conf;
    json per = json::object();
    for (const auto& [level, scores] : per_class) {
        per[to_string(level)] = {
            {"precision", scores.precision},
            {"recall", scores.recall},
            {"f1", scores.f1},
            {"support", scores.support},
        };
    }
    j["per_class"] = per;
    return j.dump(2);
}

std::string MetricsReport::to_text() const {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2);
    out << std::setw(14) << "" << std::setw(11) << "precision" << std::setw(9) << "recall"
        << std::setw(10) << "f1-score" << std::setw(10) << "support" << "\n\n";
    for (const auto& [level, scores] : per_class) {
        out << std::setw(14) << to_string(level) << std::setw(11) << scores.precision
            << std::setw(9) << scores.recall << std::setw(10) << scores.f1 << std::setw(10)
            << scores.support << "\n";
    }
    out << "\n";
    out << std::setw(14) << "accuracy" << std::setw(11) << "" << std::setw(9) << "" << std::setw(10)
        << accuracy << std::setw(10) << total << "\n";

    double macro_p = 0.0;
    double macro_r = 0.0;
    double weighted_p = 0.0;
    double weighted_r = 0.0;
    for (const auto& [level, scores] : per_class) {
        macro_p += scores.precision / static_cast<double>(kNumRiskLevels);
        macro_r += scores.recall / static_cast<double>(kNumRiskLevels);
        const double w = total > 0 ? static_cast<double>(scores.support) / static_cast<double>(total) : 0.0;
        weighted_p += w * scores.precision;
        weighted_r += w * scores.recall;
    }
    out << std::setw(14) << "macro avg" << std::setw(11) << macro_p << std::setw(9) << macro_r
        << std::setw(10) << macro_f1 << std::setw(10) << total << "\n";
    out << std::setw(14) << "weighted avg" << std::setw(11) << weighted_p << std::setw(9)
        << weighted_r << std::setw(10) << weighted_f1 << std::setw(10) << total << "\n";
    return out.str();
}

AgreementMatrix agreement_matrix(const std::map<std::string, std::vector<RiskLevel>>& model_preds) {
    AgreementMatrix result;
    std::size_t length = 0;
    bool first = true;
    for (const auto& [id, preds] : model_preds) {
        if (first) {
            length = preds.size();
            first = false;
        } else if (preds.size() != length) {
            throw LengthMismatchError("agreement_matrix: prediction list for \"" + id +
                                      "\" has length " + std::to_string(preds.size()) +
                                      ", expected " + std::to_string(length));
        }
        result.ids.push_back(id);  // std::map iterates in sorted key order
    }

    const std::size_t m = result.ids.size();
    result.rates.assign(m, std::vector<double>(m, 1.0));
    for (std::size_t i = 0; i < m; ++i) {
        const auto& a = model_preds.at(result.ids[i]);
        for (std::size_t j = i + 1; j < m; ++j) {
            const auto& b = model_preds.at(result.ids[j]);
            std::size_t matches = 0;
            for (std::size_t k = 0; k < length; ++k) {
                if (a[k] == b[k]) ++matches;
            }
            const double rate =
                length > 0 ? static_cast<double>(matches) / static_cast<double>(length) : 1.0;
            result.rates[i][j] = rate;
            result.rates[j][i] = rate;
        }
    }
    return result;
}

std::string AgreementMatrix::to_json() const {
    json j;
    j["ids"] = ids;
    j["match_rates"] = rates;
    return j.dump(2);
}

std::string AgreementMatrix::to_csv() const {
    std::ostringstream out;
    out << "model";
    for (const auto& id : ids) out << "," << id;
    out << "\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out << ids[i];
        for (std::size_t j = 0; j < ids.size(); ++j) {
            out << "," << rates[i][j];
        }
        out << "\n";
    }
    return out.str();
}

}  // namespace riskpipe
