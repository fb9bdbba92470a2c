#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "riskpipe/domain.hpp"

namespace riskpipe::testsupport {

struct Blobs {
    std::vector<std::vector<double>> features;
    std::vector<RiskLevel> labels;
};

inline constexpr std::array<double, kNumRiskLevels> kImbalancedMix = {0.385, 0.357, 0.204,
                                                                      0.054};

// Four Gaussian blobs, one per risk level, with class c centered at 2.0 on
// the coordinates j where j % 4 == c. Class sizes follow `mix` (rounded,
// remainder to the last class, at least one sample each).
inline Blobs make_blobs(std::size_t n, std::size_t dim, std::uint64_t seed, double sigma = 0.6,
                        const std::array<double, kNumRiskLevels>& mix = kImbalancedMix) {
    std::array<std::size_t, kNumRiskLevels> counts{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c + 1 < kNumRiskLevels; ++c) {
        counts[c] = static_cast<std::size_t>(std::lround(mix[c] * static_cast<double>(n)));
        if (counts[c] == 0) counts[c] = 1;
        assigned += counts[c];
    }
    counts[kNumRiskLevels - 1] = (assigned + 1 <= n) ? n - assigned : 1;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    Blobs blobs;
    for (std::size_t c = 0; c < kNumRiskLevels; ++c) {
        for (std::size_t i = 0; i < counts[c]; ++i) {
            std::vector<double> row(dim);
            for (std::size_t j = 0; j < dim; ++j) {
                row[j] = (j % kNumRiskLevels == c ? 2.0 : 0.0) + noise(rng);
            }
            blobs.features.push_back(std::move(row));
            blobs.labels.push_back(risk_level_from_rank(static_cast<int>(c)));
        }
    }
    return blobs;
}

}  // namespace riskpipe::testsupport
