#pragma once

#include <cstdint>
#include <vector>

#include "prore/core/types.hpp"

namespace prore::core {

/// Confusion counts over binary reward predictions. Positive class = success.
struct Metrics {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
    double accuracy = 0.0;
    double f1 = 0.0;

    std::int64_t total() const { return tp + tn + fp + fn; }
};

Metrics metrics_from_counts(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn);

Metrics compute_metrics(const std::vector<RewardValue>& predictions,
                        const std::vector<RewardValue>& ground_truth);

} // namespace prore::core
