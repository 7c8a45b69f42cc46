#include "prore/core/metrics.hpp"

namespace prore::core {

Metrics metrics_from_counts(std::int64_t tp, std::int64_t tn, std::int64_t fp, std::int64_t fn) {
    if (tp < 0 || tn < 0 || fp < 0 || fn < 0) throw InputError("confusion counts must be non-negative");
    Metrics m;
    m.tp = tp;
    m.tn = tn;
    m.fp = fp;
    m.fn = fn;
    const std::int64_t total = m.total();
    if (total <= 0) throw InputError("metrics require at least one (prediction, truth) pair");
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(total);
    const std::int64_t f1_den = 2 * tp + fp + fn;
    m.f1 = f1_den == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(f1_den);
    return m;
}

Metrics compute_metrics(const std::vector<RewardValue>& predictions,
                        const std::vector<RewardValue>& ground_truth) {
    if (predictions.empty()) throw InputError("compute_metrics: empty input");
    if (predictions.size() != ground_truth.size()) {
        throw InputError("compute_metrics: prediction/truth length mismatch");
    }
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] == RewardValue::success;
        const bool truth = ground_truth[i] == RewardValue::success;
        if (pred && truth) ++tp;
        else if (!pred && !truth) ++tn;
        else if (pred && !truth) ++fp;
        else ++fn;
    }
    return metrics_from_counts(tp, tn, fp, fn);
}

} // namespace prore::core
