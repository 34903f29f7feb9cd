#pragma once

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "trendcast/common.hpp"

namespace trendcast {

inline constexpr double kMapeEps = 1e-8;

inline double metric_mae(const std::vector<double>& preds, const std::vector<double>& targets) {
    if (preds.size() != targets.size())
        throw std::invalid_argument("metric_mae: length mismatch");
    if (preds.empty()) throw DataError("metric_mae: empty input");
    double acc = 0.0;
    for (std::size_t i = 0; i < preds.size(); ++i) acc += std::fabs(preds[i] - targets[i]);
    return acc / static_cast<double>(preds.size());
}

/// Percent-scale MAPE with ground-truth denominators; terms with |target|
/// below kMapeEps are excluded and counted separately.
inline double metric_mape(const std::vector<double>& preds, const std::vector<double>& targets,
                          std::size_t* excluded = nullptr) {
    if (preds.size() != targets.size())
        throw std::invalid_argument("metric_mape: length mismatch");
    if (preds.empty()) throw DataError("metric_mape: empty input");
    double acc = 0.0;
    std::size_t used = 0, skipped = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (std::fabs(targets[i]) < kMapeEps) {
            ++skipped;
            continue;
        }
        acc += std::fabs(preds[i] - targets[i]) / std::fabs(targets[i]);
        ++used;
    }
    if (excluded) *excluded = skipped;
    return used == 0 ? 0.0 : 100.0 * acc / static_cast<double>(used);
}

/// Streaming accumulator pooling every (sample, step) term; order-invariant
/// totals are kept per series for the breakdown.
struct MetricAccumulator {
    struct Entry {
        double abs_err = 0.0;
        double ape = 0.0;  // relative terms, pre-percent
        std::size_t n = 0;
        std::size_t mape_n = 0;
        std::size_t mape_excluded = 0;
    };

    std::map<std::string, Entry> per_series;

    void add(const std::string& series_key, const std::vector<double>& preds,
             const std::vector<double>& targets) {
        if (preds.size() != targets.size())
            throw std::invalid_argument("metrics: length mismatch");
        Entry& e = per_series[series_key];
        for (std::size_t i = 0; i < preds.size(); ++i) {
            e.abs_err += std::fabs(preds[i] - targets[i]);
            ++e.n;
            if (std::fabs(targets[i]) < kMapeEps) {
                ++e.mape_excluded;
            } else {
                e.ape += std::fabs(preds[i] - targets[i]) / std::fabs(targets[i]);
                ++e.mape_n;
            }
        }
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& [k, e] : per_series) n += e.n;
        return n;
    }

    double mae() const {
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto& [k, e] : per_series) {
            acc += e.abs_err;
            n += e.n;
        }
        if (n == 0) throw DataError("metrics: no evaluation terms");
        return acc / static_cast<double>(n);
    }

    double mape_percent() const {
        double acc = 0.0;
        std::size_t n = 0;
        for (const auto& [k, e] : per_series) {
            acc += e.ape;
            n += e.mape_n;
        }
        return n == 0 ? 0.0 : 100.0 * acc / static_cast<double>(n);
    }

    std::size_t mape_excluded() const {
        std::size_t n = 0;
        for (const auto& [k, e] : per_series) n += e.mape_excluded;
        return n;
    }
};

}  // namespace trendcast
