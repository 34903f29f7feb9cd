#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "trendcast/common.hpp"

namespace trendcast {

enum class StepPeriod { HalfMonth, Week };

inline std::size_t steps_per_year(StepPeriod p) {
    return p == StepPeriod::HalfMonth ? 24 : 52;
}

inline const char* to_string(StepPeriod p) {
    return p == StepPeriod::HalfMonth ? "half_month" : "week";
}

inline StepPeriod step_period_from_string(const std::string& s) {
    if (s == "half_month") return StepPeriod::HalfMonth;
    if (s == "week") return StepPeriod::Week;
    throw ConfigError("unknown step_period: " + s);
}

enum class ElementKind { Category, Attribute, AttributeValue, Style };

inline const char* to_string(ElementKind k) {
    switch (k) {
        case ElementKind::Category: return "category";
        case ElementKind::Attribute: return "attribute";
        case ElementKind::AttributeValue: return "attribute_value";
        case ElementKind::Style: return "style";
    }
    return "?";
}

inline ElementKind element_kind_from_string(const std::string& s) {
    if (s == "category") return ElementKind::Category;
    if (s == "attribute") return ElementKind::Attribute;
    if (s == "attribute_value") return ElementKind::AttributeValue;
    if (s == "style") return ElementKind::Style;
    throw ConfigError("unknown element kind: " + s);
}

/// A forecastable unit: category, attribute, attribute value, or style.
/// Parent links follow the taxonomy: attribute -> category,
/// attribute_value -> attribute; categories and styles have no parent.
struct FashionElement {
    std::string id;
    ElementKind kind = ElementKind::Category;
    std::optional<std::string> parent_id;

    void validate() const {
        const bool has_parent = parent_id.has_value();
        switch (kind) {
            case ElementKind::Category:
            case ElementKind::Style:
                if (has_parent)
                    throw DataError("element " + id + ": " + to_string(kind) +
                                    " must not have a parent");
                break;
            case ElementKind::Attribute:
            case ElementKind::AttributeValue:
                if (!has_parent)
                    throw DataError("element " + id + ": " + to_string(kind) +
                                    " requires a parent");
                break;
        }
    }
};

enum class Gender { Female, Male };

inline const char* to_string(Gender g) { return g == Gender::Female ? "female" : "male"; }

inline Gender gender_from_string(const std::string& s) {
    if (s == "female") return Gender::Female;
    if (s == "male") return Gender::Male;
    throw ConfigError("unknown gender: " + s);
}

enum class AgeBand { Under18, A18_25, A25_40, Over40 };

inline const char* to_string(AgeBand a) {
    switch (a) {
        case AgeBand::Under18: return "under18";
        case AgeBand::A18_25: return "a18_25";
        case AgeBand::A25_40: return "a25_40";
        case AgeBand::Over40: return "over40";
    }
    return "?";
}

inline AgeBand age_band_from_string(const std::string& s) {
    if (s == "under18") return AgeBand::Under18;
    if (s == "a18_25") return AgeBand::A18_25;
    if (s == "a25_40") return AgeBand::A25_40;
    if (s == "over40") return AgeBand::Over40;
    throw ConfigError("unknown age band: " + s);
}

/// A population slice. City and gender are required; the optional age band
/// marks fine-grained groups (coarse groups omit it).
struct UserGroup {
    std::string id;
    std::string city;
    Gender gender = Gender::Female;
    std::optional<AgeBand> age_band;

    bool is_fine() const { return age_band.has_value(); }
};

/// One popularity time series keyed by (group, element). `values[t]` is only
/// meaningful where `valid[t]` is true until gaps have been interpolated.
struct TrendSeries {
    std::string group_id;
    std::string element_id;
    std::vector<double> values;
    std::vector<bool> valid;

    std::string key() const { return group_id + ":" + element_id; }

    std::size_t length() const { return values.size(); }

    std::size_t valid_count() const {
        std::size_t n = 0;
        for (bool b : valid) n += b ? 1 : 0;
        return n;
    }

    double valid_fraction() const {
        return valid.empty() ? 0.0
                             : static_cast<double>(valid_count()) /
                                   static_cast<double>(valid.size());
    }
};

/// One (history, future) training or evaluation instance.
struct Sample {
    std::string group_id;
    std::string element_id;
    std::size_t series_index = 0;
    std::size_t start = 0;  // global step of history[0]
    std::vector<double> history;
    std::vector<double> future;
    std::vector<std::size_t> history_positions;  // position within one year
    std::vector<std::size_t> future_positions;

    std::size_t input_len() const { return history.size(); }
    std::size_t horizon() const { return future.size(); }
    std::size_t future_begin() const { return start + history.size(); }
    std::size_t future_end() const { return future_begin() + future.size(); }
};

/// Dataset-global min-max normalization statistics.
struct NormStats {
    double min = 0.0;
    double max = 1.0;

    double span() const { return max > min ? max - min : 1.0; }
    double normalize(double x) const { return (x - min) / span(); }
    double denormalize(double xn) const { return xn * span() + min; }
};

/// A full dataset: affiliation node sets plus one series per
/// (group, element) pair that survived ingestion.
struct Dataset {
    StepPeriod step_period = StepPeriod::HalfMonth;
    std::vector<FashionElement> elements;
    std::vector<UserGroup> groups;
    std::vector<TrendSeries> series;

    std::size_t positions_per_year() const { return steps_per_year(step_period); }

    const FashionElement* find_element(const std::string& id) const {
        for (const auto& e : elements)
            if (e.id == id) return &e;
        return nullptr;
    }
    const UserGroup* find_group(const std::string& id) const {
        for (const auto& g : groups)
            if (g.id == id) return &g;
        return nullptr;
    }
    const TrendSeries* find_series(const std::string& group_id,
                                   const std::string& element_id) const {
        for (const auto& s : series)
            if (s.group_id == group_id && s.element_id == element_id) return &s;
        return nullptr;
    }
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// y[t] = element/total where total > 0; the step is flagged invalid where
/// total == 0.
inline TrendSeries compute_popularity(const std::vector<long long>& element_counts,
                                      const std::vector<long long>& total_counts) {
    if (element_counts.size() != total_counts.size())
        throw DataError("popularity: count vectors differ in length");
    TrendSeries out;
    out.values.resize(element_counts.size(), 0.0);
    out.valid.resize(element_counts.size(), true);
    for (std::size_t t = 0; t < element_counts.size(); ++t) {
        const long long e = element_counts[t], n = total_counts[t];
        if (e < 0 || n < 0)
            throw DataError("popularity: negative count at step " + std::to_string(t));
        if (e > n)
            throw DataError("popularity: element count exceeds total at step " +
                            std::to_string(t));
        if (n == 0) {
            out.valid[t] = false;
            out.values[t] = 0.0;
        } else {
            out.values[t] = static_cast<double>(e) / static_cast<double>(n);
        }
    }
    return out;
}

/// Fills gaps: interior gaps by linear interpolation between the nearest
/// valid neighbors, leading/trailing gaps with the nearest valid value.
inline TrendSeries interpolate_missing(const TrendSeries& in) {
    if (in.valid_count() < 1)
        throw DataError("series " + in.key() + ": no valid points, unusable");
    TrendSeries out = in;
    const std::size_t n = in.length();
    std::size_t prev = n;  // last valid index seen
    for (std::size_t t = 0; t < n; ++t) {
        if (in.valid[t]) {
            if (prev == n && t > 0) {
                for (std::size_t s = 0; s < t; ++s) out.values[s] = in.values[t];
            } else if (prev != n && t > prev + 1) {
                const double lo = in.values[prev], hi = in.values[t];
                const double gap = static_cast<double>(t - prev);
                for (std::size_t s = prev + 1; s < t; ++s)
                    out.values[s] = lo + (hi - lo) * static_cast<double>(s - prev) / gap;
            }
            prev = t;
        }
    }
    if (prev + 1 < n)
        for (std::size_t s = prev + 1; s < n; ++s) out.values[s] = in.values[prev];
    out.valid.assign(n, true);
    return out;
}

inline NormStats fit_minmax(const std::vector<double>& values) {
    if (values.empty()) throw DataError("fit_minmax: no values");
    NormStats s;
    s.min = values[0];
    s.max = values[0];
    for (double v : values) {
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
    }
    return s;
}

/// Windows start at offsets 0, stride, 2*stride, ... while they fit; each
/// carries the year-position index of every step. Short series yield an
/// empty list.
inline std::vector<Sample> make_windows(const TrendSeries& series, std::size_t input_len,
                                        std::size_t horizon, std::size_t stride,
                                        std::size_t positions_per_year,
                                        std::size_t series_index = 0) {
    if (input_len < 1 || horizon < 2)
        throw ConfigError("make_windows: need input_len >= 1 and horizon >= 2");
    if (stride < 1) throw ConfigError("make_windows: stride must be >= 1");
    std::vector<Sample> out;
    const std::size_t need = input_len + horizon;
    if (series.length() < need) return out;
    for (std::size_t start = 0; start + need <= series.length(); start += stride) {
        Sample s;
        s.group_id = series.group_id;
        s.element_id = series.element_id;
        s.series_index = series_index;
        s.start = start;
        s.history.assign(series.values.begin() + static_cast<std::ptrdiff_t>(start),
                         series.values.begin() + static_cast<std::ptrdiff_t>(start + input_len));
        s.future.assign(series.values.begin() + static_cast<std::ptrdiff_t>(start + input_len),
                        series.values.begin() + static_cast<std::ptrdiff_t>(start + need));
        s.history_positions.resize(input_len);
        s.future_positions.resize(horizon);
        for (std::size_t i = 0; i < input_len; ++i)
            s.history_positions[i] = (start + i) % positions_per_year;
        for (std::size_t i = 0; i < horizon; ++i)
            s.future_positions[i] = (start + input_len + i) % positions_per_year;
        out.push_back(std::move(s));
    }
    return out;
}

struct SeriesSplit {
    std::vector<Sample> train;
    std::vector<Sample> validation;
    std::vector<Sample> test;
};

/// Holds out the last `holdout_k` windows of one series; within the held-out
/// list, odd 0-based positions go to test and even ones to validation
/// (holdout_k == 1 keeps the single sample as test). Training windows whose
/// history or future overlaps any held-out forecast range are dropped so
/// held-out targets never leak into training.
inline SeriesSplit split_train_eval(const std::vector<Sample>& windows,
                                    std::size_t holdout_k) {
    if (holdout_k < 1) throw ConfigError("split_train_eval: holdout_k must be >= 1");
    if (windows.size() < holdout_k + 1)
        throw DataError("split_train_eval: need more than " + std::to_string(holdout_k) +
                        " windows, got " + std::to_string(windows.size()));
    SeriesSplit out;
    const std::size_t first_heldout = windows.size() - holdout_k;
    std::size_t min_target_begin = windows[first_heldout].future_begin();
    for (std::size_t i = first_heldout; i < windows.size(); ++i)
        min_target_begin = std::min(min_target_begin, windows[i].future_begin());
    for (std::size_t i = 0; i < first_heldout; ++i) {
        // window span is [start, future_end); held-out targets run to series end
        if (windows[i].future_end() <= min_target_begin) out.train.push_back(windows[i]);
    }
    for (std::size_t i = first_heldout; i < windows.size(); ++i) {
        const std::size_t pos = i - first_heldout;
        if (holdout_k == 1 || pos % 2 == 1)
            out.test.push_back(windows[i]);
        else
            out.validation.push_back(windows[i]);
    }
    return out;
}

/// Ingestion filter + gap fill: drops series with under 50% valid points,
/// interpolates the rest. Returns the number of dropped series; ids of the
/// dropped series are appended to `dropped` when given.
inline std::size_t prepare_series(Dataset& ds, std::vector<std::string>* dropped = nullptr) {
    std::vector<TrendSeries> kept;
    kept.reserve(ds.series.size());
    std::size_t n_dropped = 0;
    for (const TrendSeries& s : ds.series) {
        if (s.valid_fraction() < 0.5 || s.valid_count() < 1) {
            ++n_dropped;
            if (dropped) dropped->push_back(s.key());
            continue;
        }
        kept.push_back(s.valid_count() == s.length() ? s : interpolate_missing(s));
    }
    ds.series = std::move(kept);
    return n_dropped;
}

/// Training-region bound for normalization: the first step covered by any
/// held-out forecast target, minimized over all series (stride-1 windows,
/// last `holdout_k` held out). Steps at or past the bound of a series are
/// excluded from min-max fitting.
inline std::vector<double> training_region_values(const Dataset& ds, std::size_t input_len,
                                                  std::size_t horizon,
                                                  std::size_t holdout_k) {
    std::vector<double> out;
    const std::size_t need = input_len + horizon;
    for (const TrendSeries& s : ds.series) {
        if (s.length() < need) continue;
        const std::size_t n_windows = s.length() - need + 1;
        if (n_windows <= holdout_k) continue;  // series cannot be split, unused
        // first held-out window starts at n_windows - holdout_k; its forecast
        // range begins input_len steps later
        const std::size_t bound = n_windows - holdout_k + input_len;
        for (std::size_t t = 0; t < bound; ++t) out.push_back(s.values[t]);
    }
    return out;
}

}  // namespace trendcast
