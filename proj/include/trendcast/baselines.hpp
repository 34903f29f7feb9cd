#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "trendcast/series.hpp"

namespace trendcast {

enum class BaselineMethod { Mean, Last, Ar, Var, Es, Linear, Cyclic, GeoStyle };

inline const char* to_string(BaselineMethod m) {
    switch (m) {
        case BaselineMethod::Mean: return "mean";
        case BaselineMethod::Last: return "last";
        case BaselineMethod::Ar: return "ar";
        case BaselineMethod::Var: return "var";
        case BaselineMethod::Es: return "es";
        case BaselineMethod::Linear: return "linear";
        case BaselineMethod::Cyclic: return "cyclic";
        case BaselineMethod::GeoStyle: return "geostyle";
    }
    return "?";
}

inline BaselineMethod baseline_from_string(const std::string& s) {
    for (BaselineMethod m : {BaselineMethod::Mean, BaselineMethod::Last, BaselineMethod::Ar,
                             BaselineMethod::Var, BaselineMethod::Es, BaselineMethod::Linear,
                             BaselineMethod::Cyclic, BaselineMethod::GeoStyle})
        if (s == to_string(m)) return m;
    throw ConfigError("unknown baseline method: " + s);
}

struct BaselineFit {
    std::string method;
    std::vector<double> coefficients;
    std::size_t fit_begin = 0;
    std::size_t fit_end = 0;
};

struct BaselineOptions {
    std::size_t order = 4;  // AR/VAR lag order
    std::vector<double> alpha_grid;
    std::size_t period = 24;     // steps per year for cyclic fits
    std::size_t start_pos = 0;   // year position of history[0]

    static std::vector<double> default_alpha_grid() {
        std::vector<double> g;
        for (int i = 1; i <= 20; ++i) g.push_back(0.05 * i);
        return g;
    }
};

namespace detail {

/// Least squares via column-pivoted QR; rank-deficient systems fall back to
/// ridge-regularized normal equations (lambda = 1e-6).
inline std::vector<double> solve_least_squares(const Eigen::MatrixXd& X,
                                               const Eigen::VectorXd& y,
                                               bool* used_ridge = nullptr) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
    Eigen::VectorXd beta;
    const bool deficient = qr.rank() < X.cols();
    if (deficient) {
        const double lambda = 1e-6;
        Eigen::MatrixXd gram = X.transpose() * X;
        gram.diagonal().array() += lambda;
        beta = gram.ldlt().solve(X.transpose() * y);
    } else {
        beta = qr.solve(y);
    }
    if (used_ridge) *used_ridge = deficient;
    return std::vector<double>(beta.data(), beta.data() + beta.size());
}

}  // namespace detail

// ---------------------------------------------------------------------------
// constant forecasters
// ---------------------------------------------------------------------------

inline std::vector<double> forecast_mean(const std::vector<double>& history,
                                         std::size_t horizon) {
    if (history.empty()) throw DataError("forecast_mean: empty history");
    double acc = 0.0;
    for (double v : history) acc += v;
    return std::vector<double>(horizon, acc / static_cast<double>(history.size()));
}

inline std::vector<double> forecast_last(const std::vector<double>& history,
                                         std::size_t horizon) {
    if (history.empty()) throw DataError("forecast_last: empty history");
    return std::vector<double>(horizon, history.back());
}

// ---------------------------------------------------------------------------
// autoregression
// ---------------------------------------------------------------------------

/// OLS on the lagged design with intercept: y[t] ~ 1, y[t-1], ..., y[t-p].
inline BaselineFit fit_ar(const std::vector<double>& history, std::size_t order) {
    if (history.size() <= order + 1)
        throw DataError("fit_ar: history length must exceed order + 1");
    const std::size_t rows = history.size() - order;
    Eigen::MatrixXd X(rows, order + 1);
    Eigen::VectorXd y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + order;
        X(r, 0) = 1.0;
        for (std::size_t j = 0; j < order; ++j) X(r, 1 + j) = history[t - 1 - j];
        y(r) = history[t];
    }
    BaselineFit fit;
    fit.method = "ar";
    fit.coefficients = detail::solve_least_squares(X, y);
    fit.fit_end = history.size();
    return fit;
}

/// Multi-step forecast by recursive substitution of own predictions.
inline std::vector<double> forecast_ar(const BaselineFit& fit,
                                       const std::vector<double>& history,
                                       std::size_t horizon) {
    const std::size_t order = fit.coefficients.size() - 1;
    std::vector<double> ext = history;
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t s = 0; s < horizon; ++s) {
        double next = fit.coefficients[0];
        for (std::size_t j = 0; j < order; ++j)
            next += fit.coefficients[1 + j] * ext[ext.size() - 1 - j];
        ext.push_back(next);
        out.push_back(next);
    }
    return out;
}

// ---------------------------------------------------------------------------
// vector autoregression
// ---------------------------------------------------------------------------

struct VarFit {
    std::size_t order = 0;
    std::size_t k = 0;
    // per-equation coefficients: [intercept, series0 lags 1..p, series1 lags 1..p, ...]
    std::vector<std::vector<double>> equations;
    bool fell_back_to_ar = false;
};

/// Per-equation least squares over all series' lags. Underdetermined systems
/// fall back to independent AR fits per series.
inline VarFit fit_var(const std::vector<std::vector<double>>& series, std::size_t order) {
    if (series.empty()) throw DataError("fit_var: no series");
    const std::size_t k = series.size();
    const std::size_t n = series[0].size();
    for (const auto& s : series)
        if (s.size() != n) throw DataError("fit_var: series lengths differ");
    VarFit fit;
    fit.order = order;
    fit.k = k;
    if (n <= order || n - order < k * order + 1) {
        // underdetermined: independent AR per series, own lags on the
        // diagonal blocks, cross terms zero
        fit.fell_back_to_ar = true;
        for (std::size_t i = 0; i < k; ++i) {
            BaselineFit ar = fit_ar(series[i], order);
            std::vector<double> eq(1 + k * order, 0.0);
            eq[0] = ar.coefficients[0];
            for (std::size_t j = 0; j < order; ++j)
                eq[1 + i * order + j] = ar.coefficients[1 + j];
            fit.equations.push_back(std::move(eq));
        }
        return fit;
    }
    const std::size_t rows = n - order;
    Eigen::MatrixXd X(rows, 1 + k * order);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + order;
        X(r, 0) = 1.0;
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t j = 0; j < order; ++j)
                X(r, 1 + i * order + j) = series[i][t - 1 - j];
    }
    for (std::size_t i = 0; i < k; ++i) {
        Eigen::VectorXd y(rows);
        for (std::size_t r = 0; r < rows; ++r) y(r) = series[i][r + order];
        fit.equations.push_back(detail::solve_least_squares(X, y));
    }
    return fit;
}

/// Joint recursive forecast; returns one row per input series.
inline std::vector<std::vector<double>> forecast_var(const VarFit& fit,
                                                     const std::vector<std::vector<double>>& series,
                                                     std::size_t horizon) {
    std::vector<std::vector<double>> ext = series;
    std::vector<std::vector<double>> out(fit.k);
    for (std::size_t s = 0; s < horizon; ++s) {
        std::vector<double> next(fit.k);
        for (std::size_t i = 0; i < fit.k; ++i) {
            double v = fit.equations[i][0];
            for (std::size_t q = 0; q < fit.k; ++q)
                for (std::size_t j = 0; j < fit.order; ++j)
                    v += fit.equations[i][1 + q * fit.order + j] *
                         ext[q][ext[q].size() - 1 - j];
            next[i] = v;
        }
        for (std::size_t i = 0; i < fit.k; ++i) {
            ext[i].push_back(next[i]);
            out[i].push_back(next[i]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// exponential smoothing
// ---------------------------------------------------------------------------

/// Simple exponential smoothing; alpha picked from the grid by minimal
/// one-step squared error, multi-step forecast flat at the final level.
inline std::vector<double> forecast_es(const std::vector<double>& history, std::size_t horizon,
                                       const std::vector<double>& alpha_grid,
                                       double* chosen_alpha = nullptr) {
    if (history.empty()) throw DataError("forecast_es: empty history");
    if (alpha_grid.empty()) throw ConfigError("forecast_es: empty alpha grid");
    double best_alpha = alpha_grid[0];
    double best_sse = std::numeric_limits<double>::infinity();
    for (double alpha : alpha_grid) {
        if (alpha <= 0.0 || alpha > 1.0)
            throw ConfigError("forecast_es: alpha must lie in (0, 1]");
        double level = history[0];
        double sse = 0.0;
        for (std::size_t t = 1; t < history.size(); ++t) {
            const double err = history[t] - level;
            sse += err * err;
            level = alpha * history[t] + (1.0 - alpha) * level;
        }
        if (sse < best_sse) {
            best_sse = sse;
            best_alpha = alpha;
        }
    }
    double level = history[0];
    for (std::size_t t = 1; t < history.size(); ++t)
        level = best_alpha * history[t] + (1.0 - best_alpha) * level;
    if (chosen_alpha) *chosen_alpha = best_alpha;
    return std::vector<double>(horizon, level);
}

// ---------------------------------------------------------------------------
// parametric curves (Linear / Cyclic / GeoStyle)
// ---------------------------------------------------------------------------

enum class CurveKind { Linear, Cyclic, LinearCyclic };

/// Least-squares fit of c0 [+ c1 t] [+ c2 sin(2 pi pos/P) + c3 cos(2 pi pos/P)]
/// with the annual period fixed at `period` and phase absorbed by the
/// sin/cos pair. `start_pos` anchors the year position of history[0].
inline BaselineFit fit_curve(CurveKind kind, const std::vector<double>& history,
                             std::size_t start_pos, std::size_t period,
                             std::vector<std::string>* warnings = nullptr) {
    if (history.size() < 2) throw DataError("fit_curve: need at least 2 points");
    const bool cyclic = kind != CurveKind::Linear;
    if (cyclic) {
        if (history.size() < period)
            throw DataError("fit_curve: cyclic fit needs at least one full period");
        if (history.size() < 2 * period && warnings)
            warnings->push_back("cyclic fit on fewer than two periods (" +
                                std::to_string(history.size()) + " points)");
    }
    const bool trend = kind != CurveKind::Cyclic;
    const std::size_t cols = 1 + (trend ? 1 : 0) + (cyclic ? 2 : 0);
    const double two_pi = 6.283185307179586477;
    Eigen::MatrixXd X(history.size(), cols);
    Eigen::VectorXd y(history.size());
    for (std::size_t i = 0; i < history.size(); ++i) {
        std::size_t c = 0;
        X(i, c++) = 1.0;
        if (trend) X(i, c++) = static_cast<double>(i);
        if (cyclic) {
            const double angle =
                two_pi * static_cast<double>((start_pos + i) % period) / static_cast<double>(period);
            X(i, c++) = std::sin(angle);
            X(i, c++) = std::cos(angle);
        }
        y(i) = history[i];
    }
    BaselineFit fit;
    fit.method = kind == CurveKind::Linear ? "linear"
                                           : (kind == CurveKind::Cyclic ? "cyclic" : "geostyle");
    fit.coefficients = detail::solve_least_squares(X, y);
    fit.fit_end = history.size();
    return fit;
}

inline std::vector<double> forecast_curve(CurveKind kind, const BaselineFit& fit,
                                          std::size_t history_len, std::size_t start_pos,
                                          std::size_t period, std::size_t horizon) {
    const bool cyclic = kind != CurveKind::Linear;
    const bool trend = kind != CurveKind::Cyclic;
    const double two_pi = 6.283185307179586477;
    std::vector<double> out;
    out.reserve(horizon);
    for (std::size_t s = 0; s < horizon; ++s) {
        const std::size_t i = history_len + s;
        std::size_t c = 0;
        double v = fit.coefficients[c++];
        if (trend) v += fit.coefficients[c++] * static_cast<double>(i);
        if (cyclic) {
            const double angle =
                two_pi * static_cast<double>((start_pos + i) % period) / static_cast<double>(period);
            v += fit.coefficients[c++] * std::sin(angle);
            v += fit.coefficients[c++] * std::cos(angle);
        }
        out.push_back(v);
    }
    return out;
}

// ---------------------------------------------------------------------------
// per-sample driver
// ---------------------------------------------------------------------------

/// Sibling set for VAR: series of the same group whose elements share the
/// target element's parent (the target itself included). Elements without a
/// parent fall back to the single-series case.
inline std::vector<const TrendSeries*> var_siblings(const Dataset& ds, const Sample& sample) {
    const FashionElement* el = ds.find_element(sample.element_id);
    std::vector<const TrendSeries*> out;
    if (el && el->parent_id) {
        for (const auto& other : ds.elements) {
            if (!other.parent_id || *other.parent_id != *el->parent_id) continue;
            const TrendSeries* s = ds.find_series(sample.group_id, other.id);
            if (s && s->length() >= sample.future_begin()) out.push_back(s);
        }
    }
    if (out.empty()) {
        const TrendSeries* self = ds.find_series(sample.group_id, sample.element_id);
        if (self) out.push_back(self);
    }
    return out;
}

/// Fits the chosen method on the sample's history window and emits horizon
/// values. `ds` supplies sibling windows for VAR; it must hold the same
/// value scale the sample windows were cut from.
inline std::vector<double> baseline_forecast(BaselineMethod method, const Sample& sample,
                                             const Dataset& ds, const BaselineOptions& opts,
                                             std::vector<std::string>* warnings = nullptr) {
    const std::vector<double>& hist = sample.history;
    const std::size_t horizon = sample.horizon();
    switch (method) {
        case BaselineMethod::Mean: return forecast_mean(hist, horizon);
        case BaselineMethod::Last: return forecast_last(hist, horizon);
        case BaselineMethod::Ar: {
            if (opts.order == 0) return forecast_mean(hist, horizon);
            return forecast_ar(fit_ar(hist, opts.order), hist, horizon);
        }
        case BaselineMethod::Var: {
            if (opts.order == 0) return forecast_mean(hist, horizon);
            auto siblings = var_siblings(ds, sample);
            std::vector<std::vector<double>> mat;
            std::size_t target_row = 0;
            for (std::size_t i = 0; i < siblings.size(); ++i) {
                const auto& vals = siblings[i]->values;
                mat.emplace_back(vals.begin() + static_cast<std::ptrdiff_t>(sample.start),
                                 vals.begin() + static_cast<std::ptrdiff_t>(sample.future_begin()));
                if (siblings[i]->element_id == sample.element_id) target_row = i;
            }
            VarFit fit = fit_var(mat, opts.order);
            if (fit.fell_back_to_ar && warnings)
                warnings->push_back("var: underdetermined system for " + sample.group_id + ":" +
                                    sample.element_id + ", fell back to independent AR");
            return forecast_var(fit, mat, horizon)[target_row];
        }
        case BaselineMethod::Es: {
            const auto& grid =
                opts.alpha_grid.empty() ? BaselineOptions::default_alpha_grid() : opts.alpha_grid;
            return forecast_es(hist, horizon, grid);
        }
        case BaselineMethod::Linear: {
            BaselineFit fit = fit_curve(CurveKind::Linear, hist, opts.start_pos, opts.period,
                                        warnings);
            return forecast_curve(CurveKind::Linear, fit, hist.size(), opts.start_pos,
                                  opts.period, horizon);
        }
        case BaselineMethod::Cyclic: {
            BaselineFit fit = fit_curve(CurveKind::Cyclic, hist, opts.start_pos, opts.period,
                                        warnings);
            return forecast_curve(CurveKind::Cyclic, fit, hist.size(), opts.start_pos,
                                  opts.period, horizon);
        }
        case BaselineMethod::GeoStyle: {
            BaselineFit fit = fit_curve(CurveKind::LinearCyclic, hist, opts.start_pos,
                                        opts.period, warnings);
            return forecast_curve(CurveKind::LinearCyclic, fit, hist.size(), opts.start_pos,
                                  opts.period, horizon);
        }
    }
    throw ConfigError("baseline_forecast: unhandled method");
}

}  // namespace trendcast
