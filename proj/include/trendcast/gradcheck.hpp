#pragma once

#include <functional>
#include <span>

#include "trendcast/tensor.hpp"

namespace trendcast {

struct FdReport {
    double max_rel_err = 0.0;  // worst per-coordinate relative error
    std::size_t checked = 0;
    std::size_t skipped = 0;
    // accumulated squared norms over checked coordinates, for the
    // vector-level comparison used on whole parameter tensors
    double sq_diff = 0.0;
    double sq_analytic = 0.0;
    double sq_numeric = 0.0;

    /// ||analytic - numeric|| / max(||analytic||, ||numeric||, 1e-8)
    double l2_rel_err() const {
        const double denom =
            std::max({std::sqrt(sq_analytic), std::sqrt(sq_numeric), 1e-8});
        return std::sqrt(sq_diff) / denom;
    }
};

namespace detail {

inline double rel_err(double analytic, double numeric) {
    const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
    return std::fabs(analytic - numeric) / denom;
}

}  // namespace detail

/// Central-difference check against an in-place parameter buffer. `eval`
/// recomputes the scalar objective from current buffer contents and reports
/// the forward pass's kink margin (smallest |input| seen by relu / |.|).
/// Coordinates whose base or perturbed forwards come within h of a kink are
/// skipped rather than compared.
inline void fd_check_storage(const std::function<std::pair<double, double>()>& eval,
                             std::span<double> values, std::span<const double> analytic,
                             double h, FdReport& report) {
    if (h <= 0.0) throw std::invalid_argument("fd_check_storage: h must be positive");
    const double base_margin = eval().second;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double keep = values[i];
        values[i] = keep + h;
        const auto [fp, mp] = eval();
        values[i] = keep - h;
        const auto [fm, mm] = eval();
        values[i] = keep;
        if (base_margin < h || mp < h || mm < h) {
            ++report.skipped;
            continue;
        }
        const double numeric = (fp - fm) / (2.0 * h);
        report.max_rel_err = std::max(report.max_rel_err, detail::rel_err(analytic[i], numeric));
        report.sq_diff += (analytic[i] - numeric) * (analytic[i] - numeric);
        report.sq_analytic += analytic[i] * analytic[i];
        report.sq_numeric += numeric * numeric;
        ++report.checked;
    }
}

/// Checks the tape gradient of f at x against central finite differences and
/// returns the worst relative error (denominator max(|analytic|, |numeric|,
/// 1e-8)). f builds a scalar objective on the supplied tape from a tracked
/// copy of x.
inline double finite_diff_check(const std::function<Tensor(Tape&, const Tensor&)>& f,
                                const Tensor& x, double h, FdReport* report = nullptr) {
    if (h <= 0.0) throw std::invalid_argument("finite_diff_check: h must be positive");
    Tensor work = x;
    std::vector<double> analytic;
    auto eval_full = [&](bool with_grad) -> std::pair<double, double> {
        Tape tape;
        Tensor leaf = tape.leaf(work);
        Tensor out = f(tape, leaf);
        if (!out.is_scalar())
            throw std::invalid_argument("finite_diff_check: objective must be scalar");
        if (with_grad) {
            tape.backward(out.node);
            auto g = tape.grad(leaf.node);
            analytic.assign(g.begin(), g.end());
        }
        return {out.value(), tape.kink_margin()};
    };
    eval_full(true);
    FdReport local;
    fd_check_storage([&] { return eval_full(false); },
                     {work.data.data(), work.data.size()},
                     {analytic.data(), analytic.size()}, h, local);
    if (report) *report = local;
    return local.max_rel_err;
}

}  // namespace trendcast
