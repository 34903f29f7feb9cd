#include <gtest/gtest.h>

#include "trendcast/baselines.hpp"
#include "trendcast/metrics.hpp"

using namespace trendcast;

namespace {

std::vector<double> ar1_process(double coeff, double noise_sigma, std::size_t n,
                                std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> y(n);
    y[0] = 0.1;
    for (std::size_t t = 1; t < n; ++t)
        y[t] = coeff * y[t - 1] + rng.normal(0.0, noise_sigma);
    return y;
}

}  // namespace

TEST(MeanLast, ConstantVectors) {
    std::vector<double> h = {1, 2, 3};
    EXPECT_EQ(forecast_mean(h, 2), (std::vector<double>{2, 2}));
    EXPECT_EQ(forecast_last(h, 2), (std::vector<double>{3, 3}));
    EXPECT_EQ(forecast_mean({0.1, 0.3}, 1)[0], 0.2);
    std::vector<double> c = {0.7, 0.7, 0.7};
    auto cm = forecast_mean(c, 3);
    auto cl = forecast_last(c, 3);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(cm[i], cl[i], 1e-15);
    EXPECT_THROW(forecast_mean({}, 1), DataError);
}

TEST(Ar, RecoversCoefficientOfSeededProcess) {
    auto y = ar1_process(0.8, 0.01, 200, 42);
    BaselineFit fit = fit_ar(y, 1);
    EXPECT_NEAR(fit.coefficients[1], 0.8, 0.05);
}

TEST(Ar, ConstantSeriesForecastsConstant) {
    std::vector<double> c(50, 0.42);
    BaselineFit fit = fit_ar(c, 4);
    auto fc = forecast_ar(fit, c, 6);
    for (double v : fc) EXPECT_NEAR(v, 0.42, 1e-6);
}

TEST(Ar, OrderZeroEqualsMean) {
    std::vector<double> h = {0.1, 0.5, 0.3, 0.7};
    Dataset ds;
    Sample s;
    s.history = h;
    s.future.assign(3, 0.0);
    BaselineOptions opts;
    opts.order = 0;
    EXPECT_EQ(baseline_forecast(BaselineMethod::Ar, s, ds, opts), forecast_mean(h, 3));
}

TEST(Var, SingleSeriesMatchesArExactly) {
    auto y = ar1_process(0.6, 0.02, 120, 7);
    BaselineFit ar = fit_ar(y, 3);
    VarFit var = fit_var({y}, 3);
    auto fa = forecast_ar(ar, y, 8);
    auto fv = forecast_var(var, {y}, 8)[0];
    for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_NEAR(fa[i], fv[i], 1e-9);
}

TEST(Var, DiagonalProcessHasSmallCrossTerms) {
    auto a = ar1_process(0.7, 0.02, 2000, 11);
    auto b = ar1_process(0.5, 0.02, 2000, 12);
    VarFit fit = fit_var({a, b}, 1);
    ASSERT_FALSE(fit.fell_back_to_ar);
    // equations: [intercept, a_lag, b_lag]
    EXPECT_NEAR(fit.equations[0][2], 0.0, 0.05);  // b -> a cross term
    EXPECT_NEAR(fit.equations[1][1], 0.0, 0.05);  // a -> b cross term
    EXPECT_NEAR(fit.equations[0][1], 0.7, 0.05);
    EXPECT_NEAR(fit.equations[1][2], 0.5, 0.05);
}

TEST(Var, RecoversCrossCoupling) {
    Rng rng(13);
    std::size_t n = 3000;
    std::vector<double> x(n), y(n);
    x[0] = 0.2;
    y[0] = 0.1;
    for (std::size_t t = 1; t < n; ++t) {
        x[t] = 0.6 * x[t - 1] + rng.normal(0, 0.02);
        y[t] = 0.5 * x[t - 1] + rng.normal(0, 0.02);
    }
    VarFit fit = fit_var({x, y}, 1);
    EXPECT_NEAR(fit.equations[1][1], 0.5, 0.05);  // x -> y coupling
}

TEST(Var, UnderdeterminedFallsBackToIndependentAr) {
    std::vector<std::vector<double>> many;
    auto base = ar1_process(0.5, 0.05, 12, 3);
    for (int i = 0; i < 6; ++i) many.push_back(base);
    VarFit fit = fit_var(many, 4);  // 8 rows < 6*4+1 regressors
    EXPECT_TRUE(fit.fell_back_to_ar);
    BaselineFit ar = fit_ar(base, 4);
    auto fv = forecast_var(fit, many, 4)[0];
    auto fa = forecast_ar(ar, base, 4);
    for (std::size_t i = 0; i < fa.size(); ++i) EXPECT_NEAR(fv[i], fa[i], 1e-12);
}

TEST(Es, AlphaOneEqualsLastExactly) {
    auto y = ar1_process(0.9, 0.05, 60, 5);
    auto es = forecast_es(y, 4, {1.0});
    auto last = forecast_last(y, 4);
    EXPECT_EQ(es, last);
}

TEST(Es, ConstantSeriesLevelIsConstant) {
    std::vector<double> c(30, 0.55);
    double alpha = 0.0;
    auto es = forecast_es(c, 3, BaselineOptions::default_alpha_grid(), &alpha);
    for (double v : es) EXPECT_DOUBLE_EQ(v, 0.55);
}

TEST(Es, GridPicksAlphaOneOnRandomWalkLikeSeries) {
    // near-random-walk: last value is the best one-step predictor, so the
    // grid should select alpha = 1 and ES must equal Last
    Rng rng(19);
    std::vector<double> y(200);
    y[0] = 0.0;
    for (std::size_t t = 1; t < y.size(); ++t) y[t] = y[t - 1] + rng.normal(0, 0.05);
    double alpha = 0.0;
    auto es = forecast_es(y, 5, BaselineOptions::default_alpha_grid(), &alpha);
    EXPECT_DOUBLE_EQ(alpha, 1.0);
    EXPECT_EQ(es, forecast_last(y, 5));
}

TEST(Curves, LinearRecoversNoiselessRamp) {
    std::vector<double> y;
    for (int t = 0; t < 100; ++t) y.push_back(0.3 + 0.01 * t);
    BaselineFit fit = fit_curve(CurveKind::Linear, y, 0, 24);
    EXPECT_NEAR(fit.coefficients[0], 0.3, 1e-9);
    EXPECT_NEAR(fit.coefficients[1], 0.01, 1e-9);
    auto fc = forecast_curve(CurveKind::Linear, fit, y.size(), 0, 24, 3);
    EXPECT_NEAR(fc[0], 0.3 + 0.01 * 100, 1e-9);
}

TEST(Curves, CyclicFitsPureAnnualSinusoid) {
    const std::size_t P = 24;
    std::vector<double> y;
    for (std::size_t t = 0; t < 96; ++t)
        y.push_back(0.4 + 0.1 * std::sin(2 * M_PI * static_cast<double>(t % P) / P + 0.7));
    BaselineFit fit = fit_curve(CurveKind::Cyclic, y, 0, P);
    // residual on the fit window
    auto recon = forecast_curve(CurveKind::Cyclic, fit, 0, 0, P, y.size());
    for (std::size_t t = 0; t < y.size(); ++t) EXPECT_NEAR(recon[t], y[t], 1e-6);

    BaselineFit geo = fit_curve(CurveKind::LinearCyclic, y, 0, P);
    EXPECT_NEAR(geo.coefficients[1], 0.0, 1e-9);  // no trend in a pure sinusoid
}

TEST(Curves, FlatSeriesEmitsConstant) {
    std::vector<double> c(60, 0.33);
    for (CurveKind k : {CurveKind::Linear, CurveKind::Cyclic, CurveKind::LinearCyclic}) {
        BaselineFit fit = fit_curve(k, c, 3, 24);
        auto fc = forecast_curve(k, fit, c.size(), 3, 24, 4);
        for (double v : fc) EXPECT_NEAR(v, 0.33, 1e-9);
    }
}

TEST(Curves, CyclicNeedsOneFullPeriod) {
    std::vector<double> shorty(20, 0.1);
    EXPECT_THROW(fit_curve(CurveKind::Cyclic, shorty, 0, 24), DataError);
    std::vector<std::string> warnings;
    std::vector<double> one_period(30, 0.1);
    fit_curve(CurveKind::Cyclic, one_period, 0, 24, &warnings);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(Invariants, AffineEquivariantMethodsCommuteWithNormalization) {
    Rng rng(29);
    std::vector<double> raw;
    for (int t = 0; t < 96; ++t)
        raw.push_back(3.0 + 0.05 * t + 0.8 * std::sin(2 * M_PI * t / 24.0) +
                      rng.normal(0, 0.1));
    NormStats stats = fit_minmax(raw);
    std::vector<double> norm;
    for (double v : raw) norm.push_back(stats.normalize(v));

    auto check = [&](const std::vector<double>& on_raw, const std::vector<double>& on_norm,
                     const char* name) {
        ASSERT_EQ(on_raw.size(), on_norm.size());
        for (std::size_t i = 0; i < on_raw.size(); ++i)
            EXPECT_NEAR(on_raw[i], stats.denormalize(on_norm[i]), 1e-9) << name;
    };
    check(forecast_mean(raw, 5), forecast_mean(norm, 5), "mean");
    check(forecast_last(raw, 5), forecast_last(norm, 5), "last");
    check(forecast_ar(fit_ar(raw, 4), raw, 5), forecast_ar(fit_ar(norm, 4), norm, 5), "ar");
    for (CurveKind k : {CurveKind::Linear, CurveKind::Cyclic, CurveKind::LinearCyclic}) {
        check(forecast_curve(k, fit_curve(k, raw, 0, 24), raw.size(), 0, 24, 5),
              forecast_curve(k, fit_curve(k, norm, 0, 24), norm.size(), 0, 24, 5), "curve");
    }
}

TEST(Invariants, FitsAreDeterministic) {
    auto y = ar1_process(0.75, 0.03, 150, 31);
    BaselineFit a = fit_ar(y, 4);
    BaselineFit b = fit_ar(y, 4);
    EXPECT_EQ(a.coefficients, b.coefficients);
    auto e1 = forecast_es(y, 3, BaselineOptions::default_alpha_grid());
    auto e2 = forecast_es(y, 3, BaselineOptions::default_alpha_grid());
    EXPECT_EQ(e1, e2);
}

TEST(Metrics, ValuesAndPercentScale) {
    EXPECT_DOUBLE_EQ(metric_mae({1, 2}, {1, 2}), 0.0);
    EXPECT_DOUBLE_EQ(metric_mape({1, 2}, {1, 2}), 0.0);
    EXPECT_DOUBLE_EQ(metric_mae({2}, {4}), 2.0);
    EXPECT_DOUBLE_EQ(metric_mape({2}, {4}), 50.0);
    EXPECT_THROW(metric_mae({}, {}), DataError);
    EXPECT_THROW(metric_mae({1}, {1, 2}), std::invalid_argument);
}

TEST(Metrics, NearZeroTargetsExcludedAndCounted) {
    std::size_t excluded = 0;
    const double m = metric_mape({1.0, 5.0}, {0.0, 4.0}, &excluded);
    EXPECT_EQ(excluded, 1u);
    EXPECT_DOUBLE_EQ(m, 25.0);
}

TEST(Metrics, AccumulatorIsOrderInvariant) {
    MetricAccumulator a, b;
    a.add("s1", {1, 2}, {2, 2});
    a.add("s2", {3}, {6});
    b.add("s2", {3}, {6});
    b.add("s1", {1, 2}, {2, 2});
    EXPECT_DOUBLE_EQ(a.mae(), b.mae());
    EXPECT_DOUBLE_EQ(a.mape_percent(), b.mape_percent());
    EXPECT_DOUBLE_EQ(a.mae(), (1.0 + 0.0 + 3.0) / 3.0);
}
