#include <gtest/gtest.h>

#include <filesystem>

#include "trendcast/dataset_io.hpp"
#include "trendcast/series.hpp"
#include "trendcast/synth.hpp"

using namespace trendcast;

TEST(Popularity, BasicRatios) {
    TrendSeries s = compute_popularity({5, 0}, {10, 20});
    EXPECT_EQ(s.values, (std::vector<double>{0.5, 0.0}));
    EXPECT_TRUE(s.valid[0]);
    EXPECT_TRUE(s.valid[1]);
}

TEST(Popularity, ZeroTotalMarksInvalid) {
    TrendSeries s = compute_popularity({1, 0}, {2, 0});
    EXPECT_TRUE(s.valid[0]);
    EXPECT_FALSE(s.valid[1]);
}

TEST(Popularity, AllObservedGivesOne) {
    TrendSeries s = compute_popularity({3, 7}, {3, 7});
    EXPECT_EQ(s.values, (std::vector<double>{1.0, 1.0}));
}

TEST(Popularity, ElementAboveTotalIsDataError) {
    EXPECT_THROW(compute_popularity({5}, {4}), DataError);
}

namespace {
TrendSeries masked(std::vector<double> values, std::vector<bool> valid) {
    TrendSeries s;
    s.group_id = "g";
    s.element_id = "e";
    s.values = std::move(values);
    s.valid = std::move(valid);
    return s;
}
}  // namespace

TEST(Interpolate, MidpointEdgeAndLongGap) {
    EXPECT_EQ(interpolate_missing(masked({1, 0, 3}, {true, false, true})).values,
              (std::vector<double>{1, 2, 3}));
    EXPECT_EQ(interpolate_missing(masked({0, 2, 0}, {false, true, false})).values,
              (std::vector<double>{2, 2, 2}));
    EXPECT_EQ(interpolate_missing(masked({1, 0, 0, 4}, {true, false, false, true})).values,
              (std::vector<double>{1, 2, 3, 4}));
}

TEST(Interpolate, NoValidPointsIsUnusable) {
    EXPECT_THROW(interpolate_missing(masked({0, 0}, {false, false})), DataError);
    // mask is all-true afterwards
    TrendSeries out = interpolate_missing(masked({0, 2, 3, 0}, {false, true, true, false}));
    EXPECT_EQ(out.valid_count(), out.length());
}

TEST(MinMax, NormalizeAndRoundTrip) {
    std::vector<double> vals;
    for (int i = 0; i <= 10; ++i) vals.push_back(i);
    NormStats stats = fit_minmax(vals);
    EXPECT_DOUBLE_EQ(stats.normalize(5.0), 0.5);

    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const double x = rng.uniform(-3, 13);
        EXPECT_NEAR(stats.denormalize(stats.normalize(x)), x, 1e-12);
    }
}

TEST(MinMax, ConstantSeriesGuard) {
    NormStats stats = fit_minmax({4.0, 4.0, 4.0});
    EXPECT_DOUBLE_EQ(stats.normalize(4.0), 0.0);
    EXPECT_DOUBLE_EQ(stats.denormalize(0.0), 4.0);
}

namespace {
TrendSeries ramp_series(std::size_t n) {
    TrendSeries s;
    s.group_id = "g";
    s.element_id = "e";
    for (std::size_t t = 0; t < n; ++t) {
        s.values.push_back(static_cast<double>(t));
        s.valid.push_back(true);
    }
    return s;
}
}  // namespace

TEST(Windows, CountsAndBoundary) {
    EXPECT_EQ(make_windows(ramp_series(120), 48, 18, 1, 24).size(), 55u);
    EXPECT_EQ(make_windows(ramp_series(66), 48, 18, 1, 24).size(), 1u);
    EXPECT_TRUE(make_windows(ramp_series(65), 48, 18, 1, 24).empty());
}

TEST(Windows, PositionsFollowYearCycle) {
    auto ws = make_windows(ramp_series(80), 48, 18, 1, 24);
    const Sample& s = ws[2];
    EXPECT_EQ(s.start, 2u);
    for (std::size_t i = 0; i < s.history.size(); ++i)
        EXPECT_EQ(s.history_positions[i], (2 + i) % 24);
    for (std::size_t i = 0; i < s.future.size(); ++i)
        EXPECT_EQ(s.future_positions[i], (2 + 48 + i) % 24);
    EXPECT_DOUBLE_EQ(s.history[0], 2.0);
    EXPECT_DOUBLE_EQ(s.future[0], 50.0);
}

TEST(Windows, StrideSkipsOffsets) {
    auto ws = make_windows(ramp_series(120), 48, 18, 4, 24);
    ASSERT_EQ(ws.size(), 14u);  // offsets 0,4,...,52
    EXPECT_EQ(ws[1].start, 4u);
}

TEST(Split, HeldOutOddEvenAssignment) {
    auto ws = make_windows(ramp_series(57), 48, 2, 1, 24);  // 8 windows
    ASSERT_EQ(ws.size(), 8u);
    SeriesSplit split = split_train_eval(ws, 6);
    ASSERT_EQ(split.validation.size(), 3u);
    ASSERT_EQ(split.test.size(), 3u);
    EXPECT_EQ(split.validation[0].start, 2u);
    EXPECT_EQ(split.validation[1].start, 4u);
    EXPECT_EQ(split.validation[2].start, 6u);
    EXPECT_EQ(split.test[0].start, 3u);
    EXPECT_EQ(split.test[1].start, 5u);
    EXPECT_EQ(split.test[2].start, 7u);
    // training candidates {0,1}: window 1's future overlaps the first
    // held-out target range, so only window 0 survives the leak filter
    ASSERT_EQ(split.train.size(), 1u);
    EXPECT_EQ(split.train[0].start, 0u);
}

TEST(Split, SingleHoldoutGoesToTest) {
    auto ws = make_windows(ramp_series(68), 48, 18, 1, 24);  // 3 windows
    SeriesSplit split = split_train_eval(ws, 1);
    EXPECT_TRUE(split.validation.empty());
    ASSERT_EQ(split.test.size(), 1u);
    EXPECT_EQ(split.test[0].start, 2u);
}

TEST(Split, OverlapDropArithmetic) {
    // 55 windows, 6 held out, T'=18: the 17 training windows preceding the
    // first held-out target are dropped -> 55 - 6 - 17 = 32 remain
    auto ws = make_windows(ramp_series(120), 48, 18, 1, 24);
    SeriesSplit split = split_train_eval(ws, 6);
    EXPECT_EQ(split.train.size(), 32u);
    EXPECT_EQ(split.validation.size(), 3u);
    EXPECT_EQ(split.test.size(), 3u);
}

TEST(Split, TooFewWindowsIsError) {
    auto ws = make_windows(ramp_series(71), 48, 18, 1, 24);  // 6 windows
    EXPECT_THROW(split_train_eval(ws, 6), DataError);
}

TEST(Split, NeverLeaksProperty) {
    Rng rng(41);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t T = 2 + rng.uniform_index(12);
        const std::size_t Tp = 2 + rng.uniform_index(8);
        const std::size_t len = T + Tp + rng.uniform_index(30);
        const std::size_t k = 1 + rng.uniform_index(6);
        auto ws = make_windows(ramp_series(len), T, Tp, 1, 24);
        if (ws.size() < k + 1) continue;
        SeriesSplit split = split_train_eval(ws, k);
        std::vector<const Sample*> heldout;
        for (const auto& s : split.validation) heldout.push_back(&s);
        for (const auto& s : split.test) heldout.push_back(&s);
        for (const Sample& tr : split.train)
            for (const Sample* ev : heldout) {
                const bool overlap =
                    tr.start < ev->future_end() && ev->future_begin() < tr.future_end();
                EXPECT_FALSE(overlap)
                    << "train [" << tr.start << "," << tr.future_end() << ") vs eval target ["
                    << ev->future_begin() << "," << ev->future_end() << ")";
            }
    }
}

TEST(Synth, DefaultConfigCounts) {
    Dataset ds = synth_generate(default_synth_config(), 1);
    EXPECT_EQ(ds.elements.size(), 15u);
    EXPECT_EQ(ds.groups.size(), 6u);
    EXPECT_EQ(ds.series.size(), 90u);
    for (const auto& s : ds.series) {
        EXPECT_EQ(s.length(), 120u);
        EXPECT_EQ(s.valid_count(), 120u);
        for (double v : s.values) {
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Synth, NoiselessParentEqualsWeightedChildSum) {
    SynthConfig cfg = default_synth_config();
    cfg.noise_leaf = cfg.noise_parent = cfg.noise_coarse = 0.0;
    Dataset ds = synth_generate(cfg, 7);
    for (const auto& g : ds.groups) {
        for (const auto& cat : cfg.categories) {
            const TrendSeries* parent = ds.find_series(g.id, cat.id);
            ASSERT_NE(parent, nullptr);
            std::vector<double> mix(parent->length(), 0.0);
            for (const auto& ch : cat.children) {
                const TrendSeries* child = ds.find_series(g.id, ch.id);
                ASSERT_NE(child, nullptr);
                for (std::size_t t = 0; t < mix.size(); ++t)
                    mix[t] += ch.share * child->values[t];
            }
            for (std::size_t t = 0; t < mix.size(); ++t)
                EXPECT_NEAR(parent->values[t], mix[t], 1e-9);
        }
    }
}

TEST(Synth, DeterministicBytes) {
    SynthConfig cfg = default_synth_config();
    Dataset a = synth_generate(cfg, 99);
    Dataset b = synth_generate(cfg, 99);
    EXPECT_EQ(series_to_csv(a.series), series_to_csv(b.series));
    Dataset c = synth_generate(cfg, 100);
    EXPECT_NE(series_to_csv(a.series), series_to_csv(c.series));
}

TEST(Synth, BadSharesRejected) {
    SynthConfig cfg = default_synth_config();
    cfg.categories[0].children[0].share = 0.9;
    EXPECT_THROW(synth_generate(cfg, 1), ConfigError);
}

TEST(IngestFilter, DropsSparseSeries) {
    Dataset ds;
    ds.elements.push_back({"e", ElementKind::Category, std::nullopt});
    ds.groups.push_back({"g", "city", Gender::Female, std::nullopt});
    // 3 of 8 valid -> dropped; 5 of 8 valid -> kept and interpolated
    TrendSeries sparse = masked({1, 0, 0, 0, 2, 0, 0, 3}, {true, false, false, false, true,
                                                           false, false, true});
    sparse.element_id = "e";
    sparse.group_id = "g";
    TrendSeries dense =
        masked({1, 2, 0, 4, 5, 0, 7, 0}, {true, true, false, true, true, false, true, false});
    dense.element_id = "e2";
    dense.group_id = "g";
    ds.series = {sparse, dense};
    std::vector<std::string> dropped;
    EXPECT_EQ(prepare_series(ds, &dropped), 1u);
    ASSERT_EQ(ds.series.size(), 1u);
    EXPECT_EQ(ds.series[0].element_id, "e2");
    EXPECT_EQ(ds.series[0].valid_count(), 8u);
    ASSERT_EQ(dropped.size(), 1u);
    EXPECT_EQ(dropped[0], "g:e");
}

TEST(TrainingRegion, ExcludesHeldOutTargets) {
    Dataset ds;
    ds.series.push_back(ramp_series(120));
    // 55 windows, 6 held out; first held-out window starts at 49, so its
    // target range starts at 97
    auto vals = training_region_values(ds, 48, 18, 6);
    ASSERT_EQ(vals.size(), 97u);
    EXPECT_DOUBLE_EQ(vals.back(), 96.0);
}

TEST(DatasetIo, CsvRoundTrip) {
    Dataset ds = synth_generate(default_synth_config(), 3);
    const std::string csv = series_to_csv(ds.series);
    auto back = series_from_csv(csv);
    ASSERT_EQ(back.size(), ds.series.size());
    // series_from_csv sorts by (group, element); compare via lookup
    for (const auto& s : back) {
        const TrendSeries* orig = ds.find_series(s.group_id, s.element_id);
        ASSERT_NE(orig, nullptr);
        EXPECT_EQ(s.values, orig->values);
        EXPECT_EQ(s.valid, orig->valid);
    }
}

TEST(DatasetIo, InvalidStepsHaveEmptyValueField) {
    TrendSeries s = masked({1.5, 0, 2.5}, {true, false, true});
    const std::string csv = series_to_csv({s});
    EXPECT_NE(csv.find("g,e,1,,0"), std::string::npos) << csv;
    auto back = series_from_csv(csv);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_FALSE(back[0].valid[1]);
}

TEST(DatasetIo, CountsCsv) {
    const std::string csv =
        "group_id,element_id,t,element_count,total_count\n"
        "g,e,0,5,10\n"
        "g,e,1,0,20\n"
        "g,e,2,0,0\n";
    auto series = series_from_counts_csv(csv);
    ASSERT_EQ(series.size(), 1u);
    EXPECT_EQ(series[0].values[0], 0.5);
    EXPECT_EQ(series[0].values[1], 0.0);
    EXPECT_FALSE(series[0].valid[2]);
}

TEST(DatasetIo, SaveLoadDirectory) {
    Dataset ds = synth_generate(default_synth_config(), 17);
    const auto dir = std::filesystem::temp_directory_path() / "tc_io_test";
    std::filesystem::remove_all(dir);
    save_dataset(ds, dir);
    Dataset back = load_dataset(dir);
    EXPECT_EQ(back.step_period, ds.step_period);
    EXPECT_EQ(back.elements.size(), ds.elements.size());
    EXPECT_EQ(back.groups.size(), ds.groups.size());
    ASSERT_EQ(back.series.size(), ds.series.size());
    for (const auto& s : back.series) {
        const TrendSeries* orig = ds.find_series(s.group_id, s.element_id);
        ASSERT_NE(orig, nullptr);
        EXPECT_EQ(s.values, orig->values);
    }
    std::filesystem::remove_all(dir);
}

TEST(DatasetIo, SynthConfigJsonRoundTrip) {
    SynthConfig cfg = default_synth_config();
    cfg.child_variation = 0.25;
    cfg.noise_leaf = 0.02;
    SynthConfig back = synth_config_from_json(synth_config_to_json(cfg));
    EXPECT_EQ(back.categories.size(), cfg.categories.size());
    EXPECT_DOUBLE_EQ(back.child_variation, 0.25);
    EXPECT_DOUBLE_EQ(back.noise_leaf, 0.02);
    Dataset a = synth_generate(cfg, 4);
    Dataset b = synth_generate(back, 4);
    EXPECT_EQ(series_to_csv(a.series), series_to_csv(b.series));
}
