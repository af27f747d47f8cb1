#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "skfcpd/errors.hpp"
#include "skfcpd/pipeline.hpp"

using namespace skfcpd;

namespace {

SeriesTable parse(const std::string& text) {
    std::istringstream in(text);
    return parse_series_csv(in);
}

EntitySeries flat_then_shift(std::uint64_t seed, bool shift, std::size_t n = 150, std::size_t at = 120) {
    std::mt19937_64 rng(seed);
    std::vector<double> t;
    for (std::size_t k = 1; k <= n; ++k) t.push_back(static_cast<double>(k));
    auto z = oracle::gp_draw(rng, oracle::Family::Exp, 12.0, 0.1, t, -3.0, 0.3);
    EntitySeries e;
    e.id = "x";
    e.times = t;
    for (std::size_t k = 0; k < n; ++k) {
        const bool on = shift && k + 1 >= at && k + 1 < at + 10;
        const double y = z[k] + (on ? 2.0 : 0.0);
        e.values.push_back(1.0 / (1.0 + std::exp(-y)));
        e.labels.push_back(on ? 1 : 0);
    }
    return e;
}

}  // namespace

TEST(Logit, Values) {
    EXPECT_DOUBLE_EQ(logit(0.5), 0.0);
    EXPECT_NEAR(logit(0.9), 2.1972246, 1e-7);
    EXPECT_THROW(logit(1.5), DataError);
}

TEST(Logit, ClampsToObservedExtremes) {
    const std::vector<double> p{0.2, 1.0, 0.97, 0.0, 0.05, std::nan("")};
    const auto z = logit_transform(p);
    EXPECT_DOUBLE_EQ(z[1], logit(0.97));
    EXPECT_DOUBLE_EQ(z[3], logit(0.05));
    EXPECT_TRUE(std::isnan(z[5]));
    EXPECT_THROW(logit_transform(std::vector<double>{0.0, 1.0}), DataError);
    EXPECT_THROW(logit_transform(std::vector<double>{0.5, -0.1}), DataError);
}

TEST(SeriesCsv, RoundTripIsIdentity) {
    const std::string text =
        "entity,time,value,label\n"
        "a,2021-03-01,0.125,0\n"
        "a,2021-03-02,NA,1\n"
        "b,2021-02-28,0.3333333333333333,0\n";
    const SeriesTable t1 = parse(text);
    EXPECT_TRUE(t1.iso_dates);
    EXPECT_TRUE(t1.has_labels);
    ASSERT_EQ(t1.records.size(), 3u);
    EXPECT_TRUE(std::isnan(t1.records[1].value));
    EXPECT_DOUBLE_EQ(t1.records[1].time - t1.records[0].time, 1.0);
    EXPECT_DOUBLE_EQ(t1.records[0].time - t1.records[2].time, 1.0);
    const std::string out = serialize_series_csv(t1);
    EXPECT_EQ(out, text);
    EXPECT_EQ(serialize_series_csv(parse(out)), out);

    std::mt19937_64 rng(1);
    std::normal_distribution<double> d(0.0, 1e3);
    SeriesTable num;
    for (int k = 0; k < 200; ++k) num.records.push_back({"e" + std::to_string(k % 3), d(rng), d(rng), std::nullopt});
    const SeriesTable back = parse(serialize_series_csv(num));
    ASSERT_EQ(back.records.size(), num.records.size());
    for (std::size_t k = 0; k < back.records.size(); ++k) {
        EXPECT_EQ(back.records[k].time, num.records[k].time);
        EXPECT_EQ(back.records[k].value, num.records[k].value);
    }
}

TEST(SeriesCsv, MalformedInputIsADataError) {
    EXPECT_THROW(parse("id,time,value\n"), DataError);
    EXPECT_THROW(parse("entity,time,value\na,1\n"), DataError);
    EXPECT_THROW(parse("entity,time,value\na,x,1\n"), DataError);
    EXPECT_THROW(parse("entity,time,value\na,1,0.5\na,2021-01-01,0.5\n"), DataError);
    EXPECT_THROW(parse("entity,time,value,label\na,1,0.5,2\n"), DataError);
    EXPECT_THROW(parse("entity,time,value\na,2021-02-30,0.5\n"), DataError);
    EXPECT_THROW(group_by_entity(parse("entity,time,value\na,1,0.5\na,1,0.6\n")), DataError);
}

TEST(SeriesCsv, GroupsAndSortsByEntity) {
    const auto g = group_by_entity(parse("entity,time,value\nb,2,1\na,3,2\na,1,3\n"));
    ASSERT_EQ(g.size(), 2u);
    EXPECT_EQ(g[0].id, "a");
    EXPECT_EQ(g[0].times, (std::vector<double>{1, 3}));
    EXPECT_EQ(g[0].values, (std::vector<double>{3, 2}));
}

TEST(HazardCsv, ParsesAndAligns) {
    std::istringstream in("time,hazard\n2021-01-02,0.2\n2021-01-01,0.1\n");
    const HazardFunction h = parse_hazard_csv(in);
    EXPECT_DOUBLE_EQ(h.at(*parse_iso_date("2021-01-01")), 0.1);
    EXPECT_DOUBLE_EQ(h.at(*parse_iso_date("2021-01-02")), 0.2);
    EXPECT_THROW(h.at(*parse_iso_date("2021-01-03")), InvalidInput);
    std::istringstream bad("time,hazard\n1,1.5\n");
    EXPECT_THROW(parse_hazard_csv(bad), DataError);
}

TEST(IsoDates, RoundTrip) {
    EXPECT_EQ(*parse_iso_date("1970-01-01"), 0.0);
    EXPECT_EQ(format_iso_date(*parse_iso_date("2024-02-29")), "2024-02-29");
    EXPECT_FALSE(parse_iso_date("2023-02-29").has_value());
    EXPECT_FALSE(parse_iso_date("12.5").has_value());
}

TEST(Screening, ConstantSegmentsFail) {
    const std::vector<double> t{1, 2, 3, 4, 5, 6};
    const std::vector<double> y(6, 2.0);
    const auto r = screening_test(std::span(t).first(3), std::span(y).first(3), std::span(t).last(3),
                                  std::span(y).last(3), {KernelFamily::Matern12, 5.0, 0.1}, 0.05);
    EXPECT_FALSE(r.pass);
    EXPECT_EQ(r.statistic, 0.0);
    EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Screening, ShortSegmentFailsWithDiagnostic) {
    const std::vector<double> t{1, 2, 3};
    const std::vector<double> y{0.0, 5.0, 6.0};
    const auto r = screening_test(std::span(t).first(1), std::span(y).first(1), std::span(t).last(2),
                                  std::span(y).last(2), {KernelFamily::Matern12, 5.0, 0.1}, 0.05);
    EXPECT_FALSE(r.pass);
    EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Screening, SizePowerAndDirection) {
    const KernelSpec k{KernelFamily::Matern12, 4.0, 0.2};
    std::vector<double> t;
    for (int d = 1; d <= 40; ++d) t.push_back(d);
    int null_rejections = 0, power = 0, decreasing = 0;
    constexpr int kReps = 500;
    for (int r = 0; r < kReps; ++r) {
        std::mt19937_64 rng(derive_seed(55, 0, static_cast<std::uint64_t>(r)));
        // One GP path split in two: the segments are correlated across the split.
        const auto path = oracle::gp_draw(rng, oracle::Family::Exp, 4.0, 0.2, t);
        const auto a = oracle::slice(path, 0, 25);
        const auto b = oracle::slice(path, 25, 15);
        const auto pre_t = std::span(t).first(25);
        const auto post_t = std::span(t).last(15);
        null_rejections += screening_test(pre_t, a, post_t, b, k, 0.05).pass;
        // Scale: pooled sd of the null fit.
        const double sd = std::sqrt(1.2);
        std::vector<double> up = b, down = b;
        for (double& v : up) v += 5.0 * sd;
        for (double& v : down) v -= 5.0 * sd;
        power += screening_test(pre_t, a, post_t, up, k, 0.05).pass;
        decreasing += screening_test(pre_t, a, post_t, down, k, 0.05).pass;
    }
    EXPECT_GE(null_rejections, 0.03 * kReps - 10);
    EXPECT_LE(null_rejections, 0.07 * kReps + 10);
    EXPECT_GE(power, 0.95 * kReps);
    EXPECT_EQ(decreasing, 0);
}

TEST(Pipeline, LevelShiftIsDetectedAndScreened) {
    int hits = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        const EntitySeries e = flat_then_shift(derive_seed(90, 0, r), true);
        PipelineConfig c;
        c.training = 100;
        c.kernel = KernelSpec{KernelFamily::Matern12, 12.0, 0.1};
        c.hazard = 0.001;
        const auto res = run_pipeline(std::vector<EntitySeries>{e}, c);
        ASSERT_EQ(res.entities.size(), 1u);
        for (const auto& d : res.entities[0].detections) {
            if (d.screened && d.time >= 120.0 && d.time <= 124.0) {
                ++hits;
                break;
            }
        }
    }
    EXPECT_GE(hits, 18);
}

TEST(Pipeline, FlatEntityRarelyScreensAtCalibratedHazard) {
    std::vector<EntitySeries> flat;
    for (std::uint64_t r = 0; r < 100; ++r) {
        auto e = flat_then_shift(derive_seed(91, 0, r), false);
        e.id = "f" + std::to_string(1000 + r);
        flat.push_back(std::move(e));
    }
    PipelineConfig c;
    c.training = 100;
    c.kernel = KernelSpec{KernelFamily::Matern12, 12.0, 0.1};
    c.target_alarm_rate = 0.004;
    const auto res = run_pipeline(flat, c);
    int quiet = 0;
    for (const auto& e : res.entities) quiet += e.windows.empty();
    EXPECT_GE(quiet, 95);
}

TEST(Pipeline, WindowsTraceToScreenedDetections) {
    SyntheticCohortConfig sc;
    sc.entities = 40;
    sc.positive_fraction = 0.25;
    const auto cohort = synthetic_cohort(sc);
    PipelineConfig c;
    c.training = sc.training;
    c.target_alarm_rate = 0.004;
    const auto res = run_pipeline(cohort, c);
    ASSERT_TRUE(res.counts.has_value());
    for (const auto& e : res.entities) {
        std::size_t screened = 0;
        for (const auto& d : e.detections) screened += d.screened;
        ASSERT_EQ(screened, e.windows.size());
        std::size_t w = 0;
        for (const auto& d : e.detections) {
            if (!d.screened) continue;
            EXPECT_EQ(e.windows[w].start, d.time);
            EXPECT_EQ(e.windows[w].end - e.windows[w].start, 7.0);
            ++w;
        }
    }
}

TEST(Pipeline, DeterministicJson) {
    SyntheticCohortConfig sc;
    sc.entities = 30;
    sc.seed = 4;
    const auto cohort = synthetic_cohort(sc);
    PipelineConfig c;
    c.training = sc.training;
    const auto a = pipeline_json(run_pipeline(cohort, c), c, false);
    const auto b = pipeline_json(run_pipeline(synthetic_cohort(sc), c), c, false);
    EXPECT_EQ(a, b);
    EXPECT_LT(a.find("\"config\""), a.find("\"entities\""));
    EXPECT_LT(a.find("\"entities\""), a.find("\"metrics\""));
}

TEST(Pipeline, ShortEntitiesAreSkippedWithWarning) {
    auto e = flat_then_shift(1, false, 150);
    EntitySeries tiny = e;
    tiny.id = "tiny";
    tiny.times.resize(102);
    tiny.values.resize(102);
    tiny.labels.resize(102);
    PipelineConfig c;
    c.training = 100;
    c.kernel = KernelSpec{KernelFamily::Matern12, 12.0, 0.1};
    const auto res = run_pipeline(std::vector<EntitySeries>{e, tiny}, c);
    EXPECT_EQ(res.entities.size(), 1u);
    ASSERT_EQ(res.warnings.size(), 1u);
    EXPECT_NE(res.warnings[0].find("tiny"), std::string::npos);
}

TEST(Pipeline, MisalignedHazardSeriesIsRejected) {
    const auto e = flat_then_shift(2, false, 120, 200);
    PipelineConfig c;
    c.training = 100;
    c.kernel = KernelSpec{KernelFamily::Matern12, 12.0, 0.1};
    c.hazard_series = HazardFunction::series({1.0, 2.0}, {0.01, 0.01});
    EXPECT_THROW(run_pipeline(std::vector<EntitySeries>{e}, c), InvalidInput);
}

TEST(ThresholdBaseline, BestThresholdIsAtLeastAsGoodAsAnyCandidate) {
    SyntheticCohortConfig sc;
    sc.entities = 40;
    sc.positive_fraction = 0.25;
    PipelineConfig c;
    const auto z = transform_entities(synthetic_cohort(sc), c);
    const auto best = best_threshold_classifier(z, sc.training, c.window);
    for (double thr : {-4.0, -2.0, -1.0, 0.0}) {
        EXPECT_GE(best.counts.f1(), evaluate_threshold(z, sc.training, thr, c.window).counts.f1());
    }
}
