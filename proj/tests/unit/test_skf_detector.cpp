#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "skfcpd/errors.hpp"
#include "skfcpd/skf_detector.hpp"
#include "skfcpd/temporal_model.hpp"
#include "skfcpd/whitener.hpp"

using namespace skfcpd;

namespace {

KernelFamily lib(oracle::Family f) { return f == oracle::Family::Exp ? KernelFamily::Matern12 : KernelFamily::Matern52; }

double predictive(const KernelSpec& k, const std::vector<double>& t, const std::vector<double>& y) {
    const std::size_t n = y.size();
    const DlmSystem prefix = build_dlm(k, TimeGrid(std::vector<double>(t.begin(), t.end() - 1)));
    const SegmentAccumulator before = whiten(prefix, std::span(y).first(n - 1));
    SegmentAccumulator after = before;
    advance(after, transition(k, t[n - 1] - t[n - 2]), y.back());
    return predictive_log_density(before, after);
}

std::vector<double> centered(std::vector<double> v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double& x : v) x -= m;
    return v;
}

}  // namespace

TEST(SkfPredictive, MatchesDenseMarginalRatio) {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> len(2, 60);
    for (int c = 0; c < 30; ++c) {
        const auto f = c % 2 ? oracle::Family::M52 : oracle::Family::Exp;
        const std::size_t n = c < 4 ? 2 : len(rng);
        const auto t = oracle::random_times(rng, n, 0.2, 2.0);
        const auto y = oracle::gp_draw(rng, f, 3.0, 0.1, t, 1.0, 1.3);
        const double ref = oracle::integrated_log_marginal(f, 3.0, 0.1, t, y) -
                           oracle::integrated_log_marginal(f, 3.0, 0.1, oracle::slice(t, 0, n - 1), oracle::slice(y, 0, n - 1));
        EXPECT_NEAR(predictive({lib(f), 3.0, 0.1}, t, y), ref, 1e-6) << "n' = " << n;
    }
}

TEST(SkfPredictive, TrialOverloadAgrees) {
    const KernelSpec k{KernelFamily::Matern12, 12.0, 0.1};
    const std::vector<double> t{1, 2, 3, 4, 5};
    const std::vector<double> y{0.3, -0.1, 0.4, 1.2, 0.9};
    const SegmentAccumulator before = whiten(build_dlm(k, TimeGrid({1, 2, 3, 4})), std::span(y).first(4));
    EXPECT_DOUBLE_EQ(predictive_log_density(before, transition(k, 1.0), y.back()), predictive(k, t, y));
}

TEST(SkfPredictive, RepeatedPairIsNeutral) {
    EXPECT_EQ(predictive({KernelFamily::Matern12, 12.0, 0.1}, {1.0, 2.0}, {0.7, 0.7}), 0.0);
}

TEST(SkfPredictive, LocationInvariantFromThreePoints) {
    const KernelSpec k{KernelFamily::Matern52, 4.0, 0.1};
    const std::vector<double> t{0.0, 1.0, 2.5, 3.0, 4.2, 5.0};
    std::vector<double> y{0.2, -0.4, 0.9, 0.1, 1.5, 0.3};
    const double base = predictive(k, t, y);
    for (double& v : y) v += 25.0;
    EXPECT_NEAR(predictive(k, t, y), base, 1e-9);
}

TEST(SkfPredictive, NewSegmentDensityIsConstant) {
    EXPECT_EQ(new_segment_log_density(-3.0), 0.0);
    EXPECT_EQ(new_segment_log_density(-3.0), new_segment_log_density(1e6));
}

TEST(SkfDetector, RecursionMatchesBruteForce) {
    std::mt19937_64 rng(202);
    for (int c = 0; c < 6; ++c) {
        const auto f = c % 2 ? oracle::Family::M52 : oracle::Family::Exp;
        const std::size_t n = 12 + 4 * static_cast<std::size_t>(c);
        const auto t = oracle::random_times(rng, n, 0.5, 1.5);
        auto y = oracle::gp_draw(rng, f, 2.0, 0.2, t);
        for (std::size_t k = n / 2; k < n; ++k) y[k] += 2.0;
        std::uniform_real_distribution<double> h(0.01, 0.2);
        std::vector<double> hz(n);
        for (double& v : hz) v = h(rng);

        DetectorConfig cfg;
        cfg.kernel = {lib(f), 2.0, 0.2};
        cfg.hazard = HazardFunction::series(t, hz);
        cfg.truncate_at_detection = false;
        SkfDetector det(cfg);
        for (std::size_t k = 0; k < n; ++k) det.step(t[k], y[k]);
        const auto post = det.posterior();
        const auto ref = oracle::brute_force_log_joint(f, 2.0, 0.2, t, y, hz);
        ASSERT_EQ(post.log_joint.size(), n);
        const auto a = centered(post.log_joint);
        const auto b = centered(ref);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-6) << "candidate " << i + 1;
        EXPECT_NEAR(det.log_evidence(), oracle::log_sum_exp(ref), 1e-6);
    }
}

TEST(SkfDetector, WeightsAreNormalizedAtEveryStep) {
    std::mt19937_64 rng(5);
    const auto y = oracle::normals(rng, 80);
    DetectorConfig cfg;
    cfg.kernel = {KernelFamily::Matern12, 5.0, 0.5};
    SkfDetector det(cfg);
    for (std::size_t k = 0; k < y.size(); ++k) {
        det.step(static_cast<double>(k + 1), y[k]);
        const auto p = det.posterior();
        EXPECT_NEAR(std::accumulate(p.weights.begin(), p.weights.end(), 0.0), 1.0, 1e-12);
    }
}

TEST(SkfDetector, ConstantSeriesNeverMoves) {
    DetectorConfig cfg;
    cfg.kernel = {KernelFamily::Matern52, 4.0, 0.1};
    cfg.hazard = HazardFunction::constant(1.0 / 200.0);
    SkfDetector det(cfg);
    for (int k = 1; k <= 100; ++k) {
        EXPECT_FALSE(det.step(k, 0.0).has_value());
        EXPECT_EQ(det.map_index(), 1u);
    }
}

TEST(SkfDetector, SingleObservationCannotDetect) {
    SkfDetector det(DetectorConfig{});
    EXPECT_FALSE(det.step(1.0, 5.0).has_value());
    EXPECT_EQ(det.map_index(), 1u);
}

TEST(SkfDetector, LargeMeanShiftIsLocatedQuickly) {
    Scenario sc;
    sc.pre = {0.0, 1.0, {KernelFamily::Matern52, 4.0, 0.1}};
    sc.post = {8.0, 1.0, sc.pre.kernel};
    sc.changepoints = {50};
    sc.grid = TimeGrid::regular(100);
    int hits = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto sim = simulate_scenario(sc, derive_seed(77, 0, r));
        DetectorConfig cfg;
        cfg.kernel = sc.pre.kernel;
        SkfDetector det(cfg);
        bool hit = false;
        for (std::size_t k = 0; k < 54; ++k) {
            det.step(sc.grid[k], sim.values[k]);
            if (k + 1 >= 50 && det.map_index() + 3 >= 50 && det.map_index() <= 53) hit = true;
        }
        hits += hit;
    }
    EXPECT_GE(hits, 95);
}

TEST(SkfDetector, FourMeanShiftsAreAllFound) {
    Scenario sc;
    sc.pre = {0.0, 1.0, {KernelFamily::Matern52, 4.0, 0.1}};
    sc.post = {8.0, 1.0, sc.pre.kernel};
    sc.changepoints = {33, 66, 98, 130};
    sc.grid = TimeGrid::regular(150);
    int good = 0;
    for (std::uint64_t r = 0; r < 100; ++r) {
        const auto sim = simulate_scenario(sc, derive_seed(78, 0, r));
        DetectorConfig cfg;
        cfg.kernel = sc.pre.kernel;
        SkfDetector det(cfg);
        const auto res = run(det, sc.grid.times(), sim.values);
        bool all = true;
        for (std::size_t cp : sc.changepoints) {
            all = all && std::any_of(res.changepoints.begin(), res.changepoints.end(), [&](std::size_t d) {
                      return d + 5 >= cp && d <= cp + 5;
                  });
        }
        good += all;
    }
    EXPECT_GE(good, 90);
}

TEST(SkfDetector, TruncationDropsOlderCandidates) {
    std::vector<double> y(40, 0.0);
    std::mt19937_64 rng(8);
    const auto noise = oracle::normals(rng, 40, 0.0, 0.3);
    for (std::size_t k = 0; k < 40; ++k) y[k] = noise[k] + (k >= 20 ? 10.0 : 0.0);
    DetectorConfig cfg;
    cfg.kernel = {KernelFamily::Matern12, 3.0, 0.1};
    SkfDetector det(cfg);
    std::optional<DetectionEvent> last;
    for (std::size_t k = 0; k < 40; ++k) {
        if (auto ev = det.step(static_cast<double>(k + 1), y[k])) last = ev;
    }
    ASSERT_TRUE(last.has_value());
    EXPECT_EQ(det.posterior().candidates.front(), det.truncation_index());
    EXPECT_EQ(det.truncation_index(), last->changepoint);
    EXPECT_LT(det.live_candidates(), 40u);
}

TEST(SkfDetector, MissingObservationsAndHazardAlignment) {
    DetectorConfig cfg;
    cfg.kernel = {KernelFamily::Matern12, 3.0, 0.1};
    cfg.hazard = HazardFunction::series({1.0, 2.0, 3.0}, {0.1, 0.1, 0.1});
    SkfDetector det(cfg);
    det.step(1.0, 0.0);
    det.step(2.0, std::numeric_limits<double>::quiet_NaN());
    det.step(3.0, 0.5);
    EXPECT_EQ(det.posterior().candidates.size(), 2u);
    EXPECT_THROW(det.step(4.0, 0.1), InvalidInput);

    SkfDetector ordered(DetectorConfig{});
    ordered.step(2.0, 0.0);
    EXPECT_THROW(ordered.step(2.0, 0.0), InvalidInput);
}
