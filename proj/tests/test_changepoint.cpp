#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "multirank/changepoint.hpp"
#include "multirank/simulation.hpp"
#include "test_helpers.hpp"

using namespace multirank;
using testing_helpers::column;

TEST(VVector, Examples) {
    EXPECT_NEAR(v_vector(compute_ranks(column({1, 2, 3, 4})), 2)(0), 0.5, 1e-15);
    const RankTable t = compute_ranks(testing_helpers::gaussian_data(23, 3, 4));
    for (Index n1 = 1; n1 < 23; ++n1) {
        const double f = std::sqrt(double(n1) * double(23 - n1)) / 23.0;
        EXPECT_LT((v_vector(t, n1) - f * u_vector(t, n1)).cwiseAbs().maxCoeff(), 1e-14);
    }
    Matrix x = testing_helpers::gaussian_matrix(10, 1, 2);
    x(9, 0) = 100.0;
    // One observation above the rest: (n - 1) concordant pairs over n^{3/2}.
    EXPECT_NEAR(v_vector(compute_ranks(DataMatrix(x)), 9)(0), 9.0 / std::pow(10.0, 1.5), 1e-14);
}

TEST(ScanSingle, TrendIsDetectedNearCentre) {
    Matrix x = testing_helpers::gaussian_matrix(200, 3, 8);
    for (Index i = 0; i < 200; ++i) x(i, 1) = static_cast<double>(i);
    const ScanResult r = scan_single(DataMatrix(x));
    EXPECT_NEAR(static_cast<double>(r.argmax), 100.0, 10.0);
    EXPECT_LT(r.pvalue, 1e-3);
    EXPECT_EQ(r.kiefer_terms, 30);
    EXPECT_EQ(r.profile.size(), 199u);
    EXPECT_EQ(*std::max_element(r.profile.begin(), r.profile.end()), r.wstat);
}

TEST(ScanSingle, TimeReversal) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const Matrix x = testing_helpers::gaussian_matrix(50, 2, seed);
        const Matrix y = x.colwise().reverse();
        const ScanResult a = scan_single(DataMatrix(x));
        const ScanResult b = scan_single(DataMatrix(y));
        EXPECT_NEAR(a.wstat, b.wstat, 1e-13);
        EXPECT_EQ(b.argmax, 50 - a.argmax);
    }
}

TEST(ScanSingle, ProfileEqualsScaledTwoSample) {
    const DataMatrix d = testing_helpers::gaussian_data(40, 2, 12);
    const ScanResult r = scan_single(d);
    for (Index n1 = 1; n1 < 40; n1 += 5) {
        const double s = two_sample_stat(d, n1).statistic;
        EXPECT_NEAR(r.profile[static_cast<std::size_t>(n1 - 1)], double(n1) * (40 - n1) / 1600.0 * s, 1e-12);
    }
}

TEST(ScanSingle, ArgumentChecks) {
    EXPECT_THROW(scan_single(testing_helpers::gaussian_data(7, 1, 1)), Error);
    EXPECT_THROW(scan_single(testing_helpers::gaussian_data(9, 8, 1)), Error);
    DataMatrix d = testing_helpers::gaussian_data(20, 1, 1);
    d.set_missing(3, 0);
    EXPECT_THROW(scan_single(d), Error);
}

TEST(SegmentCost, Identities) {
    const DataMatrix d = testing_helpers::gaussian_data(30, 3, 5);
    const RankTable t = compute_ranks(d);
    const RankCovariance cov = estimate_covariance(t);
    const SegmentCostModel model(t, cov.whitener);
    EXPECT_NEAR(model(1, 30), 0.0, 1e-13);
    EXPECT_NEAR(segment_cost(t, cov.inverse, 1, 30), 0.0, 1e-13);
    for (Index n1 = 1; n1 < 30; ++n1) {
        const double split = model(1, n1) + model(n1 + 1, 30);
        EXPECT_NEAR(split, two_sample_stat(d, n1).statistic, 1e-11);
    }
    for (Index j = 1; j <= 30; j += 7) {
        const Vector c = t.centered.row(j - 1).transpose();
        EXPECT_NEAR(model(j, j), 4.0 / 900.0 * c.dot(cov.inverse * c), 1e-13);
    }
    for (Index i = 1; i <= 30; i += 4)
        for (Index j = i; j <= 30; j += 3) EXPECT_NEAR(model(i, j), segment_cost(t, cov.inverse, i, j), 1e-12);
    EXPECT_THROW(segment_cost(t, cov.inverse, 0, 3), Error);
    EXPECT_THROW(segment_cost(t, cov.inverse, 4, 3), Error);
}

TEST(DpSegment, FrozenSixPointExample) {
    const DataMatrix d = column({1, 2, 9, 10, 3, 4});
    const Segmentation s = dp_segment(d, 3);
    ASSERT_EQ(s.boundaries.size(), 2u);
    EXPECT_EQ(s.boundaries[0], 2);
    EXPECT_EQ(s.boundaries[1], 4);
    EXPECT_NEAR(s.criterion, 5.052631578947368, 1e-12);
    const Segmentation b = brute_force_segment(d, 3);
    EXPECT_EQ(b.boundaries, s.boundaries);
    EXPECT_NEAR(b.criterion, s.criterion, 1e-12);
}

TEST(DpSegment, SingleSegment) {
    const DataMatrix d = testing_helpers::gaussian_data(12, 2, 3);
    const Segmentation s = dp_segment(d, 1);
    EXPECT_TRUE(s.boundaries.empty());
    EXPECT_NEAR(s.criterion, 0.0, 1e-13);
    const Segmentation b = brute_force_segment(d, 1);
    EXPECT_TRUE(b.boundaries.empty());
    EXPECT_NEAR(b.criterion, 0.0, 1e-13);
}

TEST(DpSegment, TwoSegmentsIsBestSplit) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const DataMatrix d = testing_helpers::gaussian_data(35, 2, seed);
        const Segmentation s = dp_segment(d, 2);
        double best = -1;
        Index arg = 0;
        for (Index n1 = 1; n1 < 35; ++n1) {
            const double v = multigroup_stat(d, GroupSpec{{n1}}).statistic;
            if (v > best) {
                best = v;
                arg = n1;
            }
        }
        ASSERT_EQ(s.boundaries.size(), 1u);
        EXPECT_EQ(s.boundaries[0], arg);
        EXPECT_NEAR(s.criterion, best, 1e-11);
    }
}

TEST(DpSegment, MatchesBruteForceOnRandomInstances) {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> pick_n(8, 30), pick_k(1, 3), pick_l(2, 4), pick_m(1, 3);
    for (int trial = 0; trial < 60; ++trial) {
        const Index n = pick_n(rng), K = pick_k(rng), L = pick_l(rng), m = pick_m(rng);
        if (L * m > n) continue;
        Matrix x = testing_helpers::gaussian_matrix(n, K, 7000 + trial);
        x.bottomRows(n / 2).array() += 1.0;
        const DataMatrix d(x);
        const Segmentation a = dp_segment(d, L, m);
        const Segmentation b = brute_force_segment(d, L, m);
        EXPECT_EQ(a.boundaries, b.boundaries) << "trial " << trial;
        EXPECT_NEAR(a.criterion, b.criterion, 1e-10);
        for (std::size_t i = 0; i + 1 < a.boundaries.size(); ++i)
            EXPECT_GE(a.boundaries[i + 1] - a.boundaries[i], m);
        if (!a.boundaries.empty()) {
            EXPECT_GE(a.boundaries.front(), m);
            EXPECT_LE(a.boundaries.back(), n - m);
        }
    }
}

TEST(DpSegment, LayerCriteriaAreNondecreasing) {
    const DataMatrix d = testing_helpers::gaussian_data(60, 3, 44);
    const Segmentation s = dp_segment(d, 8);
    ASSERT_EQ(s.layer_criteria.size(), 8u);
    EXPECT_NEAR(s.layer_criteria[0], 0.0, 1e-12);
    for (std::size_t l = 1; l < 8; ++l) EXPECT_GE(s.layer_criteria[l], s.layer_criteria[l - 1] - 1e-12);
    EXPECT_NEAR(s.layer_criteria.back(), s.criterion, 1e-12);
    double total = 0;
    for (double c : s.segment_costs) total += c;
    EXPECT_NEAR(total, s.criterion, 1e-12);
    for (std::size_t l = 1; l < 8; l += 2)
        EXPECT_NEAR(dp_segment(d, static_cast<Index>(l + 1)).criterion, s.layer_criteria[l], 1e-12);
}

TEST(DpSegment, RecoversThreeWellSeparatedLevels) {
    int hits = 0;
    const int reps = 200;
    std::mt19937_64 rng(515);
    std::normal_distribution<double> normal;
    for (int r = 0; r < reps; ++r) {
        Matrix x(90, 2);
        for (Index i = 0; i < 90; ++i)
            for (Index k = 0; k < 2; ++k) x(i, k) = normal(rng) + (i < 30 ? 0.0 : i < 60 ? 3.0 : 0.0);
        const Segmentation s = dp_segment(DataMatrix(x), 3);
        if (std::abs(s.boundaries[0] - 30) <= 2 && std::abs(s.boundaries[1] - 60) <= 2) ++hits;
    }
    EXPECT_GE(hits, 190);
}

TEST(DpSegment, ArgumentChecks) {
    const DataMatrix d = testing_helpers::gaussian_data(10, 1, 1);
    EXPECT_THROW(dp_segment(d, 0), Error);
    EXPECT_THROW(dp_segment(d, 11), Error);
    try {
        dp_segment(d, 4, 3);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::infeasible);
    }
    EXPECT_THROW(brute_force_segment(testing_helpers::gaussian_data(400, 1, 1), 5), Error);
}

TEST(SlopeHeuristic, Examples) {
    EXPECT_EQ(slope_heuristic({0, 8, 16, 24, 32, 33, 34, 35}), 4);
    EXPECT_EQ(slope_heuristic({0, 5, 6, 7, 8}), 1);
    std::vector<double> rss;
    slope_heuristic({0, 1, 2, 3, 4, 5}, &rss);
    ASSERT_EQ(rss.size(), 6u);
    EXPECT_TRUE(std::isnan(rss[0]));
    EXPECT_EQ(slope_heuristic({0, 1, 2, 3, 4, 5}), 1);
    EXPECT_THROW(slope_heuristic({0, 1}), Error);
}

TEST(SelectNumChanges, NullReturnsZero) {
    int zero = 0;
    const int reps = 40;
    for (int r = 0; r < reps; ++r)
        zero += select_num_changes(testing_helpers::gaussian_data(100, 3, 300 + r), 6).num_changes == 0;
    EXPECT_GE(zero, reps - 2);
}

TEST(SelectNumChanges, FindsFourChanges) {
    int hits = 0;
    const int reps = 30;
    for (int r = 0; r < reps; ++r) {
        Scenario s;
        s.kind = ScenarioKind::correlated_shift;
        s.n = 250;
        s.dim = 3;
        s.change_points = {50, 100, 150, 200};
        s.shift = Vector::Constant(3, 2.0);
        s.seed = 900 + r;
        const Selection sel = select_num_changes(generate(s), 10);
        hits += sel.num_changes == 4;
        if (sel.num_changes == 4) EXPECT_EQ(sel.segmentation.boundaries.size(), 4u);
    }
    EXPECT_GE(hits, 27);
}

TEST(SelectNumChanges, ArgumentChecks) {
    const DataMatrix d = testing_helpers::gaussian_data(30, 1, 1);
    EXPECT_THROW(select_num_changes(d, 2), Error);
    EXPECT_THROW(select_num_changes(d, 5, 0.0), Error);
}
