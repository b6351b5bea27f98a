#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "multirank/parallel.hpp"
#include "multirank/simulation.hpp"
#include "test_helpers.hpp"

using namespace multirank;
using testing_helpers::column;

TEST(Scenario, CrossMixtureShape) {
    Scenario s;
    s.kind = ScenarioKind::cross_mixture;
    s.n = 100;
    s.dim = 2;
    s.change_points = {50};
    s.shift = Eigen::Vector2d(0.5, 0.5);
    s.seed = 1;
    const DataMatrix d = generate(s);
    EXPECT_EQ(d.rows(), 100);
    EXPECT_EQ(d.cols(), 2);
    EXPECT_FALSE(d.has_censoring());
}

TEST(Scenario, CrossMixtureMoments) {
    Scenario s;
    s.kind = ScenarioKind::cross_mixture;
    s.n = 200000;
    s.dim = 2;
    s.seed = 3;
    const Matrix x = generate(s).values();
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    const Matrix cov = centered.transpose() * centered / static_cast<double>(s.n);
    EXPECT_NEAR(cov(0, 0), 2.1, 0.05);
    EXPECT_NEAR(cov(1, 1), 2.1, 0.05);
    EXPECT_NEAR(cov(0, 1), 0.0, 0.03);
    EXPECT_NEAR(mean(0), 0.0, 0.02);
}

TEST(Scenario, NoisePaddingAppendsScaledCoordinates) {
    Scenario s;
    s.kind = ScenarioKind::noise_padding;
    s.n = 100000;
    s.dim = 10;
    s.seed = 5;
    const Matrix x = generate(s).values();
    ASSERT_EQ(x.cols(), 10);
    for (Index k = 2; k < 10; ++k) {
        const double sd = std::sqrt((x.col(k).array() - x.col(k).mean()).square().mean());
        EXPECT_NEAR(sd, 2.5, 0.03);
    }
}

TEST(Scenario, NullIsStandardGaussian) {
    Scenario s;
    s.n = 100;
    s.dim = 5;
    const DataMatrix d = generate(s);
    EXPECT_EQ(d.rows(), 100);
    EXPECT_EQ(d.cols(), 5);
    s.n = 100000;
    const Matrix x = generate(s).values();
    const Matrix cov = x.transpose() * x / 100000.0;
    EXPECT_LT((cov - Matrix::Identity(5, 5)).cwiseAbs().maxCoeff(), 0.03);
}

TEST(Scenario, CorrelatedShiftMeansAndCorrelation) {
    Scenario s;
    s.kind = ScenarioKind::correlated_shift;
    s.n = 60000;
    s.dim = 3;
    s.correlation = 0.4;
    s.change_points = {20000, 40000};
    s.shift = Vector::Constant(3, 1.5);
    s.seed = 8;
    const Matrix x = generate(s).values();
    EXPECT_NEAR(x.topRows(20000).mean(), 0.0, 0.02);
    EXPECT_NEAR(x.middleRows(20000, 20000).mean(), 1.5, 0.02);
    EXPECT_NEAR(x.bottomRows(20000).mean(), 0.0, 0.02);
    const Matrix a = x.topRows(20000);
    EXPECT_NEAR(a.col(0).dot(a.col(1)) / 20000.0, 0.4, 0.03);
    EXPECT_NEAR(a.col(0).dot(a.col(2)) / 20000.0, 0.0, 0.03);

    s.segment_means = {Vector::Constant(1, 5.0), Vector::Zero(3), Vector::Constant(3, -1.0)};
    const Matrix y = generate(s).values();
    EXPECT_NEAR(y.topRows(20000).col(0).mean(), 5.0, 0.03);
    EXPECT_NEAR(y.topRows(20000).col(1).mean(), 0.0, 0.03);
    EXPECT_NEAR(y.bottomRows(20000).mean(), -1.0, 0.03);
}

TEST(Scenario, OutlierContaminationInflatesTails) {
    Scenario s;
    s.kind = ScenarioKind::outlier_contamination;
    s.n = 100000;
    s.dim = 2;
    s.outlier_fraction = 0.1;
    s.outlier_scale = 10.0;
    s.seed = 4;
    const Matrix x = generate(s).values();
    const double var = x.col(0).squaredNorm() / 100000.0;
    EXPECT_NEAR(var, 0.9 + 0.1 * 10.0, 0.06);
}

TEST(Scenario, DeterministicAndValidated) {
    Scenario s;
    s.n = 50;
    s.dim = 3;
    s.seed = 77;
    EXPECT_TRUE(generate(s) == generate(s));
    Scenario t = s;
    t.seed = 78;
    EXPECT_FALSE(generate(s) == generate(t));

    Scenario bad = s;
    bad.change_points = {0};
    EXPECT_THROW(generate(bad), Error);
    bad = s;
    bad.correlation = 1.0;
    EXPECT_THROW(generate(bad), Error);
    bad = s;
    bad.kind = ScenarioKind::cross_mixture;
    EXPECT_THROW(generate(bad), Error);
    bad = s;
    bad.correlation = -0.9;
    bad.dim = 10;
    EXPECT_THROW(generate(bad), Error);
    EXPECT_THROW(scenario_kind_from_string("bogus"), Error);
    EXPECT_EQ(scenario_kind_from_string(to_string(ScenarioKind::noise_padding)), ScenarioKind::noise_padding);
}

TEST(Hotelling, Examples) {
    EXPECT_NEAR(hotelling_stat(column({0, 0, 1, 1}), 2), 4.0, 1e-12);
    const Matrix x = testing_helpers::gaussian_matrix(30, 1, 4);
    const double m1 = x.topRows(12).mean(), m2 = x.bottomRows(18).mean();
    const double var = (x.array() - x.mean()).square().sum() / 30.0;
    EXPECT_NEAR(hotelling_stat(DataMatrix(x), 12), 12.0 * 18.0 / 30.0 * (m1 - m2) * (m1 - m2) / var, 1e-12);
}

TEST(Hotelling, NullMeanNearDimension) {
    double sum = 0.0;
    const int reps = 2000;
    for (int r = 0; r < reps; ++r) sum += hotelling_stat(testing_helpers::gaussian_data(200, 3, 40000 + r), 80);
    EXPECT_NEAR(sum / reps, 3.0, 0.25);
}

TEST(Hotelling, ScanIsMaxOverSplits) {
    const DataMatrix d = testing_helpers::gaussian_data(25, 2, 6);
    const HotellingScan h = hotelling_scan(d);
    double best = 0;
    for (Index n1 = 1; n1 < 25; ++n1) best = std::max(best, hotelling_stat(d, n1));
    EXPECT_NEAR(h.statistic, best, 1e-10);
    EXPECT_NEAR(hotelling_stat(d, h.argmax), best, 1e-10);
}

TEST(Bonferroni, ReducesToMarginalScan) {
    const Matrix x = testing_helpers::gaussian_matrix(40, 1, 19);
    const RankTable t = compute_ranks(DataMatrix(x));
    double best = -infinity;
    for (Index n1 = 1; n1 < 40; ++n1) best = std::max(best, v_vector(t, n1)(0));
    EXPECT_NEAR(bonferroni_scan(DataMatrix(x)), best, 1e-14);
    Matrix y(40, 3);
    y.col(0) = x.col(0);
    y.col(1) = x.col(0);
    y.col(2) = x.col(0);
    EXPECT_NEAR(bonferroni_scan(DataMatrix(y)), best, 1e-14);
    EXPECT_EQ(bonferroni_pvalue(-0.1, 3), 1.0);
    EXPECT_LT(bonferroni_pvalue(1.0, 3), 1e-2);
}

TEST(Bonferroni, MonotoneColumnWins) {
    int wins = 0;
    for (int r = 0; r < 30; ++r) {
        Matrix x = testing_helpers::gaussian_matrix(60, 4, 90 + r);
        for (Index i = 0; i < 60; ++i) x(i, 2) = 0.05 * static_cast<double>(i) + 0.3 * x(i, 2);
        const double all = bonferroni_scan(DataMatrix(x));
        const double only = bonferroni_scan(DataMatrix(Matrix(x.col(2))));
        wins += all == only;
    }
    EXPECT_GE(wins, 25);
}

TEST(Roc, PerfectSeparationAndNoSignal) {
    const RocCurve perfect = roc_curve({1, 2, 3}, {10, 11, 12}, "x");
    EXPECT_EQ(perfect.auc, 1.0);
    EXPECT_EQ(perfect.thresholds.front(), infinity);
    EXPECT_EQ(perfect.detection_at(0.0), 1.0);
    const RocCurve flat = roc_curve({1, 2, 3}, {1, 2, 3});
    EXPECT_DOUBLE_EQ(flat.auc, 0.5);
    EXPECT_THROW(roc_curve({}, {1.0}), Error);

    Scenario s;
    s.kind = ScenarioKind::correlated_shift;
    s.n = 60;
    s.dim = 2;
    s.change_points = {30};
    s.shift = Vector::Constant(2, 8.0);
    s.seed = 3;
    const auto [a, b] = roc(detectors::multirank_two_sample(30), detectors::hotelling_two_sample(30), s, 100);
    EXPECT_EQ(a.auc, 1.0);
    EXPECT_EQ(b.auc, 1.0);

    const auto same = roc_compare({detectors::multirank_scan()}, s.without_change(), s.without_change(), 400);
    EXPECT_NEAR(same[0].auc, 0.5, 3.0 * std::sqrt(0.25 / 400));
}

TEST(Roc, CrossScenarioOrdering) {
    Scenario s;
    s.kind = ScenarioKind::cross_mixture;
    s.n = 100;
    s.dim = 2;
    s.change_points = {50};
    s.shift = Eigen::Vector2d(0.5, 0.5);
    s.seed = 2020;
    const auto [mr, h] = roc(detectors::multirank_two_sample(50), detectors::hotelling_two_sample(50), s, 400);
    EXPECT_GE(mr.auc, h.auc);
}

TEST(Roc, CsvAndHistogramOutput) {
    std::ostringstream os;
    write_roc_csv(os, {roc_curve({1, 2}, {3, 4}, "d")});
    EXPECT_EQ(os.str().substr(0, 48), "detector,threshold,false_alarm_rate,detection_ra");
    std::ostringstream hs;
    write_histogram_csv(hs, {0.1, 0.2, 0.9, 5.0}, 0.0, 1.0, 2);
    EXPECT_NE(hs.str().find(",2\n"), std::string::npos);
    EXPECT_THROW(write_histogram_csv(hs, {}, 1.0, 0.0, 2), Error);
}

TEST(Roc, ThreadCountDoesNotChangeResults) {
    Scenario s;
    s.kind = ScenarioKind::correlated_shift;
    s.n = 40;
    s.dim = 2;
    s.change_points = {20};
    s.shift = Vector::Constant(2, 0.5);
    s.seed = 11;
    const auto one = roc_compare({detectors::multirank_scan()}, s, s.without_change(), 120, 1);
    const auto three = roc_compare({detectors::multirank_scan()}, s, s.without_change(), 120, 3);
    EXPECT_EQ(one[0].null_scores, three[0].null_scores);
    EXPECT_EQ(one[0].alt_scores, three[0].alt_scores);
    EXPECT_THROW(roc_compare({detectors::multirank_scan()}, s, s, 50), Error);
}

TEST(Parallel, SplitSeedAndResolve) {
    static_assert(split_seed(1, 0) != split_seed(1, 1));
    EXPECT_NE(split_seed(1, 5), split_seed(2, 5));
    EXPECT_EQ(resolve_threads(3), 3u);
    EXPECT_GE(resolve_threads(0), 1u);
    std::vector<int> hit(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { hit[i] += 1; });
    for (int h : hit) EXPECT_EQ(h, 1);
    EXPECT_THROW(parallel_for(10, 2, [](std::size_t i) {
                     if (i == 7) throw Error(ErrorCode::invalid_argument, "boom");
                 }),
                 Error);
}

TEST(Ks, StatisticAndPvalue) {
    std::vector<double> u;
    for (int i = 0; i < 1000; ++i) u.push_back((i + 0.5) / 1000.0);
    const double d = ks_statistic(u, [](double x) { return x; });
    EXPECT_NEAR(d, 0.0005, 1e-12);
    EXPECT_EQ(ks_pvalue(d, 1000), 1.0);
    EXPECT_LT(ks_pvalue(0.1, 1000), 1e-6);
}
