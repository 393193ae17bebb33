#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hazmap/metrics.hpp"

using hazmap::confusion;
using hazmap::ConfusionMatrix;
using hazmap::detection_counts;
using hazmap::DetectionCounts;
using hazmap::EvalReport;
using hazmap::f_score;
using hazmap::report;
using hazmap::table_report;
using hazmap::TableReport;

namespace {

std::vector<int> make_labels(std::size_t potholes, std::size_t roads) {
    std::vector<int> v(potholes, 1);
    v.insert(v.end(), roads, 0);
    return v;
}

std::vector<uint32_t> index_range(uint32_t first, uint32_t count) {
    std::vector<uint32_t> v(count);
    for (uint32_t i = 0; i < count; ++i) v[i] = first + i;
    return v;
}

}  // namespace

TEST(Confusion, PerfectPredictionCounts) {
    const std::vector<int> truth = make_labels(10, 90);
    const ConfusionMatrix cm = confusion(truth, truth);
    EXPECT_EQ(cm.tp, 10);
    EXPECT_EQ(cm.tn, 90);
    EXPECT_EQ(cm.fp, 0);
    EXPECT_EQ(cm.fn, 0);
    EXPECT_EQ(cm.actual_positive(), 10);
    EXPECT_EQ(cm.actual_negative(), 90);
    EXPECT_EQ(cm.total(), 100);
}

TEST(Confusion, AllRoadPredictionMissesEveryPothole) {
    const std::vector<int> truth = make_labels(10, 90);
    const std::vector<int> predicted(truth.size(), 0);
    const ConfusionMatrix cm = confusion(predicted, truth);
    EXPECT_EQ(cm.tp, 0);
    EXPECT_EQ(cm.fp, 0);
    EXPECT_EQ(cm.fn, 10);
    EXPECT_EQ(cm.tn, 90);
}

TEST(Confusion, MatchesBruteForceOnRandomCase) {
    std::mt19937_64 gen(123);
    std::vector<int> truth(1000), predicted(1000);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        truth[i] = gen() % 100 < 10;
        predicted[i] = gen() % 100 < 12;
    }
    const ConfusionMatrix cm = confusion(predicted, truth);

    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] == 1 && predicted[i] == 1) ++tp;
        if (truth[i] == 0 && predicted[i] == 1) ++fp;
        if (truth[i] == 0 && predicted[i] == 0) ++tn;
        if (truth[i] == 1 && predicted[i] == 0) ++fn;
    }
    EXPECT_EQ(cm.tp, tp);
    EXPECT_EQ(cm.fp, fp);
    EXPECT_EQ(cm.tn, tn);
    EXPECT_EQ(cm.fn, fn);
    EXPECT_EQ(cm.tp + cm.fn, std::count(truth.begin(), truth.end(), 1));
    EXPECT_EQ(cm.tn + cm.fp, std::count(truth.begin(), truth.end(), 0));
}

TEST(Confusion, RejectsLengthMismatch) {
    EXPECT_THROW(confusion({1, 0}, {1, 0, 1}), std::invalid_argument);
}

TEST(Report, TextbookExample) {
    ConfusionMatrix cm;
    cm.tp = 8;
    cm.fp = 2;
    cm.fn = 2;
    cm.tn = 88;
    const EvalReport r = report(cm);
    ASSERT_TRUE(r.precision.defined);
    ASSERT_TRUE(r.recall.defined);
    ASSERT_TRUE(r.accuracy.defined);
    ASSERT_TRUE(r.f_score.defined);
    EXPECT_DOUBLE_EQ(r.precision.value, 0.8);
    EXPECT_DOUBLE_EQ(r.recall.value, 0.8);
    EXPECT_DOUBLE_EQ(r.accuracy.value, 0.96);
    EXPECT_DOUBLE_EQ(r.f_score.value, 0.8);
    ASSERT_TRUE(r.rp.defined && r.nr.defined && r.rr.defined && r.np_.defined);
    EXPECT_DOUBLE_EQ(r.rp.value, 80.0);
    EXPECT_DOUBLE_EQ(r.nr.value, 20.0);
    EXPECT_NEAR(r.rr.value, 100.0 * 88.0 / 90.0, 1e-12);
    EXPECT_NEAR(r.np_.value, 100.0 * 2.0 / 90.0, 1e-12);
}

TEST(Report, PerfectDetectionMaxesEverything) {
    ConfusionMatrix cm;
    cm.tp = 10;
    cm.tn = 90;
    const EvalReport r = report(cm);
    EXPECT_DOUBLE_EQ(r.precision.value, 1.0);
    EXPECT_DOUBLE_EQ(r.recall.value, 1.0);
    EXPECT_DOUBLE_EQ(r.accuracy.value, 1.0);
    EXPECT_DOUBLE_EQ(r.f_score.value, 1.0);
    EXPECT_DOUBLE_EQ(r.rp.value, 100.0);
    EXPECT_DOUBLE_EQ(r.rr.value, 100.0);
    EXPECT_DOUBLE_EQ(r.nr.value, 0.0);
    EXPECT_DOUBLE_EQ(r.np_.value, 0.0);
}

TEST(Report, FScoreMatchesPublishedRounding) {
    EXPECT_NEAR(f_score(0.984, 0.953), 0.969, 1e-3);
    EXPECT_NEAR(f_score(0.953, 0.984), 0.969, 1e-3);
}

TEST(Report, UndefinedRatiosAreFlaggedNotFaked) {
    ConfusionMatrix cm;
    cm.fp = 10;
    cm.tn = 90;  // no actual potholes
    const EvalReport r = report(cm);
    EXPECT_FALSE(r.rp.defined);
    EXPECT_FALSE(r.nr.defined);
    EXPECT_FALSE(r.recall.defined);
    EXPECT_FALSE(r.f_score.defined);
    EXPECT_TRUE(r.rr.defined);
    EXPECT_DOUBLE_EQ(r.rr.value, 90.0);
    EXPECT_TRUE(r.precision.defined);
    EXPECT_DOUBLE_EQ(r.precision.value, 0.0);
    EXPECT_TRUE(r.accuracy.defined);

    const EvalReport empty = report(ConfusionMatrix{});
    EXPECT_FALSE(empty.rp.defined);
    EXPECT_FALSE(empty.rr.defined);
    EXPECT_FALSE(empty.precision.defined);
    EXPECT_FALSE(empty.recall.defined);
    EXPECT_FALSE(empty.accuracy.defined);
    EXPECT_FALSE(empty.f_score.defined);
}

TEST(Report, ComplementsSumToOneHundred) {
    const std::int64_t cases[][4] = {
        {8, 2, 88, 2}, {3, 0, 7, 7}, {1, 2, 996, 999}, {123, 45, 678, 9}};
    for (const auto& c : cases) {
        ConfusionMatrix cm;
        cm.tp = c[0];
        cm.fp = c[1];
        cm.tn = c[2];
        cm.fn = c[3];
        const EvalReport r = report(cm);
        ASSERT_TRUE(r.rp.defined && r.nr.defined && r.rr.defined && r.np_.defined);
        EXPECT_NEAR(r.rp.value + r.nr.value, 100.0, 1e-12);
        EXPECT_NEAR(r.rr.value + r.np_.value, 100.0, 1e-12);
    }
}

TEST(Report, FScoreIsSymmetric) {
    for (double p = 0.05; p <= 1.0; p += 0.05)
        for (double r = 0.05; r <= 1.0; r += 0.05)
            EXPECT_EQ(f_score(p, r), f_score(r, p));
}

TEST(Report, RecallNeverDropsWhenATruePositiveIsAdded) {
    double prev = -1.0;
    for (std::int64_t tp = 0; tp <= 10; ++tp) {
        ConfusionMatrix cm;
        cm.tp = tp;
        cm.fn = 10 - tp;
        cm.tn = 50;
        const EvalReport r = report(cm);
        ASSERT_TRUE(r.recall.defined);
        EXPECT_GE(r.recall.value, prev);
        prev = r.recall.value;
    }
}

TEST(DetectionCounts, PerfectFiveForFive) {
    std::vector<std::vector<uint32_t>> truth;
    for (uint32_t i = 0; i < 5; ++i) truth.push_back(index_range(i * 100, 20));
    const DetectionCounts dc = detection_counts(truth, truth);
    EXPECT_EQ(dc.correct, 5);
    EXPECT_EQ(dc.incorrect, 0);
    EXPECT_EQ(dc.misdetection, 0);
}

TEST(DetectionCounts, NoPredictionsMeansAllMisdetections) {
    std::vector<std::vector<uint32_t>> truth;
    for (uint32_t i = 0; i < 3; ++i) truth.push_back(index_range(i * 50, 10));
    const DetectionCounts dc = detection_counts({}, truth);
    EXPECT_EQ(dc.correct, 0);
    EXPECT_EQ(dc.incorrect, 0);
    EXPECT_EQ(dc.misdetection, 3);
}

TEST(DetectionCounts, GreedyMatchingIsOneToOne) {
    const std::vector<uint32_t> truth_a = index_range(0, 10);
    const std::vector<uint32_t> truth_b = index_range(20, 10);
    // p0 covers 9/10 of A; p1 covers 6/10 of A and 6/10 of B.  Greedy takes
    // (A, p0) first, so p1 must settle for B.
    std::vector<uint32_t> p1 = index_range(0, 6);
    const std::vector<uint32_t> p1_b = index_range(20, 6);
    p1.insert(p1.end(), p1_b.begin(), p1_b.end());
    const std::vector<std::vector<uint32_t>> predicted = {index_range(0, 9), p1};

    const DetectionCounts dc = detection_counts(predicted, {truth_a, truth_b});
    EXPECT_EQ(dc.correct, 2);
    EXPECT_EQ(dc.incorrect, 0);
    EXPECT_EQ(dc.misdetection, 0);
}

TEST(DetectionCounts, OverlapThresholdIsInclusive) {
    const std::vector<std::vector<uint32_t>> truth = {index_range(0, 10)};
    std::vector<uint32_t> half = index_range(0, 5);
    const std::vector<uint32_t> stray = index_range(100, 5);
    half.insert(half.end(), stray.begin(), stray.end());
    const std::vector<std::vector<uint32_t>> predicted = {half};

    const DetectionCounts at_half = detection_counts(predicted, truth, 0.5);
    EXPECT_EQ(at_half.correct, 1);
    EXPECT_EQ(at_half.incorrect, 0);
    EXPECT_EQ(at_half.misdetection, 0);

    const DetectionCounts above = detection_counts(predicted, truth, 0.6);
    EXPECT_EQ(above.correct, 0);
    EXPECT_EQ(above.incorrect, 1);
    EXPECT_EQ(above.misdetection, 1);
}

TEST(DetectionCounts, RejectsBadArguments) {
    const std::vector<std::vector<uint32_t>> truth = {index_range(0, 5)};
    EXPECT_THROW(detection_counts(truth, truth, 0.0), std::invalid_argument);
    EXPECT_THROW(detection_counts(truth, truth, 1.5), std::invalid_argument);
    EXPECT_THROW(detection_counts(truth, {{}}), std::invalid_argument);
}

TEST(TableReport, SingleCellAverageEqualsTheModel) {
    ConfusionMatrix cm;
    cm.tp = 8;
    cm.fp = 2;
    cm.fn = 2;
    cm.tn = 88;
    const TableReport t = table_report({"model_a"}, {{report(cm)}}, {"Original"});

    EXPECT_NE(t.text.find("Average"), std::string::npos);
    EXPECT_NE(t.csv.find("model_a,RP,80.00"), std::string::npos);
    EXPECT_NE(t.csv.find("Average,RP,80.00"), std::string::npos);
    EXPECT_NE(t.csv.find("Average,NR,20.00"), std::string::npos);
}

TEST(TableReport, AverageRowIsTheArithmeticMean) {
    ConfusionMatrix full;
    full.tp = 10;
    full.tn = 90;
    ConfusionMatrix most;
    most.tp = 9938;
    most.fn = 62;
    most.tn = 90;
    const TableReport t =
        table_report({"m1", "m2"}, {{report(full)}, {report(most)}}, {"Original"});

    EXPECT_NE(t.csv.find("m1,RP,100.00"), std::string::npos);
    EXPECT_NE(t.csv.find("m2,RP,99.38"), std::string::npos);
    EXPECT_NE(t.csv.find("Average,RP,99.69"), std::string::npos);
    EXPECT_NE(t.csv.find("Average,NR,0.31"), std::string::npos);
}

TEST(TableReport, ColumnOrderFollowsDensityLabels) {
    ConfusionMatrix cm;
    cm.tp = 5;
    cm.fn = 5;
    cm.tn = 90;
    const EvalReport r = report(cm);
    const std::vector<std::string> densities = {"Original", "~0.5", "~0.1", "~0.05"};
    const TableReport t = table_report({"m"}, {{r, r, r, r}}, densities);

    const std::string header = t.csv.substr(0, t.csv.find('\n'));
    EXPECT_EQ(header, "model,metric,Original,~0.5,~0.1,~0.05");

    const std::string text_header = t.text.substr(0, t.text.find('\n'));
    std::size_t pos = 0;
    for (const auto& d : densities) {
        const std::size_t found = text_header.find(d, pos);
        ASSERT_NE(found, std::string::npos) << d;
        pos = found + d.size();
    }
}

TEST(TableReport, UndefinedCellsPrintAsNa) {
    ConfusionMatrix no_potholes;
    no_potholes.tn = 100;
    const TableReport t = table_report({"m"}, {{report(no_potholes)}}, {"Original"});
    EXPECT_NE(t.csv.find("m,RP,n/a"), std::string::npos);
    EXPECT_NE(t.csv.find("Average,RP,n/a"), std::string::npos);
    EXPECT_NE(t.csv.find("m,RR,100.00"), std::string::npos);
}

TEST(TableReport, RejectsBadShapes) {
    ConfusionMatrix cm;
    cm.tp = 1;
    cm.tn = 1;
    const EvalReport r = report(cm);
    EXPECT_THROW(table_report({}, {}, {"Original"}), std::invalid_argument);
    EXPECT_THROW(table_report({"m"}, {{r, r}}, {"Original"}), std::invalid_argument);
    EXPECT_THROW(table_report({"m", "n"}, {{r}}, {"Original"}), std::invalid_argument);
}
