#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tornadocast/evaluator.hpp"
#include "tornadocast/rng.hpp"

using namespace tornadocast;

namespace {

// Wilcoxon-Mann-Whitney with ties counted one half: the rank-statistic
// definition of AUC, computed by brute force over all (pos, neg) pairs.
double mww_auc(const std::vector<double>& scores, const std::vector<int>& truth) {
    double wins = 0.0;
    std::int64_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (truth[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (truth[j] != 0) continue;
            ++pairs;
            if (scores[i] > scores[j]) wins += 1.0;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

Dataset blob_dataset(std::size_t n, std::size_t f, double gap, std::uint64_t seed) {
    Dataset d;
    for (std::size_t c = 0; c < f; ++c) d.feature_names.push_back("x" + std::to_string(c));
    Rng rng(seed);
    Date day(2000, 1, 1);
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(rng.next_below(2));
        const double shift = y == 1 ? gap / 2.0 : -gap / 2.0;
        d.labels.push_back(y);
        d.locations.push_back("A");
        d.dates.push_back(day);
        day = day.next_day();
        for (std::size_t c = 0; c < f; ++c) d.features.push_back(shift + rng.next_normal());
    }
    return d;
}

CrossValConfig quick_config() {
    CrossValConfig cfg;
    cfg.train.hidden_size = 4;
    cfg.train.epochs = 10;
    cfg.train.batch_size = 16;
    cfg.train.dropout_rate = 0.0;
    cfg.train.adam.learning_rate = 0.02;
    cfg.smote.k_neighbors = 3;
    return cfg;
}

}  // namespace

// ---- confusion and metrics ----

TEST_CASE("published-study confusion matrix reproduces the reported metric table") {
    // tp/tn as reported; fp/fn recovered by inverting the sensitivity and
    // false-positive-rate definitions against the quoted percentages:
    //   fn = tp*(1-sens)/sens,  fp = tn*fpr/(1-fpr)
    const double sens_pub = 0.895, fpr_pub = 0.176;
    CHECK(std::llround(15644.0 * (1.0 - sens_pub) / sens_pub) == 1835);
    CHECK(std::llround(14412.0 * fpr_pub / (1.0 - fpr_pub)) == 3078);

    const ConfusionMatrix cm{15644, 14412, 3078, 1835};
    REQUIRE(cm.total() == 34969);
    const MetricSet m = metrics(cm);
    REQUIRE(m.sensitivity.has_value());
    REQUIRE(m.fpr.has_value());
    REQUIRE(m.accuracy.has_value());
    REQUIRE(m.precision.has_value());
    REQUIRE(m.npv.has_value());
    // each within 0.1 percentage point of the published table
    CHECK(std::abs(*m.sensitivity - 0.895) < 0.001);
    CHECK(std::abs(*m.fpr - 0.176) < 0.001);
    CHECK(std::abs(*m.accuracy - 0.859) < 0.001);
    CHECK(std::abs(*m.precision - 0.836) < 0.001);
    CHECK(std::abs(*m.npv - 0.887) < 0.001);
}

TEST_CASE("classify treats the threshold as a positive call") {
    CHECK(classify(0.5) == 1);
    CHECK(classify(0.4999) == 0);
    CHECK(classify(0.2, 0.2) == 1);
    CHECK(classify(0.9, 0.95) == 0);
}

TEST_CASE("confusion matches a brute-force count and validates input") {
    Rng rng(77);
    std::vector<int> pred(211), truth(211);
    for (std::size_t i = 0; i < pred.size(); ++i) {
        pred[i] = static_cast<int>(rng.next_below(2));
        truth[i] = static_cast<int>(rng.next_below(2));
    }
    const ConfusionMatrix cm = confusion(pred, truth);
    std::int64_t tp = 0, tn = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 1) (pred[i] == 1 ? tp : fn) += 1;
        else (pred[i] == 1 ? fp : tn) += 1;
    }
    CHECK(cm.tp == tp);
    CHECK(cm.tn == tn);
    CHECK(cm.fp == fp);
    CHECK(cm.fn == fn);
    CHECK(cm.total() == 211);

    std::vector<int> shorter(3, 0);
    CHECK_THROWS_AS(confusion(shorter, truth), std::invalid_argument);
    std::vector<int> bad = {0, 2, 1};
    std::vector<int> ok = {0, 1, 1};
    CHECK_THROWS_AS(confusion(bad, ok), std::invalid_argument);
    CHECK_THROWS_AS(confusion(ok, bad), std::invalid_argument);
}

TEST_CASE("metric fractions with zero denominators stay undefined") {
    const MetricSet empty = metrics(ConfusionMatrix{});
    CHECK_FALSE(empty.sensitivity.has_value());
    CHECK_FALSE(empty.fpr.has_value());
    CHECK_FALSE(empty.accuracy.has_value());
    CHECK_FALSE(empty.precision.has_value());
    CHECK_FALSE(empty.npv.has_value());

    // all-negative truth, all-negative predictions: only tn is populated
    const MetricSet tn_only = metrics(ConfusionMatrix{0, 10, 0, 0});
    CHECK_FALSE(tn_only.sensitivity.has_value());  // no actual positives
    CHECK_FALSE(tn_only.precision.has_value());    // no positive calls
    CHECK(tn_only.fpr == 0.0);
    CHECK(tn_only.accuracy == 1.0);
    CHECK(tn_only.npv == 1.0);

    const MetricSet perfect = metrics(ConfusionMatrix{5, 7, 0, 0});
    CHECK(perfect.sensitivity == 1.0);
    CHECK(perfect.fpr == 0.0);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.precision == 1.0);
    CHECK(perfect.npv == 1.0);
}

TEST_CASE("metrics on a hand-computed matrix") {
    const MetricSet m = metrics(ConfusionMatrix{6, 8, 2, 4});  // total 20
    CHECK(*m.sensitivity == doctest::Approx(0.6));
    CHECK(*m.fpr == doctest::Approx(0.2));
    CHECK(*m.accuracy == doctest::Approx(0.7));
    CHECK(*m.precision == doctest::Approx(0.75));
    CHECK(*m.npv == doctest::Approx(8.0 / 12.0));
}

// ---- ROC / AUC ----

TEST_CASE("roc endpoints, monotonicity, and the separable/reversed extremes") {
    const std::vector<double> scores = {0.9, 0.8, 0.7, 0.3, 0.2, 0.1};
    const std::vector<int> truth = {1, 1, 1, 0, 0, 0};
    const RocCurve roc = roc_curve(scores, truth);
    CHECK(roc.auc == doctest::Approx(1.0));
    CHECK(std::isinf(roc.points.front().threshold));
    CHECK(roc.points.front().fpr == 0.0);
    CHECK(roc.points.front().tpr == 0.0);
    CHECK(roc.points.back().fpr == 1.0);
    CHECK(roc.points.back().tpr == 1.0);
    for (std::size_t i = 1; i < roc.points.size(); ++i) {
        CHECK(roc.points[i].fpr >= roc.points[i - 1].fpr);
        CHECK(roc.points[i].tpr >= roc.points[i - 1].tpr);
        CHECK(roc.points[i].threshold < roc.points[i - 1].threshold);
    }

    const std::vector<int> reversed = {0, 0, 0, 1, 1, 1};
    CHECK(roc_curve(scores, reversed).auc == doctest::Approx(0.0));

    const std::vector<double> constant(6, 0.4);
    CHECK(roc_curve(constant, truth).auc == doctest::Approx(0.5));  // one diagonal step
}

TEST_CASE("trapezoidal AUC equals the pairwise rank statistic on 200 random instances") {
    Rng rng(4242);
    for (int instance = 0; instance < 200; ++instance) {
        const std::size_t n = 4 + rng.next_below(17);  // up to 20 samples
        std::vector<double> scores(n);
        std::vector<int> truth(n);
        const bool quantize = instance % 2 == 1;  // half the instances carry ties
        bool has0 = false, has1 = false;
        for (std::size_t i = 0; i < n; ++i) {
            double s = rng.next_double();
            if (quantize) s = std::round(s * 4.0) / 4.0;
            scores[i] = s;
            truth[i] = static_cast<int>(rng.next_below(2));
            (truth[i] ? has1 : has0) = true;
        }
        if (!has0) truth[0] = 0;
        if (!has1) truth[n - 1] = 1;

        const RocCurve roc = roc_curve(scores, truth);
        const double oracle = mww_auc(scores, truth);
        INFO("instance ", instance, " n ", n);
        CHECK(std::abs(roc.auc - oracle) < 1e-12);
    }
}

TEST_CASE("AUC is invariant to score shifts and flips under negation") {
    Rng rng(99);
    std::vector<double> scores(40);
    std::vector<int> truth(40);
    for (std::size_t i = 0; i < 40; ++i) {
        scores[i] = std::round(rng.next_double() * 100.0) / 100.0;
        truth[i] = static_cast<int>(rng.next_below(2));
    }
    truth[0] = 0;
    truth[1] = 1;

    const double base = roc_curve(scores, truth).auc;

    std::vector<double> shifted = scores;
    for (double& s : shifted) s += 5.0;
    CHECK(roc_curve(shifted, truth).auc == base);  // rank order unchanged

    std::vector<double> negated = scores;
    for (double& s : negated) s = -s;
    CHECK(roc_curve(negated, truth).auc == doctest::Approx(1.0 - base).epsilon(1e-12));
}

TEST_CASE("roc_curve requires both classes and matching lengths") {
    const std::vector<double> scores = {0.1, 0.2, 0.3};
    const std::vector<int> ones = {1, 1, 1};
    CHECK_THROWS_AS(roc_curve(scores, ones), std::invalid_argument);
    const std::vector<int> shorter = {1, 0};
    CHECK_THROWS_AS(roc_curve(scores, shorter), std::invalid_argument);
}

TEST_CASE("roc CSV starts with its header and one row per point") {
    const std::vector<double> scores = {0.9, 0.1};
    const std::vector<int> truth = {1, 0};
    const RocCurve roc = roc_curve(scores, truth);
    const std::string csv = roc.to_csv();
    CHECK(csv.rfind("threshold,fpr,tpr\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + roc.points.size());
}

// ---- averaged confusion ----

TEST_CASE("average_confusion is the arithmetic mean per cell") {
    const std::vector<ConfusionMatrix> cms = {{10, 20, 2, 4}, {14, 16, 6, 0}};
    const AveragedConfusion avg = average_confusion(cms);
    CHECK(avg.tp == doctest::Approx(12.0));
    CHECK(avg.tn == doctest::Approx(18.0));
    CHECK(avg.fp == doctest::Approx(4.0));
    CHECK(avg.fn == doctest::Approx(2.0));

    const std::string csv = avg.to_csv();
    CHECK(csv.find("pred_0") != std::string::npos);
    CHECK(csv.find("actual_1") != std::string::npos);

    CHECK_THROWS_AS(average_confusion(std::vector<ConfusionMatrix>{}), std::invalid_argument);
}

// ---- cross-validation ----

TEST_CASE("mode names round-trip and reject unknowns") {
    CHECK(to_string(CrossValMode::Sound) == "sound");
    CHECK(to_string(CrossValMode::PaperFaithful) == "paper-faithful");
    CHECK(parse_mode("sound") == CrossValMode::Sound);
    CHECK(parse_mode("paper-faithful") == CrossValMode::PaperFaithful);
    CHECK_FALSE(parse_mode("papery").has_value());
    CHECK_FALSE(parse_mode("").has_value());
}

TEST_CASE("crossval_population counts augmented rows only in paper-faithful mode") {
    const Dataset d = blob_dataset(50, 2, 3.0, 5);
    std::int64_t pos = std::count(d.labels.begin(), d.labels.end(), 1);
    const std::size_t minority =
        static_cast<std::size_t>(std::min<std::int64_t>(pos, 50 - pos));
    const std::size_t majority = 50 - minority;

    CrossValConfig cfg = quick_config();
    CHECK(crossval_population(d, cfg, CrossValMode::Sound) == 50);
    CHECK(crossval_population(d, cfg, CrossValMode::PaperFaithful) ==
          50 + (majority - minority));

    cfg.use_smote = false;
    CHECK(crossval_population(d, cfg, CrossValMode::PaperFaithful) == 50);
}

TEST_CASE("sound-mode cross-validation covers every sample exactly once") {
    const Dataset d = blob_dataset(60, 2, 6.0, 8);
    CrossValConfig cfg = quick_config();
    const FoldPlan plan = make_fold_plan(60, 3, 42);
    const CrossValReport report = cross_validate(d, plan, cfg, CrossValMode::Sound);

    REQUIRE(report.folds.size() == 3);
    std::int64_t covered = 0;
    std::vector<double> accs;
    std::vector<ConfusionMatrix> cms;
    for (const FoldReport& fr : report.folds) {
        covered += fr.eval.cm.total();
        REQUIRE(fr.eval.metric_set.accuracy.has_value());
        accs.push_back(*fr.eval.metric_set.accuracy);
        cms.push_back(fr.eval.cm);
        CHECK_FALSE(fr.originals.has_value());  // sound mode has no synthetic rows in test
        CHECK(fr.curve.entries.size() == 10);
    }
    CHECK(covered == 60);

    // the summary statistics are recomputable from the folds
    const double mean = std::accumulate(accs.begin(), accs.end(), 0.0) / 3.0;
    double var = 0.0;
    for (double a : accs) var += (a - mean) * (a - mean);
    var /= 3.0;
    CHECK(report.mean_accuracy == doctest::Approx(mean).epsilon(1e-12));
    CHECK(report.std_accuracy == doctest::Approx(std::sqrt(var)).epsilon(1e-12));
    const AveragedConfusion avg = average_confusion(cms);
    CHECK(report.avg_confusion.tp == doctest::Approx(avg.tp));
    CHECK(report.avg_confusion.fn == doctest::Approx(avg.fn));

    // on well-separated blobs the classifier should be near-perfect
    CHECK(report.mean_accuracy > 0.9);
}

TEST_CASE("paper-faithful mode folds the augmented matrix and reports both bases") {
    const Dataset d = blob_dataset(80, 2, 4.0, 12);
    CrossValConfig cfg = quick_config();
    const std::size_t population = crossval_population(d, cfg, CrossValMode::PaperFaithful);
    REQUIRE(population > 80);  // classes are unbalanced enough to trigger SMOTE

    const FoldPlan plan = make_fold_plan(population, 4, 7);
    const CrossValReport report = cross_validate(d, plan, cfg, CrossValMode::PaperFaithful);

    REQUIRE(report.folds.size() == 4);
    std::int64_t augmented_total = 0, originals_total = 0;
    for (const FoldReport& fr : report.folds) {
        augmented_total += fr.eval.cm.total();
        REQUIRE(fr.originals.has_value());
        originals_total += fr.originals->cm.total();
    }
    CHECK(augmented_total == static_cast<std::int64_t>(population));
    CHECK(originals_total == 80);  // each original row tested exactly once
    CHECK(report.mean_accuracy_originals.has_value());
    CHECK(report.std_accuracy_originals.has_value());

    // window > 1 is structurally incompatible with pre-augmented folding
    CrossValConfig wide = cfg;
    wide.window = 2;
    const FoldPlan p2 = make_fold_plan(population, 4, 7);
    CHECK_THROWS_AS(cross_validate(d, p2, wide, CrossValMode::PaperFaithful),
                    std::invalid_argument);
}

TEST_CASE("cross_validate rejects a fold plan sized for the wrong population") {
    const Dataset d = blob_dataset(40, 2, 3.0, 3);
    CrossValConfig cfg = quick_config();
    const FoldPlan plan = make_fold_plan(39, 3, 1);
    CHECK_THROWS_AS(cross_validate(d, plan, cfg, CrossValMode::Sound), std::invalid_argument);
}

TEST_CASE("fold parallelism does not change the report") {
    const Dataset d = blob_dataset(48, 2, 5.0, 21);
    CrossValConfig cfg = quick_config();
    cfg.train.epochs = 5;
    const FoldPlan plan = make_fold_plan(48, 4, 11);

    cfg.jobs = 1;
    const std::string serial = cross_validate(d, plan, cfg, CrossValMode::Sound).to_json();
    cfg.jobs = 4;
    const std::string parallel = cross_validate(d, plan, cfg, CrossValMode::Sound).to_json();
    CHECK(serial == parallel);

    // and the whole report is reproducible run to run
    cfg.jobs = 1;
    CHECK(cross_validate(d, plan, cfg, CrossValMode::Sound).to_json() == serial);
}

TEST_CASE("report JSON carries no timestamps or host details") {
    const Dataset d = blob_dataset(30, 2, 5.0, 2);
    CrossValConfig cfg = quick_config();
    cfg.train.epochs = 3;
    const FoldPlan plan = make_fold_plan(30, 3, 9);
    const std::string json = cross_validate(d, plan, cfg, CrossValMode::Sound).to_json();
    for (const char* banned : {"time", "date", "host", "user"}) {
        CAPTURE(banned);
        CHECK(json.find(banned) == std::string::npos);
    }
    CHECK(json.find("\"mode\"") != std::string::npos);
    CHECK(json.find("\"folds\"") != std::string::npos);
}
