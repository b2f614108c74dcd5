#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tornadocast/dataio.hpp"
#include "tornadocast/preprocess.hpp"
#include "tornadocast/trainer.hpp"

namespace tornadocast {

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + tn + fp + fn; }
};

/// 1 iff p >= threshold — the boundary counts as a positive call.
int classify(double p, double threshold = 0.5);

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth);

/// Fractions are empty when their denominator is zero, never coerced to 0.
struct MetricSet {
    std::optional<double> sensitivity;  // tp / (tp + fn)
    std::optional<double> fpr;          // fp / (fp + tn)
    std::optional<double> accuracy;     // (tp + tn) / total
    std::optional<double> precision;    // tp / (tp + fp)
    std::optional<double> npv;          // tn / (tn + fn)
};

MetricSet metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // (0,0) first, (1,1) last, both monotone
    double auc = 0.0;

    std::string to_csv() const;  // threshold,fpr,tpr
};

/// Threshold sweep over distinct scores, descending; tied scores share one
/// step. AUC by the trapezoidal rule (equals the Wilcoxon–Mann–Whitney
/// statistic with ties counted 1/2). Requires both classes in `truth`.
RocCurve roc_curve(std::span<const double> scores, std::span<const int> truth);

struct AveragedConfusion {
    double tp = 0.0;
    double tn = 0.0;
    double fp = 0.0;
    double fn = 0.0;

    std::string to_csv() const;  // 2x2, rows = actual class
};

AveragedConfusion average_confusion(std::span<const ConfusionMatrix> matrices);

struct EvalBase {
    ConfusionMatrix cm;
    MetricSet metric_set;
    std::optional<RocCurve> roc;  // absent when the base holds one class only
};

enum class CrossValMode {
    Sound,          // fit standardizer and SMOTE inside each training fold
    PaperFaithful,  // standardize + SMOTE on the full dataset before splitting,
                    // replicating the original study's published protocol
};

std::string to_string(CrossValMode mode);
std::optional<CrossValMode> parse_mode(const std::string& text);

struct CrossValConfig {
    TrainConfig train;  // seed is overridden per fold from the plan seed
    SmoteConfig smote;  // seed is overridden per fold / per run
    std::size_t window = 1;
    bool standardize = true;
    bool use_smote = true;
    int jobs = 1;
};

struct FoldReport {
    int fold_index = 0;
    EvalBase eval;  // augmented base in paper-faithful mode, raw test fold in sound mode
    std::optional<EvalBase> originals;  // paper-faithful only: non-synthetic test rows
    TrainingCurve curve;
};

struct CrossValReport {
    CrossValMode mode = CrossValMode::Sound;
    std::vector<FoldReport> folds;
    double mean_accuracy = 0.0;
    double std_accuracy = 0.0;  // population standard deviation over folds
    AveragedConfusion avg_confusion;
    std::optional<double> mean_accuracy_originals;
    std::optional<double> std_accuracy_originals;

    std::string to_json() const;  // deterministic: no timestamps, no host info
};

/// Number of rows the fold plan must cover for this config and mode
/// (paper-faithful folds the SMOTE-augmented matrix).
std::size_t crossval_population(const Dataset& samples, const CrossValConfig& config,
                                CrossValMode mode);

/// Per-fold seeds derive from (plan.seed, fold_index); folds run in
/// parallel when config.jobs > 1 with bit-identical results either way.
CrossValReport cross_validate(const Dataset& samples, const FoldPlan& plan,
                              const CrossValConfig& config, CrossValMode mode);

}  // namespace tornadocast
