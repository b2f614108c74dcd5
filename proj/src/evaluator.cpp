#include "tornadocast/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tornadocast/csv.hpp"
#include "tornadocast/kernels.hpp"
#include "tornadocast/rng.hpp"

namespace tornadocast {

namespace {

constexpr std::uint64_t kFoldSmoteSalt = 0x736d;
constexpr std::uint64_t kGlobalSmoteSalt = 0x676d;

void require_binary(std::span<const int> labels, const char* who) {
    for (int y : labels) {
        if (y != 0 && y != 1) {
            throw std::invalid_argument(std::string(who) + ": labels must be 0 or 1");
        }
    }
}

bool has_both_classes(std::span<const int> labels) {
    bool any0 = false, any1 = false;
    for (int y : labels) (y == 0 ? any0 : any1) = true;
    return any0 && any1;
}

Dataset subset(const Dataset& d, std::span<const std::size_t> indices) {
    Dataset out;
    out.feature_names = d.feature_names;
    const std::size_t f = d.n_features();
    out.dates.reserve(indices.size());
    out.locations.reserve(indices.size());
    out.labels.reserve(indices.size());
    out.features.reserve(indices.size() * f);
    for (std::size_t i : indices) {
        out.dates.push_back(d.dates[i]);
        out.locations.push_back(d.locations[i]);
        out.labels.push_back(d.labels[i]);
        const auto row = d.row(i);
        out.features.insert(out.features.end(), row.begin(), row.end());
    }
    return out;
}

EvalBase make_eval_base(std::span<const double> probs, std::span<const int> labels) {
    EvalBase base;
    std::vector<int> preds(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) preds[i] = classify(probs[i]);
    base.cm = confusion(preds, labels);
    base.metric_set = metrics(base.cm);
    if (has_both_classes(labels)) base.roc = roc_curve(probs, labels);
    return base;
}

nlohmann::json metric_json(const MetricSet& m) {
    auto cell = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"sensitivity", cell(m.sensitivity)}, {"fpr", cell(m.fpr)},
            {"accuracy", cell(m.accuracy)},       {"precision", cell(m.precision)},
            {"npv", cell(m.npv)}};
}

nlohmann::json confusion_json(const ConfusionMatrix& cm) {
    return {{"tp", cm.tp}, {"tn", cm.tn}, {"fp", cm.fp}, {"fn", cm.fn}};
}

nlohmann::json base_json(const EvalBase& base) {
    nlohmann::json j{{"confusion", confusion_json(base.cm)},
                     {"metrics", metric_json(base.metric_set)}};
    j["auc"] = base.roc ? nlohmann::json(base.roc->auc) : nlohmann::json(nullptr);
    return j;
}

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

MeanStd mean_std(std::span<const double> values) {
    MeanStd ms;
    const double n = static_cast<double>(values.size());
    for (double v : values) ms.mean += v;
    ms.mean /= n;
    double sq = 0.0;
    for (double v : values) sq += (v - ms.mean) * (v - ms.mean);
    ms.stddev = std::sqrt(sq / n);  // population form
    return ms;
}

}  // namespace

int classify(double p, double threshold) { return p >= threshold ? 1 : 0; }

ConfusionMatrix confusion(std::span<const int> pred, std::span<const int> truth) {
    if (pred.size() != truth.size()) {
        throw std::invalid_argument("confusion: prediction/truth length mismatch");
    }
    if (pred.empty()) throw std::invalid_argument("confusion: empty inputs");
    require_binary(pred, "confusion");
    require_binary(truth, "confusion");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 1) {
            (pred[i] == 1 ? cm.tp : cm.fn) += 1;
        } else {
            (pred[i] == 1 ? cm.fp : cm.tn) += 1;
        }
    }
    return cm;
}

MetricSet metrics(const ConfusionMatrix& cm) {
    MetricSet m;
    auto ratio = [](std::int64_t num, std::int64_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
    m.fpr = ratio(cm.fp, cm.fp + cm.tn);
    m.accuracy = ratio(cm.tp + cm.tn, cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.npv = ratio(cm.tn, cm.tn + cm.fn);
    return m;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const int> truth) {
    if (scores.size() != truth.size()) {
        throw std::invalid_argument("roc_curve: score/truth length mismatch");
    }
    require_binary(truth, "roc_curve");
    std::int64_t pos = 0;
    for (int y : truth) pos += y;
    const std::int64_t neg = static_cast<std::int64_t>(truth.size()) - pos;
    if (pos == 0 || neg == 0) {
        throw std::invalid_argument("roc_curve: both classes must be present");
    }

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == s) {
            (truth[order[j]] == 1 ? tp : fp) += 1;
            ++j;
        }
        curve.points.push_back({s, static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
        i = j;
    }
    for (std::size_t k = 1; k < curve.points.size(); ++k) {
        const RocPoint& a = curve.points[k - 1];
        const RocPoint& b = curve.points[k];
        curve.auc += (b.fpr - a.fpr) * (a.tpr + b.tpr) / 2.0;
    }
    return curve;
}

std::string RocCurve::to_csv() const {
    std::string out = "threshold,fpr,tpr\n";
    for (const RocPoint& p : points) {
        out += format_double(p.threshold);
        out += ',';
        out += format_double(p.fpr);
        out += ',';
        out += format_double(p.tpr);
        out += '\n';
    }
    return out;
}

AveragedConfusion average_confusion(std::span<const ConfusionMatrix> matrices) {
    if (matrices.empty()) throw std::invalid_argument("average_confusion: no matrices");
    AveragedConfusion avg;
    for (const ConfusionMatrix& cm : matrices) {
        avg.tp += static_cast<double>(cm.tp);
        avg.tn += static_cast<double>(cm.tn);
        avg.fp += static_cast<double>(cm.fp);
        avg.fn += static_cast<double>(cm.fn);
    }
    const double k = static_cast<double>(matrices.size());
    avg.tp /= k;
    avg.tn /= k;
    avg.fp /= k;
    avg.fn /= k;
    return avg;
}

std::string AveragedConfusion::to_csv() const {
    std::string out = ",pred_0,pred_1\n";
    out += "actual_0," + format_double(tn) + ',' + format_double(fp) + '\n';
    out += "actual_1," + format_double(fn) + ',' + format_double(tp) + '\n';
    return out;
}

std::string to_string(CrossValMode mode) {
    return mode == CrossValMode::Sound ? "sound" : "paper-faithful";
}

std::optional<CrossValMode> parse_mode(const std::string& text) {
    if (text == "sound") return CrossValMode::Sound;
    if (text == "paper-faithful") return CrossValMode::PaperFaithful;
    return std::nullopt;
}

std::size_t crossval_population(const Dataset& samples, const CrossValConfig& config,
                                CrossValMode mode) {
    if (mode == CrossValMode::Sound || !config.use_smote) return samples.n_rows();
    std::size_t count1 = 0;
    for (int y : samples.labels) count1 += static_cast<std::size_t>(y);
    const std::size_t count0 = samples.n_rows() - count1;
    const std::size_t minority = std::min(count0, count1);
    const std::size_t majority = std::max(count0, count1);
    const auto target = static_cast<std::size_t>(
        std::llround(config.smote.target_ratio * static_cast<double>(majority)));
    return samples.n_rows() + (target > minority ? target - minority : 0);
}

CrossValReport cross_validate(const Dataset& samples, const FoldPlan& plan,
                              const CrossValConfig& config, CrossValMode mode) {
    if (plan.n_folds < 2) throw std::invalid_argument("cross_validate: need at least 2 folds");
    if (samples.n_rows() == 0) throw std::invalid_argument("cross_validate: empty dataset");
    if (config.window < 1) throw std::invalid_argument("cross_validate: window must be >= 1");
    if (mode == CrossValMode::PaperFaithful && config.window != 1) {
        throw std::invalid_argument(
            "cross_validate: paper-faithful mode folds pre-augmented rows and "
            "supports window=1 only");
    }
    if (!has_both_classes(samples.labels)) {
        throw std::invalid_argument("cross_validate: dataset holds a single class");
    }
    const std::size_t expected = crossval_population(samples, config, mode);
    if (plan.assignments.size() != expected) {
        throw std::invalid_argument("cross_validate: fold plan covers " +
                                    std::to_string(plan.assignments.size()) + " rows, expected " +
                                    std::to_string(expected));
    }

    const std::size_t f = samples.n_features();
    const std::size_t n_original = samples.n_rows();

    // paper-faithful: one global transform, folds see the augmented matrix
    std::vector<double> aug_features;
    std::vector<int> aug_labels;
    if (mode == CrossValMode::PaperFaithful) {
        aug_features = samples.features;
        aug_labels = samples.labels;
        if (config.standardize) {
            const Standardizer global = fit_standardizer(aug_features, n_original, f);
            apply_standardizer(global, aug_features, n_original);
        }
        if (config.use_smote) {
            SmoteConfig sc = config.smote;
            sc.seed = derive_seed(plan.seed, kGlobalSmoteSalt);
            SmoteResult res = smote(aug_features, aug_labels, f, sc);
            aug_features = std::move(res.features);
            aug_labels = std::move(res.labels);
        }
    }

    const std::vector<FoldSplit> splits = kfold_split(plan);
    const int k = plan.n_folds;

    auto run_sound_fold = [&](int fold) {
        const FoldSplit& split = splits[static_cast<std::size_t>(fold)];
        const std::uint64_t fold_seed = derive_seed(plan.seed, static_cast<std::uint64_t>(fold));
        Dataset train_d = subset(samples, split.train);
        Dataset test_d = subset(samples, split.test);
        if (!has_both_classes(train_d.labels)) {
            throw std::invalid_argument("cross_validate: fold " + std::to_string(fold) +
                                        " training data lacks both classes");
        }
        if (config.standardize) {
            const Standardizer st = fit_standardizer(train_d.features, train_d.n_rows(), f);
            apply_standardizer(st, train_d.features, train_d.n_rows());
            apply_standardizer(st, test_d.features, test_d.n_rows());
        }
        SequenceBatch seq_train = make_sequences(train_d, config.window);
        const SequenceBatch seq_test = make_sequences(test_d, config.window);
        if (config.use_smote) {
            SmoteConfig sc = config.smote;
            sc.seed = derive_seed(fold_seed, kFoldSmoteSalt);
            SmoteResult res = smote(seq_train.inputs, seq_train.labels,
                                    config.window * f, sc);
            seq_train.inputs = std::move(res.features);
            seq_train.labels = std::move(res.labels);
            seq_train.n_sequences = seq_train.labels.size();
        }
        TrainConfig tc = config.train;
        tc.seed = fold_seed;
        TrainResult tr = train(seq_train, tc);
        const std::vector<double> probs = kernels::batch_probabilities(tr.model.params, seq_test);

        FoldReport report;
        report.fold_index = fold;
        report.eval = make_eval_base(probs, seq_test.labels);
        report.curve = std::move(tr.curve);
        return report;
    };

    auto run_paper_fold = [&](int fold) {
        const FoldSplit& split = splits[static_cast<std::size_t>(fold)];
        const std::uint64_t fold_seed = derive_seed(plan.seed, static_cast<std::uint64_t>(fold));
        std::vector<double> tr_feats;
        std::vector<int> tr_labels;
        tr_feats.reserve(split.train.size() * f);
        tr_labels.reserve(split.train.size());
        for (std::size_t idx : split.train) {
            tr_feats.insert(tr_feats.end(), aug_features.begin() + static_cast<std::ptrdiff_t>(idx * f),
                            aug_features.begin() + static_cast<std::ptrdiff_t>((idx + 1) * f));
            tr_labels.push_back(aug_labels[idx]);
        }
        if (!has_both_classes(tr_labels)) {
            throw std::invalid_argument("cross_validate: fold " + std::to_string(fold) +
                                        " training data lacks both classes");
        }
        const SequenceBatch seq_train = wrap_sequences(std::move(tr_feats), std::move(tr_labels), f);
        TrainConfig tc = config.train;
        tc.seed = fold_seed;
        TrainResult tr = train(seq_train, tc);

        std::vector<double> te_feats;
        std::vector<int> te_labels;
        std::vector<char> is_original;
        te_feats.reserve(split.test.size() * f);
        for (std::size_t idx : split.test) {
            te_feats.insert(te_feats.end(), aug_features.begin() + static_cast<std::ptrdiff_t>(idx * f),
                            aug_features.begin() + static_cast<std::ptrdiff_t>((idx + 1) * f));
            te_labels.push_back(aug_labels[idx]);
            is_original.push_back(idx < n_original ? 1 : 0);
        }
        const SequenceBatch seq_test = wrap_sequences(std::move(te_feats), te_labels, f);
        const std::vector<double> probs = kernels::batch_probabilities(tr.model.params, seq_test);

        FoldReport report;
        report.fold_index = fold;
        report.eval = make_eval_base(probs, te_labels);
        std::vector<double> orig_probs;
        std::vector<int> orig_labels;
        for (std::size_t i = 0; i < te_labels.size(); ++i) {
            if (is_original[i]) {
                orig_probs.push_back(probs[i]);
                orig_labels.push_back(te_labels[i]);
            }
        }
        if (!orig_labels.empty()) report.originals = make_eval_base(orig_probs, orig_labels);
        report.curve = std::move(tr.curve);
        return report;
    };

    CrossValReport report;
    report.mode = mode;
    report.folds.resize(static_cast<std::size_t>(k));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(k));

    auto run_fold = [&](int fold) {
        try {
            report.folds[static_cast<std::size_t>(fold)] =
                mode == CrossValMode::Sound ? run_sound_fold(fold) : run_paper_fold(fold);
        } catch (...) {
            errors[static_cast<std::size_t>(fold)] = std::current_exception();
        }
    };
#ifdef _OPENMP
    if (config.jobs > 1) {
#pragma omp parallel for num_threads(config.jobs) schedule(dynamic)
        for (int fold = 0; fold < k; ++fold) run_fold(fold);
    } else {
        for (int fold = 0; fold < k; ++fold) run_fold(fold);
    }
#else
    for (int fold = 0; fold < k; ++fold) run_fold(fold);
#endif
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    std::vector<double> accuracies;
    std::vector<ConfusionMatrix> cms;
    std::vector<double> orig_accuracies;
    for (const FoldReport& fr : report.folds) {
        accuracies.push_back(fr.eval.metric_set.accuracy.value());
        cms.push_back(fr.eval.cm);
        if (fr.originals && fr.originals->metric_set.accuracy) {
            orig_accuracies.push_back(*fr.originals->metric_set.accuracy);
        }
    }
    const MeanStd acc = mean_std(accuracies);
    report.mean_accuracy = acc.mean;
    report.std_accuracy = acc.stddev;
    report.avg_confusion = average_confusion(cms);
    if (!orig_accuracies.empty()) {
        const MeanStd orig = mean_std(orig_accuracies);
        report.mean_accuracy_originals = orig.mean;
        report.std_accuracy_originals = orig.stddev;
    }
    return report;
}

std::string CrossValReport::to_json() const {
    nlohmann::json j;
    j["mode"] = to_string(mode);
    j["n_folds"] = folds.size();
    j["mean_accuracy"] = mean_accuracy;
    j["std_accuracy"] = std_accuracy;
    j["avg_confusion"] = {{"tp", avg_confusion.tp},
                          {"tn", avg_confusion.tn},
                          {"fp", avg_confusion.fp},
                          {"fn", avg_confusion.fn}};
    if (mean_accuracy_originals) {
        j["originals_base"] = {{"mean_accuracy", *mean_accuracy_originals},
                               {"std_accuracy", *std_accuracy_originals}};
    }
    j["folds"] = nlohmann::json::array();
    for (const FoldReport& fr : folds) {
        nlohmann::json jf = base_json(fr.eval);
        jf["fold_index"] = fr.fold_index;
        if (fr.originals) jf["originals"] = base_json(*fr.originals);
        nlohmann::json curve = nlohmann::json::array();
        for (const EpochStats& e : fr.curve.entries) {
            curve.push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}});
        }
        jf["train_curve"] = std::move(curve);
        j["folds"].push_back(std::move(jf));
    }
    return j.dump(2);
}

}  // namespace tornadocast
