#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tornadocast/lstm.hpp"
#include "tornadocast/preprocess.hpp"

namespace tornadocast {

struct TrainConfig {
    int hidden_size = 64;
    double dropout_rate = 0.2;
    int epochs = 10;
    std::size_t batch_size = 128;
    AdamConfig adam;
    double clip_norm = 0.0;  // <= 0 disables clipping
    int patience = 0;        // early stopping off by default; > 0 stops after
                             // that many epochs without a loss improvement
    std::uint64_t seed = 42;
};

struct EpochStats {
    int epoch = 0;  // 1-based, matching plot axes
    double loss = 0.0;
    double accuracy = 0.0;
};

struct TrainingCurve {
    std::vector<EpochStats> entries;

    std::string to_csv() const;  // epoch,loss,accuracy
};

/// A trained model: parameters plus everything scoring needs to
/// reproduce the training-time input transform.
struct LstmModel {
    LstmParams params;
    std::size_t window = 1;
    double dropout_rate = 0.0;
    std::vector<std::string> feature_names;
    Standardizer standardizer;  // empty means raw inputs
    double train_accuracy = 0.0;  // on the training batch, final params, dropout off

    bool has_standardizer() const { return !standardizer.means.empty(); }

    std::string to_json() const;
    static LstmModel from_json(const std::string& text);
    void save(const std::string& path) const;
    static LstmModel load(const std::string& path);
};

struct TrainResult {
    LstmModel model;
    TrainingCurve curve;
};

/// Epoch/mini-batch loop: seeded reshuffle each epoch, mean-gradient Adam
/// step per mini-batch, one curve entry per epoch (mean loss, accuracy at
/// threshold 0.5 over the epoch's training-mode forward passes).
/// Throws DivergenceError with the epoch and batch index on non-finite loss.
TrainResult train(const SequenceBatch& batch, const TrainConfig& config);

struct ConvergenceDiag {
    bool converging = false;
    double loss_delta = 0.0;      // last - first
    double accuracy_delta = 0.0;  // last - first
};

/// True iff the curve ends with loss no worse and accuracy no worse
/// than it started.
ConvergenceDiag curve_is_converging(const TrainingCurve& curve);

}  // namespace tornadocast
