#include "tornadocast/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tornadocast/csv.hpp"
#include "tornadocast/errors.hpp"
#include "tornadocast/kernels.hpp"
#include "tornadocast/rng.hpp"

namespace tornadocast {

namespace {

constexpr std::uint64_t kInitSalt = 0;

std::uint64_t epoch_seed(const TrainConfig& config, int epoch) {
    return derive_seed(config.seed, 1 + static_cast<std::uint64_t>(epoch));
}

}  // namespace

TrainResult train(const SequenceBatch& batch, const TrainConfig& config) {
    const std::size_t n = batch.n_sequences;
    if (n == 0) throw std::invalid_argument("train: empty batch");
    if (config.hidden_size < 1) throw std::invalid_argument("train: hidden_size must be >= 1");
    if (config.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
    if (config.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
    const bool any0 = std::any_of(batch.labels.begin(), batch.labels.end(),
                                  [](int y) { return y == 0; });
    const bool any1 = std::any_of(batch.labels.begin(), batch.labels.end(),
                                  [](int y) { return y == 1; });
    if (!any0 || !any1) throw std::invalid_argument("train: both classes must be present");

    TrainResult result;
    result.model.params =
        init_params(static_cast<int>(batch.n_features), config.hidden_size,
                    derive_seed(config.seed, kInitSalt));
    result.model.window = batch.window;
    result.model.dropout_rate = config.dropout_rate;

    LstmParams& params = result.model.params;
    AdamState adam;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint64_t> mask_seeds(n);

    int stale_epochs = 0;
    double best_loss = std::numeric_limits<double>::infinity();
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::uint64_t eseed = epoch_seed(config, epoch);
        Rng shuffle_rng(eseed);
        shuffle_rng.shuffle(order);
        for (std::size_t i = 0; i < n; ++i) mask_seeds[i] = derive_seed(eseed, i);

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += config.batch_size, ++batch_index) {
            const std::size_t count = std::min(config.batch_size, n - start);
            const kernels::BatchGradients bg = kernels::batch_gradients(
                params, batch, std::span(order).subspan(start, count),
                std::span(mask_seeds).subspan(start, count), config.dropout_rate);
            if (!std::isfinite(bg.loss_sum)) {
                throw DivergenceError("training diverged: non-finite loss at epoch " +
                                          std::to_string(epoch + 1) + ", batch " +
                                          std::to_string(batch_index + 1),
                                      epoch + 1, batch_index + 1);
            }
            loss_sum += bg.loss_sum;
            correct += bg.correct;

            LstmParams grad = bg.grad_sum;
            const double scale = 1.0 / static_cast<double>(count);
            for (double& g : grad.flat()) g *= scale;
            clip_gradients(grad, config.clip_norm);
            adam_step(params, grad, adam, config.adam);
        }

        EpochStats stats;
        stats.epoch = epoch + 1;
        stats.loss = loss_sum / static_cast<double>(n);
        stats.accuracy = static_cast<double>(correct) / static_cast<double>(n);
        result.curve.entries.push_back(stats);

        if (config.patience > 0) {
            if (stats.loss < best_loss) {
                best_loss = stats.loss;
                stale_epochs = 0;
            } else if (++stale_epochs >= config.patience) {
                break;
            }
        }
    }

    // frozen-parameter pass, dropout off — the number `score` reproduces
    const std::vector<double> probs = kernels::batch_probabilities(params, batch);
    std::int64_t hits = 0;
    for (std::size_t i = 0; i < n; ++i) {
        hits += (probs[i] >= 0.5 ? 1 : 0) == batch.labels[i] ? 1 : 0;
    }
    result.model.train_accuracy = static_cast<double>(hits) / static_cast<double>(n);
    return result;
}

ConvergenceDiag curve_is_converging(const TrainingCurve& curve) {
    if (curve.entries.size() < 2) {
        throw std::invalid_argument("curve_is_converging needs at least 2 epochs");
    }
    const EpochStats& first = curve.entries.front();
    const EpochStats& last = curve.entries.back();
    ConvergenceDiag diag;
    diag.loss_delta = last.loss - first.loss;
    diag.accuracy_delta = last.accuracy - first.accuracy;
    diag.converging = diag.loss_delta <= 0.0 && diag.accuracy_delta >= 0.0;
    return diag;
}

std::string TrainingCurve::to_csv() const {
    std::string out = "epoch,loss,accuracy\n";
    for (const EpochStats& e : entries) {
        out += std::to_string(e.epoch);
        out += ',';
        out += format_double(e.loss);
        out += ',';
        out += format_double(e.accuracy);
        out += '\n';
    }
    return out;
}

std::string LstmModel::to_json() const {
    nlohmann::json j;
    j["format"] = "tornadocast-model";
    j["version"] = 1;
    j["hidden"] = params.hidden();
    j["n_features"] = params.n_features();
    j["window"] = window;
    j["dropout_rate"] = dropout_rate;
    j["feature_names"] = feature_names;
    j["train_accuracy"] = train_accuracy;
    j["params"] = std::vector<double>(params.flat().begin(), params.flat().end());
    if (has_standardizer()) {
        j["standardizer"] = nlohmann::json::parse(standardizer.to_json());
    } else {
        j["standardizer"] = nullptr;
    }
    return j.dump(2);
}

LstmModel LstmModel::from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaError(std::string("model file is not valid JSON: ") + e.what());
    }
    if (j.value("format", "") != "tornadocast-model") {
        throw SchemaError("not a tornadocast model file");
    }
    if (j.value("version", 0) != 1) {
        throw SchemaError("unsupported model version " + j.value("version", nlohmann::json()).dump());
    }
    LstmModel model;
    const int hidden = j.at("hidden").get<int>();
    const int n_features = j.at("n_features").get<int>();
    if (hidden < 1 || n_features < 1) throw SchemaError("model header: non-positive shape");
    model.params = LstmParams(n_features, hidden);
    const auto flat = j.at("params").get<std::vector<double>>();
    if (flat.size() != model.params.size()) {
        throw SchemaError("model params length " + std::to_string(flat.size()) +
                          " does not match header shape (expected " +
                          std::to_string(model.params.size()) + ")");
    }
    std::copy(flat.begin(), flat.end(), model.params.flat().begin());
    model.window = j.at("window").get<std::size_t>();
    model.dropout_rate = j.at("dropout_rate").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    model.train_accuracy = j.value("train_accuracy", 0.0);
    if (!j.at("standardizer").is_null()) {
        model.standardizer = Standardizer::from_json(j.at("standardizer").dump());
        if (model.standardizer.n_features() != static_cast<std::size_t>(n_features)) {
            throw SchemaError("standardizer width does not match model feature count");
        }
    }
    if (!model.feature_names.empty() &&
        model.feature_names.size() != static_cast<std::size_t>(n_features)) {
        throw SchemaError("feature name list does not match model feature count");
    }
    return model;
}

void LstmModel::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write model file: " + path);
    out << to_json() << '\n';
    if (!out.good()) throw FileError("failed writing model file: " + path);
}

LstmModel LstmModel::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json(buf.str());
}

}  // namespace tornadocast
