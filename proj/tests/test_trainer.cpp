#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "temp_dir.hpp"
#include "tornadocast/errors.hpp"
#include "tornadocast/kernels.hpp"
#include "tornadocast/preprocess.hpp"
#include "tornadocast/rng.hpp"
#include "tornadocast/trainer.hpp"

using namespace tornadocast;

namespace {

// two linearly separated blobs wrapped as window-1 sequences
SequenceBatch blob_batch(std::size_t n, std::size_t f, double gap, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> features;
    std::vector<int> labels;
    for (std::size_t i = 0; i < n; ++i) {
        const int y = static_cast<int>(rng.next_below(2));
        const double shift = y == 1 ? gap / 2.0 : -gap / 2.0;
        for (std::size_t c = 0; c < f; ++c) features.push_back(shift + rng.next_normal());
        labels.push_back(y);
    }
    return wrap_sequences(std::move(features), std::move(labels), f);
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.hidden_size = 6;
    cfg.epochs = 4;
    cfg.batch_size = 16;
    cfg.dropout_rate = 0.2;
    cfg.seed = 7;
    return cfg;
}

}  // namespace

TEST_CASE("train emits one curve entry per epoch, 1-based") {
    const SequenceBatch batch = blob_batch(80, 3, 3.0, 1);
    TrainConfig cfg = small_config();
    const TrainResult r = train(batch, cfg);

    REQUIRE(r.curve.entries.size() == 4);
    for (int e = 0; e < 4; ++e) {
        CHECK(r.curve.entries[static_cast<std::size_t>(e)].epoch == e + 1);
        CHECK(std::isfinite(r.curve.entries[static_cast<std::size_t>(e)].loss));
        CHECK(r.curve.entries[static_cast<std::size_t>(e)].accuracy >= 0.0);
        CHECK(r.curve.entries[static_cast<std::size_t>(e)].accuracy <= 1.0);
    }
    CHECK(r.model.params.hidden() == 6);
    CHECK(r.model.params.n_features() == 3);
    CHECK(r.model.window == 1);
    CHECK(r.model.train_accuracy >= 0.0);
    CHECK(r.model.train_accuracy <= 1.0);
}

TEST_CASE("zero epochs trains nothing but still scores the init parameters") {
    const SequenceBatch batch = blob_batch(40, 2, 2.0, 3);
    TrainConfig cfg = small_config();
    cfg.epochs = 0;
    const TrainResult r = train(batch, cfg);
    CHECK(r.curve.entries.empty());
    CHECK(r.model.train_accuracy >= 0.0);

    // the parameters are exactly the seeded init
    const LstmParams want = init_params(2, cfg.hidden_size, derive_seed(cfg.seed, 0));
    CHECK(std::equal(r.model.params.flat().begin(), r.model.params.flat().end(),
                     want.flat().begin()));
}

TEST_CASE("training is bit-reproducible from its seed") {
    const SequenceBatch batch = blob_batch(60, 3, 2.5, 9);
    TrainConfig cfg = small_config();
    const TrainResult a = train(batch, cfg);
    const TrainResult b = train(batch, cfg);

    CHECK(std::equal(a.model.params.flat().begin(), a.model.params.flat().end(),
                     b.model.params.flat().begin()));
    REQUIRE(a.curve.entries.size() == b.curve.entries.size());
    for (std::size_t i = 0; i < a.curve.entries.size(); ++i) {
        CHECK(a.curve.entries[i].loss == b.curve.entries[i].loss);
        CHECK(a.curve.entries[i].accuracy == b.curve.entries[i].accuracy);
    }
    CHECK(a.model.train_accuracy == b.model.train_accuracy);

    cfg.seed = 8;
    const TrainResult c = train(batch, cfg);
    CHECK(!std::equal(a.model.params.flat().begin(), a.model.params.flat().end(),
                      c.model.params.flat().begin()));
}

TEST_CASE("training on separable blobs learns the labels") {
    const SequenceBatch batch = blob_batch(200, 4, 5.0, 11);
    TrainConfig cfg = small_config();
    cfg.epochs = 30;
    cfg.dropout_rate = 0.0;
    cfg.adam.learning_rate = 0.01;
    const TrainResult r = train(batch, cfg);

    CHECK(r.model.train_accuracy > 0.95);
    const ConvergenceDiag diag = curve_is_converging(r.curve);
    CHECK(diag.converging);
    CHECK(diag.loss_delta < 0.0);

    // final-parameter accuracy is the dropout-off batch accuracy
    const auto probs = kernels::batch_probabilities(r.model.params, batch);
    std::int64_t correct = 0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        correct += (probs[i] >= 0.5 ? 1 : 0) == batch.labels[i] ? 1 : 0;
    }
    CHECK(r.model.train_accuracy ==
          static_cast<double>(correct) / static_cast<double>(batch.n_sequences));
}

TEST_CASE("an absurd learning rate raises DivergenceError with position info") {
    const SequenceBatch batch = blob_batch(64, 3, 2.0, 13);
    TrainConfig cfg = small_config();
    cfg.adam.learning_rate = 1e308;  // drives parameters to +-inf, then NaN loss

    bool thrown = false;
    try {
        train(batch, cfg);
    } catch (const DivergenceError& e) {
        thrown = true;
        CHECK(e.epoch >= 1);
        CHECK(e.epoch <= cfg.epochs);
        CHECK(e.batch >= 1);
        CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
    }
    CHECK(thrown);
}

TEST_CASE("patience stops training once the loss stalls") {
    const SequenceBatch batch = blob_batch(100, 3, 4.0, 17);
    TrainConfig cfg = small_config();
    cfg.epochs = 60;
    cfg.patience = 3;
    cfg.adam.learning_rate = 0.0;  // parameters frozen: the loss cannot keep improving
    const TrainResult r = train(batch, cfg);
    CHECK(r.curve.entries.size() < 60);  // stopped early
    CHECK(r.curve.entries.size() >= 4);  // not before patience could trigger

    // patience off runs the full schedule
    cfg.patience = 0;
    cfg.epochs = 5;
    CHECK(train(batch, cfg).curve.entries.size() == 5);
}

TEST_CASE("gradient clipping changes the trajectory but keeps it finite") {
    const SequenceBatch batch = blob_batch(60, 3, 3.0, 19);
    TrainConfig cfg = small_config();
    cfg.adam.learning_rate = 0.05;
    const TrainResult plain = train(batch, cfg);
    cfg.clip_norm = 0.01;
    const TrainResult clipped = train(batch, cfg);

    CHECK(clipped.model.params.all_finite());
    CHECK(!std::equal(plain.model.params.flat().begin(), plain.model.params.flat().end(),
                      clipped.model.params.flat().begin()));
}

TEST_CASE("curve_is_converging compares the curve's ends") {
    TrainingCurve good;
    good.entries = {{1, 1.0, 0.5}, {2, 0.7, 0.6}, {3, 0.4, 0.8}};
    CHECK(curve_is_converging(good).converging);
    CHECK(curve_is_converging(good).loss_delta == doctest::Approx(-0.6));
    CHECK(curve_is_converging(good).accuracy_delta == doctest::Approx(0.3));

    TrainingCurve bad;
    bad.entries = {{1, 0.4, 0.8}, {2, 0.9, 0.5}};
    CHECK_FALSE(curve_is_converging(bad).converging);

    TrainingCurve too_short;  // the diagnostic needs two endpoints
    CHECK_THROWS_AS(curve_is_converging(too_short), std::invalid_argument);
    too_short.entries = {{1, 0.5, 0.5}};
    CHECK_THROWS_AS(curve_is_converging(too_short), std::invalid_argument);
}

TEST_CASE("training curve serializes as epoch,loss,accuracy CSV") {
    TrainingCurve curve;
    curve.entries = {{1, 0.75, 0.5}, {2, 0.5, 0.625}};
    const std::string csv = curve.to_csv();
    CHECK(csv.find("epoch,loss,accuracy\n") == 0);
    CHECK(csv.find("1,0.75,0.5\n") != std::string::npos);
    CHECK(csv.find("2,0.5,0.625\n") != std::string::npos);
}

TEST_CASE("model JSON and file round-trips preserve every field") {
    const SequenceBatch batch = blob_batch(50, 3, 2.0, 23);
    TrainConfig cfg = small_config();
    cfg.epochs = 2;
    TrainResult r = train(batch, cfg);
    r.model.feature_names = {"temp_avg", "humidity", "pressure"};
    r.model.standardizer.means = {1.0, 2.0, 3.0};
    r.model.standardizer.std_devs = {0.5, 1.5, 2.5};

    const LstmModel back = LstmModel::from_json(r.model.to_json());
    CHECK(std::equal(back.params.flat().begin(), back.params.flat().end(),
                     r.model.params.flat().begin()));
    CHECK(back.window == r.model.window);
    CHECK(back.dropout_rate == r.model.dropout_rate);
    CHECK(back.feature_names == r.model.feature_names);
    CHECK(back.standardizer.means == r.model.standardizer.means);
    CHECK(back.standardizer.std_devs == r.model.standardizer.std_devs);
    CHECK(back.train_accuracy == r.model.train_accuracy);

    TempDir tmp("model");
    const std::string path = tmp.file("model.json");
    r.model.save(path);
    const LstmModel loaded = LstmModel::load(path);
    CHECK(std::equal(loaded.params.flat().begin(), loaded.params.flat().end(),
                     r.model.params.flat().begin()));
    CHECK(loaded.feature_names == r.model.feature_names);
}

TEST_CASE("model deserialization rejects malformed input") {
    CHECK_THROWS_AS(LstmModel::from_json("{}"), SchemaError);
    CHECK_THROWS_AS(LstmModel::from_json("not json"), SchemaError);
    CHECK_THROWS_AS(LstmModel::load("/nonexistent/model.json"), FileError);

    const SequenceBatch batch = blob_batch(30, 2, 2.0, 29);
    TrainConfig cfg = small_config();
    cfg.epochs = 1;
    const TrainResult r = train(batch, cfg);

    // wrong version
    std::string text = r.model.to_json();
    const auto pos = text.find("\"version\": 1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 12, "\"version\": 9");
    CHECK_THROWS_AS(LstmModel::from_json(text), SchemaError);

    // truncated parameter vector
    std::string short_text = r.model.to_json();
    const auto dense = short_text.find("\"format\"");
    REQUIRE(dense != std::string::npos);
    CHECK_THROWS_AS(LstmModel::from_json(short_text.substr(0, short_text.size() / 2)),
                    SchemaError);
}
