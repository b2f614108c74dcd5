#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tornadocast/csv.hpp"
#include "tornadocast/dataio.hpp"
#include "tornadocast/errors.hpp"
#include "tornadocast/evaluator.hpp"
#include "tornadocast/kernels.hpp"
#include "tornadocast/parallel.hpp"
#include "tornadocast/preprocess.hpp"
#include "tornadocast/rng.hpp"
#include "tornadocast/synth.hpp"
#include "tornadocast/trainer.hpp"

namespace fs = std::filesystem;
using namespace tornadocast;

namespace {

struct PrepOpts {
    std::string weather;
    std::string events;
    std::string out;
    double sparsity = 0.5;
};

struct SynthOpts {
    std::string out;
    std::size_t samples = 5000;
    std::size_t features = 16;
    double rate = 0.023;
    double separability = 4.0;
    std::uint64_t seed = 42;
    bool fixture = false;
};

struct TrainOpts {
    std::string data;
    std::string out;
    int hidden = 64;
    double dropout = 0.2;
    int epochs = 10;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double clip_norm = 0.0;
    int patience = 0;
    std::size_t window = 1;
    std::uint64_t seed = 42;
    bool no_standardize = false;
    bool no_smote = false;
    int smote_k = 5;
    double smote_ratio = 1.0;
    int threads = 1;
};

struct ScoreOpts {
    std::string model;
    std::string data;
    std::string out;
    int threads = 1;
};

struct CrossvalOpts {
    TrainOpts train;  // data/out/hyperparameters reused
    int folds = 10;
    std::string mode = "sound";
    int jobs = 1;
};

struct AppendOpts {
    std::string data;
    std::string rows;
    std::string out;
};

std::string trim_ws(std::string s) {
    const auto not_ws = [](unsigned char c) { return std::isspace(c) == 0; };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_ws));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_ws).base(), s.end());
    return s;
}

std::vector<std::pair<std::string, std::string>> read_config_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileError("cannot open config file: " + path);
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string text = trim_ws(line);
        if (text.empty() || text.front() == '#') continue;
        const std::size_t eq = text.find('=');
        if (eq == std::string::npos) {
            throw std::invalid_argument(path + ':' + std::to_string(line_no) +
                                        ": expected key=value");
        }
        pairs.emplace_back(trim_ws(text.substr(0, eq)), trim_ws(text.substr(eq + 1)));
    }
    return pairs;
}

// CLI11 only consults config files on the root app, never on subcommands, so
// --config is resolved before parsing: every key the command line does not
// already mention is spliced in as a "--key=value" token right after the
// subcommand name. Typed options therefore always win over file values.
std::vector<std::string> splice_config_args(const CLI::App& app, std::vector<std::string> args) {
    std::size_t sub_index = 0;
    const CLI::App* sub = nullptr;
    for (std::size_t i = 0; i < args.size() && sub == nullptr; ++i) {
        sub = app.get_subcommand_no_throw(args[i]);
        sub_index = i;
    }
    if (sub == nullptr) return args;

    std::string config_path;
    std::set<std::string> given;
    for (std::size_t i = sub_index + 1; i < args.size(); ++i) {
        const std::string& token = args[i];
        if (token.rfind("--", 0) != 0) continue;
        const std::string name = token.substr(0, token.find('='));
        given.insert(name);
        if (name != "--config") continue;
        if (token.size() > name.size()) {
            config_path = token.substr(name.size() + 1);
        } else if (i + 1 < args.size()) {
            config_path = args[i + 1];
        }
    }
    if (config_path.empty()) return args;

    std::vector<std::string> spliced;
    for (const auto& [key, value] : read_config_pairs(config_path)) {
        const std::string name = "--" + key;
        if (name == "--config" || given.contains(name)) continue;
        if (sub->get_option_no_throw(name) == nullptr) {
            throw std::invalid_argument(config_path + ": unknown option '" + key + '\'');
        }
        spliced.push_back(name + '=' + value);
    }
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub_index) + 1, spliced.begin(),
                spliced.end());
    return args;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw FileError("cannot write " + path.string());
    out << text;
    if (!out.good()) throw FileError("failed writing " + path.string());
}

void print_summary(const DatasetSummary& summary) {
    std::cout << "year\trows\ttornado\n";
    for (const auto& [year, rows] : summary.rows_per_year) {
        const auto it = summary.tornado_per_year.find(year);
        const std::int64_t storms = it == summary.tornado_per_year.end() ? 0 : it->second;
        std::cout << year << '\t' << rows << '\t' << storms << '\n';
    }
    std::cout << "total rows: " << summary.total_rows << '\n';
    std::cout << "tornado rows: " << summary.total_positives << '\n';
    std::cout << "features: " << summary.n_features << '\n';
}

TrainConfig to_train_config(const TrainOpts& o) {
    TrainConfig tc;
    tc.hidden_size = o.hidden;
    tc.dropout_rate = o.dropout;
    tc.epochs = o.epochs;
    tc.batch_size = o.batch_size;
    tc.adam.learning_rate = o.learning_rate;
    tc.clip_norm = o.clip_norm;
    tc.patience = o.patience;
    tc.seed = o.seed;
    return tc;
}

void run_prep(const PrepOpts& o) {
    fs::create_directories(o.out);
    const CsvTable raw = load_weather_csv(o.weather);
    auto [table, column_report] = clean_columns(raw, o.sparsity);
    impute_mean(table);
    parse_dates(table);
    const std::vector<TornadoEvent> events = load_events_csv(o.events);
    auto [dataset, event_report] = join_label(table, events);
    const DatasetSummary summary = summarize(dataset);

    save_dataset((fs::path(o.out) / "dataset.csv").string(), dataset);
    write_text(fs::path(o.out) / "prep_report.json",
               drop_reports_to_json(column_report, event_report, summary));
    print_summary(summary);
    std::cout << "dropped columns: " << column_report.dropped.size() << '\n';
    std::cout << "unmatched events: " << event_report.count << '\n';
    std::cout << "wrote " << (fs::path(o.out) / "dataset.csv").string() << '\n';
}

void run_synth(const SynthOpts& o) {
    fs::create_directories(o.out);
    if (o.fixture) {
        const fs::path weather = fs::path(o.out) / "weather.csv";
        const fs::path events = fs::path(o.out) / "events.csv";
        write_archive_fixture(weather.string(), events.string(), o.seed);
        std::cout << "wrote " << weather.string() << " and " << events.string() << '\n';
        return;
    }
    SynthConfig config;
    config.n_samples = o.samples;
    config.n_features = o.features;
    config.tornado_rate = o.rate;
    config.separability = o.separability;
    config.seed = o.seed;
    const SynthResult result = generate(config);
    save_dataset((fs::path(o.out) / "dataset.csv").string(), result.samples);
    write_text(fs::path(o.out) / "truth.json", result.truth.to_json() + "\n");
    std::cout << "samples: " << result.truth.n_samples
              << "  positives: " << result.truth.n_positives << '\n';
    std::cout << "bayes accuracy: " << format_double(result.truth.bayes_accuracy)
              << "  bayes auc: " << format_double(result.truth.bayes_auc) << '\n';
}

void run_train(const TrainOpts& o) {
    parallel::set_max_threads(o.threads);
    fs::create_directories(o.out);
    Dataset dataset = load_dataset(o.data);

    Standardizer st;
    if (!o.no_standardize) {
        st = fit_standardizer(dataset.features, dataset.n_rows(), dataset.n_features());
        apply_standardizer(st, dataset.features, dataset.n_rows());
    }
    SequenceBatch seq = make_sequences(dataset, o.window);
    if (!o.no_smote) {
        SmoteConfig sc;
        sc.k_neighbors = o.smote_k;
        sc.target_ratio = o.smote_ratio;
        sc.seed = derive_seed(o.seed, 0x736d);
        SmoteResult res = smote(seq.inputs, seq.labels, o.window * dataset.n_features(), sc);
        seq.inputs = std::move(res.features);
        seq.labels = std::move(res.labels);
        seq.n_sequences = seq.labels.size();
    }
    TrainResult result = train(seq, to_train_config(o));
    result.model.feature_names = dataset.feature_names;
    result.model.standardizer = st;
    result.model.save((fs::path(o.out) / "model.json").string());
    write_text(fs::path(o.out) / "curve.csv", result.curve.to_csv());

    if (!result.curve.entries.empty()) {
        const EpochStats& last = result.curve.entries.back();
        std::cout << "epoch " << last.epoch << ": loss " << format_double(last.loss)
                  << ", accuracy " << format_double(last.accuracy) << '\n';
    }
    std::cout << "training-set accuracy (final parameters): "
              << format_double(result.model.train_accuracy) << '\n';
    std::cout << "wrote " << (fs::path(o.out) / "model.json").string() << '\n';
}

void run_score(const ScoreOpts& o) {
    parallel::set_max_threads(o.threads);
    fs::create_directories(o.out);
    const LstmModel model = LstmModel::load(o.model);
    const CsvTable raw_header = read_csv(o.data);  // to know whether `result` was present
    const bool labeled =
        !raw_header.header.empty() && raw_header.header.back() == "result";
    Dataset dataset = load_dataset(o.data, /*require_label=*/false);

    if (dataset.n_features() != static_cast<std::size_t>(model.params.n_features())) {
        throw SchemaError("input has " + std::to_string(dataset.n_features()) +
                          " features, model expects " +
                          std::to_string(model.params.n_features()));
    }
    if (!model.feature_names.empty() && model.feature_names != dataset.feature_names) {
        for (std::size_t i = 0; i < model.feature_names.size(); ++i) {
            if (model.feature_names[i] != dataset.feature_names[i]) {
                throw SchemaError("feature column " + std::to_string(i + 1) + " is '" +
                                  dataset.feature_names[i] + "', model expects '" +
                                  model.feature_names[i] + "'");
            }
        }
    }
    if (model.has_standardizer()) {
        apply_standardizer(model.standardizer, dataset.features, dataset.n_rows());
    }
    const SequenceBatch seq = make_sequences(dataset, model.window);
    const std::vector<double> probs = kernels::batch_probabilities(model.params, seq);

    CsvTable out_table = read_csv(o.data);
    if (model.window == 1) {
        out_table.header.push_back("probability");
        out_table.header.push_back("prediction");
        for (std::size_t i = 0; i < out_table.rows.size(); ++i) {
            out_table.rows[i].push_back(format_double(probs[i]));
            out_table.rows[i].push_back(std::to_string(classify(probs[i])));
        }
    } else {
        // window > 1 scores one row per sequence; emit a fresh table
        CsvTable seq_table;
        seq_table.header = {"sequence", "probability", "prediction"};
        for (std::size_t i = 0; i < probs.size(); ++i) {
            seq_table.rows.push_back(
                {std::to_string(i), format_double(probs[i]), std::to_string(classify(probs[i]))});
        }
        out_table = std::move(seq_table);
    }
    write_csv((fs::path(o.out) / "scored.csv").string(), out_table);

    if (labeled && model.window == 1) {
        std::int64_t hits = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            hits += classify(probs[i]) == dataset.labels[i] ? 1 : 0;
        }
        std::cout << "accuracy: "
                  << format_double(static_cast<double>(hits) /
                                   static_cast<double>(probs.size()))
                  << '\n';
    }
    std::cout << "wrote " << (fs::path(o.out) / "scored.csv").string() << '\n';
}

nlohmann::json crossval_config_json(const CrossvalOpts& o) {
    return {{"mode", o.mode},
            {"folds", o.folds},
            {"seed", o.train.seed},
            {"hidden", o.train.hidden},
            {"dropout", o.train.dropout},
            {"epochs", o.train.epochs},
            {"batch_size", o.train.batch_size},
            {"learning_rate", o.train.learning_rate},
            {"clip_norm", o.train.clip_norm},
            {"patience", o.train.patience},
            {"window", o.train.window},
            {"standardize", !o.train.no_standardize},
            {"smote", !o.train.no_smote},
            {"smote_k", o.train.smote_k},
            {"smote_ratio", o.train.smote_ratio},
            {"jobs", o.jobs},
            {"threads", o.train.threads}};
}

void run_crossval(const CrossvalOpts& o) {
    parallel::set_max_threads(o.train.threads);
    fs::create_directories(o.train.out);
    const Dataset dataset = load_dataset(o.train.data);

    const std::optional<CrossValMode> mode = parse_mode(o.mode);
    if (!mode) throw std::invalid_argument("unknown mode '" + o.mode + "'");

    CrossValConfig config;
    config.train = to_train_config(o.train);
    config.smote.k_neighbors = o.train.smote_k;
    config.smote.target_ratio = o.train.smote_ratio;
    config.window = o.train.window;
    config.standardize = !o.train.no_standardize;
    config.use_smote = !o.train.no_smote;
    config.jobs = o.jobs;

    const std::size_t population = crossval_population(dataset, config, *mode);
    const FoldPlan plan = make_fold_plan(population, o.folds, o.train.seed);
    const CrossValReport report = cross_validate(dataset, plan, config, *mode);

    nlohmann::json out;
    out["config"] = crossval_config_json(o);
    out["results"] = nlohmann::json::parse(report.to_json());
    write_text(fs::path(o.train.out) / "report.json", out.dump(2) + "\n");

    std::vector<ConfusionMatrix> cms;
    for (const FoldReport& fr : report.folds) {
        const fs::path roc = fs::path(o.train.out) /
                             ("roc_fold_" + std::to_string(fr.fold_index) + ".csv");
        write_text(roc, fr.eval.roc ? fr.eval.roc->to_csv() : "threshold,fpr,tpr\n");
        const fs::path curve = fs::path(o.train.out) /
                               ("curve_fold_" + std::to_string(fr.fold_index) + ".csv");
        write_text(curve, fr.curve.to_csv());
        cms.push_back(fr.eval.cm);
    }
    write_text(fs::path(o.train.out) / "avg_confusion.csv", report.avg_confusion.to_csv());

    std::cout << "mode: " << to_string(report.mode) << '\n';
    std::cout << "mean accuracy: " << format_double(report.mean_accuracy) << " +/- "
              << format_double(report.std_accuracy) << '\n';
    if (report.mean_accuracy_originals) {
        std::cout << "mean accuracy (original rows only): "
                  << format_double(*report.mean_accuracy_originals) << " +/- "
                  << format_double(*report.std_accuracy_originals) << '\n';
    }
    for (const FoldReport& fr : report.folds) {
        std::cout << "fold " << fr.fold_index << ": accuracy "
                  << format_double(fr.eval.metric_set.accuracy.value()) << ", auc "
                  << (fr.eval.roc ? format_double(fr.eval.roc->auc) : "n/a") << '\n';
    }
    std::cout << "wrote " << (fs::path(o.train.out) / "report.json").string() << '\n';
}

void run_append(const AppendOpts& o) {
    const CsvTable base_raw = read_csv(o.data);
    const CsvTable extra_raw = read_csv(o.rows);
    if (base_raw.header != extra_raw.header) {
        for (const std::string& col : extra_raw.header) {
            if (std::find(base_raw.header.begin(), base_raw.header.end(), col) ==
                base_raw.header.end()) {
                throw SchemaError("new rows have an extra column: " + col);
            }
        }
        for (const std::string& col : base_raw.header) {
            if (std::find(extra_raw.header.begin(), extra_raw.header.end(), col) ==
                extra_raw.header.end()) {
                throw SchemaError("new rows are missing column: " + col);
            }
        }
        throw SchemaError("new rows list the same columns in a different order");
    }
    const Dataset base = load_dataset(o.data);
    const Dataset extra = load_dataset(o.rows);

    Dataset combined = base;
    combined.dates.insert(combined.dates.end(), extra.dates.begin(), extra.dates.end());
    combined.locations.insert(combined.locations.end(), extra.locations.begin(),
                              extra.locations.end());
    combined.features.insert(combined.features.end(), extra.features.begin(),
                             extra.features.end());
    combined.labels.insert(combined.labels.end(), extra.labels.begin(), extra.labels.end());

    save_dataset(o.out, combined);
    print_summary(summarize(combined));
    std::cout << "appended " << extra.n_rows() << " rows\n";
    std::cout << "wrote " << o.out << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tornadocast: LSTM tornado-climatology pipeline"};
    app.name("tornadocast");
    app.require_subcommand(1);

    // Bound for every subcommand; the file itself is applied by
    // splice_config_args before parsing, so the path is never read back here.
    std::string config_file;
    const auto add_config_option = [&config_file](CLI::App* cmd) {
        cmd->add_option("--config", config_file,
                        "flat key=value config file; command-line options win");
    };

    PrepOpts prep;
    CLI::App* prep_cmd = app.add_subcommand(
        "prep", "Clean, impute and label raw weather + storm-event CSVs");
    prep_cmd->add_option("--weather", prep.weather, "raw weather CSV")->required();
    prep_cmd->add_option("--events", prep.events, "storm events CSV")->required();
    prep_cmd->add_option("--out", prep.out, "output directory")->required();
    prep_cmd->add_option("--sparsity", prep.sparsity,
                         "drop columns with a higher missing fraction");
    add_config_option(prep_cmd);
    prep_cmd->callback([&] { run_prep(prep); });

    SynthOpts synth_opts;
    CLI::App* synth_cmd =
        app.add_subcommand("synth", "Generate a seeded synthetic dataset with known ground truth");
    synth_cmd->add_option("--out", synth_opts.out, "output directory")->required();
    synth_cmd->add_option("--samples", synth_opts.samples, "sample count");
    synth_cmd->add_option("--features", synth_opts.features, "feature count");
    synth_cmd->add_option("--rate", synth_opts.rate, "positive-class fraction");
    synth_cmd->add_option("--separability", synth_opts.separability,
                          "class-mean distance in sigma units");
    synth_cmd->add_option("--seed", synth_opts.seed, "generator seed");
    synth_cmd->add_flag("--fixture", synth_opts.fixture,
                        "emit the 1998-2007 archive-shaped raw CSV pair instead");
    add_config_option(synth_cmd);
    synth_cmd->callback([&] { run_synth(synth_opts); });

    auto add_train_options = [&](CLI::App* cmd, TrainOpts& t) {
        cmd->add_option("--data", t.data, "canonical labeled dataset CSV")->required();
        cmd->add_option("--out", t.out, "output directory")->required();
        cmd->add_option("--hidden", t.hidden, "LSTM hidden size");
        cmd->add_option("--dropout", t.dropout, "dropout rate on the final hidden state");
        cmd->add_option("--epochs", t.epochs, "training epochs");
        cmd->add_option("--batch-size", t.batch_size, "mini-batch size");
        cmd->add_option("--learning-rate", t.learning_rate, "Adam learning rate");
        cmd->add_option("--clip-norm", t.clip_norm, "gradient max-norm, 0 disables");
        cmd->add_option("--patience", t.patience, "early-stop patience, 0 disables");
        cmd->add_option("--window", t.window, "timesteps per sequence");
        cmd->add_option("--seed", t.seed, "run seed");
        cmd->add_flag("--no-standardize", t.no_standardize, "skip feature standardization");
        cmd->add_flag("--no-smote", t.no_smote, "skip minority oversampling");
        cmd->add_option("--smote-k", t.smote_k, "SMOTE neighbor count");
        cmd->add_option("--smote-ratio", t.smote_ratio, "target minority/majority ratio");
        cmd->add_option("--threads", t.threads, "kernel threads (results identical)");
        add_config_option(cmd);
    };

    TrainOpts train_opts;
    CLI::App* train_cmd = app.add_subcommand("train", "Train the LSTM and persist the model");
    add_train_options(train_cmd, train_opts);
    train_cmd->callback([&] { run_train(train_opts); });

    ScoreOpts score_opts;
    CLI::App* score_cmd = app.add_subcommand("score", "Score rows with a trained model");
    score_cmd->add_option("--model", score_opts.model, "model JSON")->required();
    score_cmd->add_option("--data", score_opts.data, "input CSV (result column optional)")
        ->required();
    score_cmd->add_option("--out", score_opts.out, "output directory")->required();
    score_cmd->add_option("--threads", score_opts.threads, "kernel threads");
    add_config_option(score_cmd);
    score_cmd->callback([&] { run_score(score_opts); });

    CrossvalOpts cv_opts;
    CLI::App* cv_cmd =
        app.add_subcommand("crossval", "k-fold cross-validation with full report artifacts");
    add_train_options(cv_cmd, cv_opts.train);
    cv_cmd->add_option("--folds", cv_opts.folds, "fold count");
    cv_cmd->add_option("--mode", cv_opts.mode, "sound | paper-faithful");
    cv_cmd->add_option("--jobs", cv_opts.jobs, "parallel folds (results identical)");
    cv_cmd->callback([&] { run_crossval(cv_opts); });

    AppendOpts append_opts;
    CLI::App* append_cmd =
        app.add_subcommand("append", "Append schema-compatible rows to a dataset");
    append_cmd->add_option("--data", append_opts.data, "existing canonical dataset")->required();
    append_cmd->add_option("--rows", append_opts.rows, "new rows CSV (same schema)")->required();
    append_cmd->add_option("--out", append_opts.out, "output dataset path")->required();
    add_config_option(append_cmd);
    append_cmd->callback([&] { run_append(append_opts); });

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = splice_config_args(app, std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const FileError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const SchemaError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const DivergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
