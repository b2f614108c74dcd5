#include "tornadocast/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "tornadocast/kernels.hpp"
#include "tornadocast/rng.hpp"

namespace tornadocast {

Standardizer fit_standardizer(std::span<const double> data, std::size_t n_rows,
                              std::size_t n_features) {
    if (n_rows < 2) throw std::invalid_argument("fit_standardizer needs at least 2 samples");
    if (data.size() != n_rows * n_features) {
        throw std::invalid_argument("fit_standardizer: data size mismatch");
    }
    Standardizer std_;
    std_.means.assign(n_features, 0.0);
    std_.std_devs.assign(n_features, 0.0);

    // Welford, per feature
    std::vector<double> m2(n_features, 0.0);
    for (std::size_t r = 0; r < n_rows; ++r) {
        const double* row = data.data() + r * n_features;
        const double count = static_cast<double>(r + 1);
        for (std::size_t c = 0; c < n_features; ++c) {
            const double delta = row[c] - std_.means[c];
            std_.means[c] += delta / count;
            m2[c] += delta * (row[c] - std_.means[c]);
        }
    }
    for (std::size_t c = 0; c < n_features; ++c) {
        std_.std_devs[c] = std::sqrt(m2[c] / static_cast<double>(n_rows));
    }
    return std_;
}

void apply_standardizer(const Standardizer& std_, std::span<double> data, std::size_t n_rows) {
    const std::size_t f = std_.n_features();
    if (data.size() != n_rows * f) {
        throw std::invalid_argument("apply_standardizer: feature count mismatch");
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        double* row = data.data() + r * f;
        for (std::size_t c = 0; c < f; ++c) {
            row[c] = std_.std_devs[c] == 0.0 ? 0.0 : (row[c] - std_.means[c]) / std_.std_devs[c];
        }
    }
}

void invert_standardizer(const Standardizer& std_, std::span<double> data, std::size_t n_rows) {
    const std::size_t f = std_.n_features();
    if (data.size() != n_rows * f) {
        throw std::invalid_argument("invert_standardizer: feature count mismatch");
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
        double* row = data.data() + r * f;
        for (std::size_t c = 0; c < f; ++c) {
            row[c] = std_.std_devs[c] == 0.0 ? std_.means[c]
                                             : row[c] * std_.std_devs[c] + std_.means[c];
        }
    }
}

std::string Standardizer::to_json() const {
    nlohmann::json j{{"means", means}, {"std_devs", std_devs}};
    return j.dump();
}

Standardizer Standardizer::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    Standardizer std_;
    std_.means = j.at("means").get<std::vector<double>>();
    std_.std_devs = j.at("std_devs").get<std::vector<double>>();
    if (std_.means.size() != std_.std_devs.size()) {
        throw std::invalid_argument("standardizer: means/std_devs length mismatch");
    }
    return std_;
}

SmoteResult smote(std::span<const double> features, std::span<const int> labels,
                  std::size_t n_features, const SmoteConfig& config) {
    const std::size_t n = labels.size();
    if (features.size() != n * n_features) {
        throw std::invalid_argument("smote: feature matrix size mismatch");
    }
    if (config.k_neighbors < 1) throw std::invalid_argument("smote: k_neighbors must be >= 1");
    if (!(config.target_ratio > 0.0 && config.target_ratio <= 1.0)) {
        throw std::invalid_argument("smote: target_ratio must lie in (0,1]");
    }

    std::size_t count1 = 0;
    for (int y : labels) count1 += static_cast<std::size_t>(y);
    const std::size_t count0 = n - count1;
    if (count0 == 0 || count1 == 0) {
        throw std::invalid_argument("smote: both classes must be present");
    }

    const int minority_label = count1 <= count0 ? 1 : 0;
    const std::size_t minority = std::min(count0, count1);
    const std::size_t majority = std::max(count0, count1);
    if (static_cast<std::size_t>(config.k_neighbors) >= minority) {
        throw std::invalid_argument("smote: k_neighbors must be smaller than the minority count");
    }

    SmoteResult result;
    result.minority_label = minority_label;
    result.n_original = n;
    result.features.assign(features.begin(), features.end());
    result.labels.assign(labels.begin(), labels.end());

    const auto target =
        static_cast<std::size_t>(std::llround(config.target_ratio * static_cast<double>(majority)));
    if (target <= minority) return result;  // already at or past the requested balance
    const std::size_t n_new = target - minority;

    // pack minority rows for the neighbour search
    std::vector<std::size_t> minority_rows;
    minority_rows.reserve(minority);
    for (std::size_t r = 0; r < n; ++r) {
        if (result.labels[r] == minority_label) minority_rows.push_back(r);
    }
    std::vector<double> packed(minority * n_features);
    for (std::size_t i = 0; i < minority; ++i) {
        std::copy_n(features.begin() + static_cast<std::ptrdiff_t>(minority_rows[i] * n_features),
                    n_features, packed.begin() + static_cast<std::ptrdiff_t>(i * n_features));
    }
    const std::size_t k = static_cast<std::size_t>(config.k_neighbors);
    const std::vector<std::size_t> knn = kernels::knn_indices(packed, minority, n_features, k);

    result.features.reserve((n + n_new) * n_features);
    result.labels.reserve(n + n_new);
    result.origins.reserve(n_new);
    Rng rng(config.seed);
    for (std::size_t s = 0; s < n_new; ++s) {
        const std::size_t parent_local = static_cast<std::size_t>(rng.next_below(minority));
        const std::size_t pick = static_cast<std::size_t>(rng.next_below(k));
        const std::size_t neighbor_local = knn[parent_local * k + pick];
        const double u = rng.next_double();

        const double* xp = packed.data() + parent_local * n_features;
        const double* xn = packed.data() + neighbor_local * n_features;
        for (std::size_t c = 0; c < n_features; ++c) {
            result.features.push_back(xp[c] + u * (xn[c] - xp[c]));
        }
        result.labels.push_back(minority_label);
        result.origins.push_back(
            {minority_rows[parent_local], minority_rows[neighbor_local], u});
    }
    result.n_synthetic = n_new;
    return result;
}

SequenceBatch make_sequences(const Dataset& samples, std::size_t window) {
    if (window == 0) throw std::invalid_argument("window must be positive");
    const std::size_t f = samples.n_features();
    const std::size_t n = samples.n_rows();

    SequenceBatch batch;
    batch.window = window;
    batch.n_features = f;

    if (window == 1) {
        batch.inputs = samples.features;
        batch.labels = samples.labels;
        batch.n_sequences = n;
        return batch;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (samples.locations[a] != samples.locations[b]) {
            return samples.locations[a] < samples.locations[b];
        }
        return samples.dates[a] < samples.dates[b];
    });

    // maximal runs of consecutive days at one location
    std::size_t run_start = 0;
    auto flush_run = [&](std::size_t run_end) {  // [run_start, run_end)
        const std::size_t len = run_end - run_start;
        if (len < window) return;
        for (std::size_t s = run_start; s + window <= run_end; ++s) {
            for (std::size_t t = 0; t < window; ++t) {
                const auto row = samples.row(order[s + t]);
                batch.inputs.insert(batch.inputs.end(), row.begin(), row.end());
            }
            batch.labels.push_back(samples.labels[order[s + window - 1]]);
        }
    };
    for (std::size_t i = 1; i <= n; ++i) {
        const bool boundary =
            i == n || samples.locations[order[i]] != samples.locations[order[i - 1]] ||
            samples.dates[order[i]].serial() != samples.dates[order[i - 1]].serial() + 1;
        if (boundary) {
            flush_run(i);
            run_start = i;
        }
    }
    batch.n_sequences = batch.labels.size();
    if (batch.n_sequences == 0) {
        throw std::invalid_argument("window " + std::to_string(window) +
                                    " is larger than every location's run of consecutive days");
    }
    return batch;
}

SequenceBatch wrap_sequences(std::vector<double> features, std::vector<int> labels,
                             std::size_t n_features) {
    SequenceBatch batch;
    batch.n_features = n_features;
    batch.window = 1;
    batch.n_sequences = labels.size();
    batch.inputs = std::move(features);
    batch.labels = std::move(labels);
    if (batch.inputs.size() != batch.n_sequences * n_features) {
        throw std::invalid_argument("wrap_sequences: size mismatch");
    }
    return batch;
}

FoldPlan make_fold_plan(std::size_t n_samples, int n_folds, std::uint64_t seed) {
    if (n_folds < 1) throw std::invalid_argument("n_folds must be >= 1");
    if (n_samples < static_cast<std::size_t>(n_folds)) {
        throw std::invalid_argument("need at least one sample per fold: " +
                                    std::to_string(n_samples) + " samples, " +
                                    std::to_string(n_folds) + " folds");
    }
    std::vector<std::size_t> order(n_samples);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(seed);
    rng.shuffle(order);

    FoldPlan plan;
    plan.n_folds = n_folds;
    plan.seed = seed;
    plan.assignments.assign(n_samples, 0);
    const std::size_t base = n_samples / static_cast<std::size_t>(n_folds);
    const std::size_t extra = n_samples % static_cast<std::size_t>(n_folds);
    std::size_t pos = 0;
    for (int fold = 0; fold < n_folds; ++fold) {
        const std::size_t size = base + (static_cast<std::size_t>(fold) < extra ? 1 : 0);
        for (std::size_t j = 0; j < size; ++j) plan.assignments[order[pos++]] = fold;
    }
    return plan;
}

std::vector<FoldSplit> kfold_split(const FoldPlan& plan) {
    std::vector<FoldSplit> splits(static_cast<std::size_t>(plan.n_folds));
    for (std::size_t i = 0; i < plan.assignments.size(); ++i) {
        const int fold = plan.assignments[i];
        if (fold < 0 || fold >= plan.n_folds) {
            throw std::invalid_argument("fold assignment out of range");
        }
        for (int other = 0; other < plan.n_folds; ++other) {
            if (other == fold) {
                splits[static_cast<std::size_t>(other)].test.push_back(i);
            } else {
                splits[static_cast<std::size_t>(other)].train.push_back(i);
            }
        }
    }
    return splits;
}

std::string FoldPlan::to_json() const {
    nlohmann::json j{{"n_folds", n_folds}, {"seed", seed}, {"assignments", assignments}};
    return j.dump();
}

FoldPlan FoldPlan::from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    FoldPlan plan;
    plan.n_folds = j.at("n_folds").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    plan.assignments = j.at("assignments").get<std::vector<int>>();
    for (int a : plan.assignments) {
        if (a < 0 || a >= plan.n_folds) {
            throw std::invalid_argument("fold plan: assignment out of range");
        }
    }
    return plan;
}

}  // namespace tornadocast
