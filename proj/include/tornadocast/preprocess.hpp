#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tornadocast/dataio.hpp"

namespace tornadocast {

/// Per-feature z-score transform fitted on a sample matrix.
struct Standardizer {
    std::vector<double> means;
    std::vector<double> std_devs;  // population standard deviations

    std::size_t n_features() const { return means.size(); }
    std::string to_json() const;
    static Standardizer from_json(const std::string& text);
};

/// Sample mean and population standard deviation per feature column.
/// Requires at least 2 rows.
Standardizer fit_standardizer(std::span<const double> data, std::size_t n_rows,
                              std::size_t n_features);

/// x' = (x - mean) / std, in place; zero-std columns map to 0.
void apply_standardizer(const Standardizer& std, std::span<double> data, std::size_t n_rows);

/// Inverse transform; zero-std columns map back to their mean.
void invert_standardizer(const Standardizer& std, std::span<double> data, std::size_t n_rows);

struct SmoteConfig {
    int k_neighbors = 5;
    double target_ratio = 1.0;  // minority/majority after augmentation
    std::uint64_t seed = 0;
};

/// Provenance of one synthetic sample: row indices of the parent and the
/// chosen neighbor in the *input* matrix, and the interpolation draw.
struct SmoteOrigin {
    std::size_t parent;
    std::size_t neighbor;
    double u;
};

struct SmoteResult {
    std::vector<double> features;  // originals verbatim, synthetics appended
    std::vector<int> labels;
    std::size_t n_original = 0;
    std::size_t n_synthetic = 0;
    int minority_label = 1;
    std::vector<SmoteOrigin> origins;  // one entry per synthetic row
};

/// Oversamples the minority class by interpolating towards one of each
/// parent's k nearest minority neighbours (Euclidean), until
/// minority/majority reaches config.target_ratio. Deterministic given
/// config.seed. Throws std::invalid_argument on single-class input or
/// k_neighbors >= minority count.
SmoteResult smote(std::span<const double> features, std::span<const int> labels,
                  std::size_t n_features, const SmoteConfig& config);

/// RNN-shaped input: n_sequences x window x n_features, with one binary
/// label per sequence.
struct SequenceBatch {
    std::vector<double> inputs;
    std::vector<int> labels;
    std::size_t n_sequences = 0;
    std::size_t window = 1;
    std::size_t n_features = 0;

    std::span<const double> sequence(std::size_t i) const {
        const std::size_t len = window * n_features;
        return {inputs.data() + i * len, len};
    }
};

/// window = 1 wraps every sample as a length-1 sequence in dataset order.
/// window = W > 1 slides over runs of consecutive same-location days
/// (sorted internally by location then date); each window is labeled by
/// its final day. Throws when no window fits any location run.
SequenceBatch make_sequences(const Dataset& samples, std::size_t window);

/// Wraps an already-materialized feature matrix as length-1 sequences.
SequenceBatch wrap_sequences(std::vector<double> features, std::vector<int> labels,
                             std::size_t n_features);

/// Seeded shuffle-then-cut fold assignment.
struct FoldPlan {
    int n_folds = 10;
    std::uint64_t seed = 42;
    std::vector<int> assignments;  // per-sample fold index

    std::string to_json() const;
    static FoldPlan from_json(const std::string& text);
};

struct FoldSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Fisher-Yates shuffle of [0, n) seeded with `seed`, cut into n_folds
/// contiguous blocks; the first n mod n_folds blocks carry one extra
/// sample. Requires n_samples >= n_folds.
FoldPlan make_fold_plan(std::size_t n_samples, int n_folds, std::uint64_t seed);

/// Train/test index pairs per fold, each in ascending index order. Test
/// blocks are pairwise disjoint and cover every sample exactly once.
std::vector<FoldSplit> kfold_split(const FoldPlan& plan);

}  // namespace tornadocast
