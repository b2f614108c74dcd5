#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tornadocast/lstm.hpp"
#include "tornadocast/preprocess.hpp"

namespace tornadocast::kernels {

// The compute-heavy inner loops, each in two variants: a plain serial
// reference and an OpenMP version. Both produce bit-identical results for
// the same input order; the dispatching entry point picks the OpenMP path
// when parallel::enabled(). Tests compare the two directly.

/// For every point, the indices of its k nearest other points by
/// Euclidean distance (ties broken towards the lower index).
/// `points` is n x n_features row-major; k < n required.
std::vector<std::size_t> knn_indices(std::span<const double> points, std::size_t n,
                                     std::size_t n_features, std::size_t k);
std::vector<std::size_t> knn_indices_serial(std::span<const double> points, std::size_t n,
                                            std::size_t n_features, std::size_t k);
std::vector<std::size_t> knn_indices_parallel(std::span<const double> points, std::size_t n,
                                              std::size_t n_features, std::size_t k,
                                              int threads);

struct BatchGradients {
    LstmParams grad_sum;  // sum over the batch, in sample-index order
    double loss_sum = 0.0;
    std::int64_t correct = 0;  // predictions at threshold 0.5
};

/// Forward + backward per sample, summed in the order of `samples`.
/// The dropout mask of the sample at position i is drawn from
/// Rng(mask_seeds[i]), so the result does not depend on thread count.
BatchGradients batch_gradients(const LstmParams& params, const SequenceBatch& batch,
                               std::span<const std::size_t> samples,
                               std::span<const std::uint64_t> mask_seeds,
                               double dropout_rate);
BatchGradients batch_gradients_serial(const LstmParams& params, const SequenceBatch& batch,
                                      std::span<const std::size_t> samples,
                                      std::span<const std::uint64_t> mask_seeds,
                                      double dropout_rate);
BatchGradients batch_gradients_parallel(const LstmParams& params, const SequenceBatch& batch,
                                        std::span<const std::size_t> samples,
                                        std::span<const std::uint64_t> mask_seeds,
                                        double dropout_rate, int threads);

/// Inference probabilities (dropout off) for every sequence in the batch.
std::vector<double> batch_probabilities(const LstmParams& params, const SequenceBatch& batch);
std::vector<double> batch_probabilities_serial(const LstmParams& params,
                                               const SequenceBatch& batch);
std::vector<double> batch_probabilities_parallel(const LstmParams& params,
                                                 const SequenceBatch& batch, int threads);

}  // namespace tornadocast::kernels
