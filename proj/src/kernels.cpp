#include "tornadocast/kernels.hpp"

#include <algorithm>
#include <stdexcept>

#include "tornadocast/parallel.hpp"

namespace tornadocast::kernels {

namespace {

// k nearest neighbours of point `i`, written to out[0..k); ties broken by
// index so the result is order-stable.
void knn_row(std::span<const double> points, std::size_t n, std::size_t f, std::size_t k,
             std::size_t i, std::vector<std::pair<double, std::size_t>>& scratch,
             std::size_t* out) {
    scratch.clear();
    const double* xi = points.data() + i * f;
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const double* xj = points.data() + j * f;
        double d = 0.0;
        for (std::size_t c = 0; c < f; ++c) {
            const double diff = xi[c] - xj[c];
            d += diff * diff;
        }
        scratch.emplace_back(d, j);
    }
    std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k),
                      scratch.end());
    for (std::size_t j = 0; j < k; ++j) out[j] = scratch[j].second;
}

}  // namespace

std::vector<std::size_t> knn_indices_serial(std::span<const double> points, std::size_t n,
                                            std::size_t f, std::size_t k) {
    if (k == 0 || k >= n) throw std::invalid_argument("knn_indices: need 0 < k < n");
    std::vector<std::size_t> out(n * k);
    std::vector<std::pair<double, std::size_t>> scratch;
    scratch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        knn_row(points, n, f, k, i, scratch, out.data() + i * k);
    }
    return out;
}

std::vector<std::size_t> knn_indices_parallel(std::span<const double> points, std::size_t n,
                                              std::size_t f, std::size_t k, int threads) {
    if (k == 0 || k >= n) throw std::invalid_argument("knn_indices: need 0 < k < n");
    std::vector<std::size_t> out(n * k);
#pragma omp parallel num_threads(threads)
    {
        std::vector<std::pair<double, std::size_t>> scratch;
        scratch.reserve(n);
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
            knn_row(points, n, f, k, static_cast<std::size_t>(i), scratch,
                    out.data() + static_cast<std::size_t>(i) * k);
        }
    }
    return out;
}

std::vector<std::size_t> knn_indices(std::span<const double> points, std::size_t n,
                                     std::size_t f, std::size_t k) {
    if (parallel::enabled()) {
        return knn_indices_parallel(points, n, f, k, parallel::max_threads());
    }
    return knn_indices_serial(points, n, f, k);
}

BatchGradients batch_gradients_serial(const LstmParams& params, const SequenceBatch& batch,
                                      std::span<const std::size_t> samples,
                                      std::span<const std::uint64_t> mask_seeds,
                                      double dropout_rate) {
    if (samples.size() != mask_seeds.size()) {
        throw std::invalid_argument("batch_gradients: one mask seed per sample required");
    }
    BatchGradients result;
    result.grad_sum = LstmParams(params.n_features(), params.hidden());
    const int window = static_cast<int>(batch.window);
    auto sum = result.grad_sum.flat();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::size_t s = samples[i];
        Rng rng(mask_seeds[i]);
        const ForwardTrace trace =
            lstm_forward(params, batch.sequence(s), window, dropout_rate, true, &rng);
        const int y = batch.labels[s];
        result.loss_sum += bce_loss(trace.p, y);
        result.correct += ((trace.p >= 0.5 ? 1 : 0) == y) ? 1 : 0;
        const LstmParams grad = lstm_backward(trace, params, batch.sequence(s), y);
        const auto g = grad.flat();
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += g[j];
    }
    return result;
}

BatchGradients batch_gradients_parallel(const LstmParams& params, const SequenceBatch& batch,
                                        std::span<const std::size_t> samples,
                                        std::span<const std::uint64_t> mask_seeds,
                                        double dropout_rate, int threads) {
    if (samples.size() != mask_seeds.size()) {
        throw std::invalid_argument("batch_gradients: one mask seed per sample required");
    }
    const std::size_t n = samples.size();
    const int window = static_cast<int>(batch.window);

    // Per-sample slots, reduced in sample order afterwards: the sum is the
    // same sequence of additions as the serial path no matter how the loop
    // is scheduled.
    std::vector<LstmParams> slots(n);
    std::vector<double> losses(n, 0.0);
    std::vector<int> hits(n, 0);

#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(n); ++i) {
        const std::size_t s = samples[static_cast<std::size_t>(i)];
        Rng rng(mask_seeds[static_cast<std::size_t>(i)]);
        const ForwardTrace trace =
            lstm_forward(params, batch.sequence(s), window, dropout_rate, true, &rng);
        const int y = batch.labels[s];
        losses[static_cast<std::size_t>(i)] = bce_loss(trace.p, y);
        hits[static_cast<std::size_t>(i)] = ((trace.p >= 0.5 ? 1 : 0) == y) ? 1 : 0;
        slots[static_cast<std::size_t>(i)] = lstm_backward(trace, params, batch.sequence(s), y);
    }

    BatchGradients result;
    result.grad_sum = LstmParams(params.n_features(), params.hidden());
    auto sum = result.grad_sum.flat();
    for (std::size_t i = 0; i < n; ++i) {
        result.loss_sum += losses[i];
        result.correct += hits[i];
        const auto g = slots[i].flat();
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += g[j];
    }
    return result;
}

BatchGradients batch_gradients(const LstmParams& params, const SequenceBatch& batch,
                               std::span<const std::size_t> samples,
                               std::span<const std::uint64_t> mask_seeds,
                               double dropout_rate) {
    if (parallel::enabled()) {
        return batch_gradients_parallel(params, batch, samples, mask_seeds, dropout_rate,
                                        parallel::max_threads());
    }
    return batch_gradients_serial(params, batch, samples, mask_seeds, dropout_rate);
}

std::vector<double> batch_probabilities_serial(const LstmParams& params,
                                               const SequenceBatch& batch) {
    std::vector<double> probs(batch.n_sequences);
    const int window = static_cast<int>(batch.window);
    for (std::size_t i = 0; i < batch.n_sequences; ++i) {
        probs[i] = lstm_forward(params, batch.sequence(i), window, 0.0, false).p;
    }
    return probs;
}

std::vector<double> batch_probabilities_parallel(const LstmParams& params,
                                                 const SequenceBatch& batch, int threads) {
    std::vector<double> probs(batch.n_sequences);
    const int window = static_cast<int>(batch.window);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(batch.n_sequences); ++i) {
        probs[static_cast<std::size_t>(i)] =
            lstm_forward(params, batch.sequence(static_cast<std::size_t>(i)), window, 0.0, false)
                .p;
    }
    return probs;
}

std::vector<double> batch_probabilities(const LstmParams& params, const SequenceBatch& batch) {
    if (parallel::enabled()) {
        return batch_probabilities_parallel(params, batch, parallel::max_threads());
    }
    return batch_probabilities_serial(params, batch);
}

}  // namespace tornadocast::kernels
