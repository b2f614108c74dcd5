#include <algorithm>
#include <chrono>
#include <cstdint>
#include <iostream>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tornadocast/kernels.hpp"
#include "tornadocast/lstm.hpp"
#include "tornadocast/parallel.hpp"
#include "tornadocast/preprocess.hpp"
#include "tornadocast/rng.hpp"

using namespace tornadocast;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto start = Clock::now();
        fn();
        best = std::min(best, seconds_since(start));
    }
    return best;
}

void report(const std::string& name, double serial_s, double parallel_s, bool identical) {
    std::cout << name << ": serial " << serial_s << " s, parallel " << parallel_s << " s, speedup "
              << serial_s / parallel_s << "x, results " << (identical ? "identical" : "DIFFER")
              << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"serial vs OpenMP kernel benchmark"};
    int threads = parallel::available() ? 4 : 1;
    std::size_t knn_n = 4000;
    std::size_t n_features = 16;
    std::size_t batch_n = 2048;
    int hidden = 64;
    int reps = 3;
    app.add_option("--threads", threads, "OpenMP thread count");
    app.add_option("--knn-points", knn_n, "points for the k-NN kernel");
    app.add_option("--features", n_features, "feature width");
    app.add_option("--batch", batch_n, "sequences for the gradient/probability kernels");
    app.add_option("--hidden", hidden, "LSTM hidden size");
    app.add_option("--reps", reps, "repetitions, best-of timing");
    CLI11_PARSE(app, argc, argv);

    if (!parallel::available()) {
        std::cout << "OpenMP not compiled in; parallel timings run the serial path.\n";
    }

    Rng rng(99);
    std::vector<double> points(knn_n * n_features);
    for (double& v : points) v = rng.next_normal();

    const std::size_t k = 5;
    std::vector<std::size_t> knn_s, knn_p;
    const double t_knn_s = time_best_of(
        reps, [&] { knn_s = kernels::knn_indices_serial(points, knn_n, n_features, k); });
    const double t_knn_p = time_best_of(reps, [&] {
        knn_p = kernels::knn_indices_parallel(points, knn_n, n_features, k, threads);
    });
    report("knn_indices", t_knn_s, t_knn_p, knn_s == knn_p);

    SequenceBatch batch;
    batch.window = 1;
    batch.n_features = n_features;
    batch.n_sequences = batch_n;
    batch.inputs.resize(batch_n * n_features);
    for (double& v : batch.inputs) v = rng.next_normal();
    batch.labels.resize(batch_n);
    for (int& y : batch.labels) y = rng.next_double() < 0.3 ? 1 : 0;

    const LstmParams params = init_params(static_cast<int>(n_features), hidden, 7);
    std::vector<std::size_t> samples(batch_n);
    std::iota(samples.begin(), samples.end(), 0);
    std::vector<std::uint64_t> mask_seeds(batch_n);
    for (std::size_t i = 0; i < batch_n; ++i) mask_seeds[i] = derive_seed(1234, i);

    kernels::BatchGradients bg_s, bg_p;
    const double t_bg_s = time_best_of(reps, [&] {
        bg_s = kernels::batch_gradients_serial(params, batch, samples, mask_seeds, 0.2);
    });
    const double t_bg_p = time_best_of(reps, [&] {
        bg_p = kernels::batch_gradients_parallel(params, batch, samples, mask_seeds, 0.2, threads);
    });
    const bool bg_same =
        bg_s.loss_sum == bg_p.loss_sum && bg_s.correct == bg_p.correct &&
        std::equal(bg_s.grad_sum.flat().begin(), bg_s.grad_sum.flat().end(),
                   bg_p.grad_sum.flat().begin());
    report("batch_gradients", t_bg_s, t_bg_p, bg_same);

    std::vector<double> probs_s, probs_p;
    const double t_pr_s = time_best_of(
        reps, [&] { probs_s = kernels::batch_probabilities_serial(params, batch); });
    const double t_pr_p = time_best_of(
        reps, [&] { probs_p = kernels::batch_probabilities_parallel(params, batch, threads); });
    report("batch_probabilities", t_pr_s, t_pr_p, probs_s == probs_p);

    return 0;
}
