#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tornadocast/rng.hpp"

namespace tornadocast {

enum class Gate { Input = 0, Forget = 1, Output = 2, Candidate = 3 };

/// All trainable parameters of the single LSTM layer plus the sigmoid
/// dense head, stored in one flat vector so the optimizer and the
/// finite-difference checker can walk coordinates uniformly.
///
/// Layout: W_i W_f W_o W_g (each hidden x n_features, row-major),
/// U_i U_f U_o U_g (hidden x hidden), b_i b_f b_o b_g (hidden),
/// dense_w (hidden), dense_b.
class LstmParams {
public:
    LstmParams() = default;
    LstmParams(int n_features, int hidden);

    int n_features() const { return n_features_; }
    int hidden() const { return hidden_; }
    std::size_t size() const { return data_.size(); }

    std::span<double> w(Gate g);
    std::span<const double> w(Gate g) const;
    std::span<double> u(Gate g);
    std::span<const double> u(Gate g) const;
    std::span<double> b(Gate g);
    std::span<const double> b(Gate g) const;
    std::span<double> dense_w();
    std::span<const double> dense_w() const;
    double& dense_b();
    double dense_b() const;

    std::span<double> flat() { return data_; }
    std::span<const double> flat() const { return data_; }

    /// Human-readable name of one flat coordinate, e.g. "U_f[3][7]".
    std::string coord_name(std::size_t flat_index) const;

    bool all_finite() const;

private:
    int n_features_ = 0;
    int hidden_ = 0;
    std::vector<double> data_;
};

/// Glorot-style uniform init, forget-gate bias 1, other biases 0.
LstmParams init_params(int n_features, int hidden, std::uint64_t seed);

/// Everything the backward pass needs from one forward evaluation.
struct ForwardTrace {
    int window = 0;
    int hidden = 0;
    // per-timestep activations, each [window x hidden] row-major
    std::vector<double> gate_i, gate_f, gate_o, gate_g;
    std::vector<double> cell, tanh_cell, h;
    std::vector<double> dropout_mask;  // [hidden]; all ones outside train mode
    std::vector<double> h_dropped;     // [hidden]
    double dense_z = 0.0;
    double p = 0.5;  // sigmoid output clamped to [kProbEps, 1 - kProbEps]
};

inline constexpr double kProbEps = 1e-12;

/// Standard LSTM recurrence from zero initial state, inverted dropout on
/// the final hidden state in train mode, sigmoid dense head.
/// `sequence` is window x n_features row-major. In train mode with a
/// nonzero dropout rate an rng must be supplied.
ForwardTrace lstm_forward(const LstmParams& params, std::span<const double> sequence,
                          int window, double dropout_rate, bool train_mode,
                          Rng* rng = nullptr);

/// Binary cross-entropy; p is clamped upstream so the logs stay finite.
double bce_loss(double p, int y);

/// Exact gradients of bce_loss(trace.p, y) with respect to every
/// parameter, backpropagated through the dense head, the dropout mask and
/// all timesteps. Returned in parameter layout.
LstmParams lstm_backward(const ForwardTrace& trace, const LstmParams& params,
                         std::span<const double> sequence, int y);

/// Scales gradients so their global L2 norm is at most max_norm
/// (no-op when max_norm <= 0 or the norm is already smaller).
void clip_gradients(LstmParams& grads, double max_norm);

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<double> m, v;
    std::int64_t t = 0;
};

/// Bias-corrected Adam update, in place.
void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state,
               const AdamConfig& config);

struct GradCheckReport {
    bool pass = false;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::string worst_coord;
    double analytic = 0.0;
    double numeric = 0.0;
    double delta = 0.0;
    double tolerance = 0.0;
};

/// Central finite differences against the analytic gradients, dropout
/// disabled so the loss is deterministic. Relative error uses
/// |a - n| / max(|a|, |n|, 1e-6) per coordinate.
GradCheckReport gradient_check(const LstmParams& params, std::span<const double> sequence,
                               int window, int y, double delta = 1e-5,
                               double tolerance = 1e-4);

/// Same comparison against a caller-supplied analytic gradient. This is
/// how the checker itself is validated: inject a fault into one
/// coordinate and the report must name it.
GradCheckReport gradient_check(const LstmParams& params, std::span<const double> sequence,
                               int window, int y, const LstmParams& analytic,
                               double delta = 1e-5, double tolerance = 1e-4);

double sigmoid(double z);

}  // namespace tornadocast
