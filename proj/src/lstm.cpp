#include "tornadocast/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace tornadocast {

namespace {

// flat layout offsets
struct Layout {
    std::size_t w_block;   // size of one input-weight matrix
    std::size_t u_block;   // size of one recurrent matrix
    std::size_t h;         // hidden
    std::size_t w0, u0, b0, dense_w0, dense_b0, total;
};

Layout layout_of(int n_features, int hidden) {
    Layout l{};
    l.w_block = static_cast<std::size_t>(hidden) * static_cast<std::size_t>(n_features);
    l.u_block = static_cast<std::size_t>(hidden) * static_cast<std::size_t>(hidden);
    l.h = static_cast<std::size_t>(hidden);
    l.w0 = 0;
    l.u0 = l.w0 + 4 * l.w_block;
    l.b0 = l.u0 + 4 * l.u_block;
    l.dense_w0 = l.b0 + 4 * l.h;
    l.dense_b0 = l.dense_w0 + l.h;
    l.total = l.dense_b0 + 1;
    return l;
}

const char* kGateNames[4] = {"i", "f", "o", "g"};

}  // namespace

double sigmoid(double z) {
    return 1.0 / (1.0 + std::exp(-z));
}

LstmParams::LstmParams(int n_features, int hidden)
    : n_features_(n_features), hidden_(hidden) {
    if (n_features <= 0 || hidden <= 0) {
        throw std::invalid_argument("LstmParams dimensions must be positive");
    }
    data_.assign(layout_of(n_features, hidden).total, 0.0);
}

std::span<double> LstmParams::w(Gate g) {
    const Layout l = layout_of(n_features_, hidden_);
    return {data_.data() + l.w0 + static_cast<std::size_t>(g) * l.w_block, l.w_block};
}
std::span<const double> LstmParams::w(Gate g) const {
    const Layout l = layout_of(n_features_, hidden_);
    return {data_.data() + l.w0 + static_cast<std::size_t>(g) * l.w_block, l.w_block};
}
std::span<double> LstmParams::u(Gate g) {
    const Layout l = layout_of(n_features_, hidden_);
    return {data_.data() + l.u0 + static_cast<std::size_t>(g) * l.u_block, l.u_block};
}
std::span<const double> LstmParams::u(Gate g) const {
    const Layout l = layout_of(n_features_, hidden_);
    return {data_.data() + l.u0 + static_cast<std::size_t>(g) * l.u_block, l.u_block};
}
std::span<double> LstmParams::b(Gate g) {
    const Layout l = layout_of(n_features_, hidden_);
    return {data_.data() + l.b0 + static_cast<std::size_t>(g) * l.h, l.h};
}
std::span<const double> LstmParams::b(Gate g) const {
    const Layout l = layout_of(n_features_, hidden_);
    return {data_.data() + l.b0 + static_cast<std::size_t>(g) * l.h, l.h};
}
std::span<double> LstmParams::dense_w() {
    const Layout l = layout_of(n_features_, hidden_);
    return {data_.data() + l.dense_w0, l.h};
}
std::span<const double> LstmParams::dense_w() const {
    const Layout l = layout_of(n_features_, hidden_);
    return {data_.data() + l.dense_w0, l.h};
}
double& LstmParams::dense_b() {
    return data_[layout_of(n_features_, hidden_).dense_b0];
}
double LstmParams::dense_b() const {
    return data_[layout_of(n_features_, hidden_).dense_b0];
}

std::string LstmParams::coord_name(std::size_t idx) const {
    const Layout l = layout_of(n_features_, hidden_);
    if (idx < l.u0) {
        const std::size_t gate = idx / l.w_block;
        const std::size_t rest = idx % l.w_block;
        return std::string("W_") + kGateNames[gate] + "[" +
               std::to_string(rest / static_cast<std::size_t>(n_features_)) + "][" +
               std::to_string(rest % static_cast<std::size_t>(n_features_)) + "]";
    }
    if (idx < l.b0) {
        const std::size_t gate = (idx - l.u0) / l.u_block;
        const std::size_t rest = (idx - l.u0) % l.u_block;
        return std::string("U_") + kGateNames[gate] + "[" + std::to_string(rest / l.h) + "][" +
               std::to_string(rest % l.h) + "]";
    }
    if (idx < l.dense_w0) {
        const std::size_t gate = (idx - l.b0) / l.h;
        return std::string("b_") + kGateNames[gate] + "[" + std::to_string((idx - l.b0) % l.h) +
               "]";
    }
    if (idx < l.dense_b0) return "dense_w[" + std::to_string(idx - l.dense_w0) + "]";
    return "dense_b";
}

bool LstmParams::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

LstmParams init_params(int n_features, int hidden, std::uint64_t seed) {
    LstmParams params(n_features, hidden);
    Rng rng(seed);
    const double bound_w = std::sqrt(6.0 / (n_features + hidden));
    const double bound_u = std::sqrt(6.0 / (hidden + hidden));
    const double bound_d = std::sqrt(6.0 / (hidden + 1));
    for (Gate g : {Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate}) {
        for (double& v : params.w(g)) v = rng.uniform(-bound_w, bound_w);
    }
    for (Gate g : {Gate::Input, Gate::Forget, Gate::Output, Gate::Candidate}) {
        for (double& v : params.u(g)) v = rng.uniform(-bound_u, bound_u);
    }
    for (double& v : params.b(Gate::Forget)) v = 1.0;
    for (double& v : params.dense_w()) v = rng.uniform(-bound_d, bound_d);
    return params;
}

ForwardTrace lstm_forward(const LstmParams& params, std::span<const double> sequence,
                          int window, double dropout_rate, bool train_mode, Rng* rng) {
    const int h = params.hidden();
    const int f = params.n_features();
    if (window <= 0) throw std::invalid_argument("window must be positive");
    if (sequence.size() != static_cast<std::size_t>(window) * static_cast<std::size_t>(f)) {
        throw std::invalid_argument("sequence length does not match window x n_features");
    }
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw std::invalid_argument("dropout_rate must lie in [0,1)");
    }
    if (train_mode && dropout_rate > 0.0 && rng == nullptr) {
        throw std::invalid_argument("train-mode dropout needs an rng");
    }

    ForwardTrace trace;
    trace.window = window;
    trace.hidden = h;
    const std::size_t wh = static_cast<std::size_t>(window) * static_cast<std::size_t>(h);
    trace.gate_i.resize(wh);
    trace.gate_f.resize(wh);
    trace.gate_o.resize(wh);
    trace.gate_g.resize(wh);
    trace.cell.resize(wh);
    trace.tanh_cell.resize(wh);
    trace.h.resize(wh);

    std::vector<double> h_prev(h, 0.0), c_prev(h, 0.0);
    const auto w_i = params.w(Gate::Input), w_f = params.w(Gate::Forget),
               w_o = params.w(Gate::Output), w_g = params.w(Gate::Candidate);
    const auto u_i = params.u(Gate::Input), u_f = params.u(Gate::Forget),
               u_o = params.u(Gate::Output), u_g = params.u(Gate::Candidate);
    const auto b_i = params.b(Gate::Input), b_f = params.b(Gate::Forget),
               b_o = params.b(Gate::Output), b_g = params.b(Gate::Candidate);

    for (int t = 0; t < window; ++t) {
        const double* x = sequence.data() + static_cast<std::size_t>(t) * f;
        const std::size_t row0 = static_cast<std::size_t>(t) * h;
        for (int j = 0; j < h; ++j) {
            double a_i = b_i[j], a_f = b_f[j], a_o = b_o[j], a_g = b_g[j];
            const std::size_t wr = static_cast<std::size_t>(j) * f;
            for (int k = 0; k < f; ++k) {
                a_i += w_i[wr + k] * x[k];
                a_f += w_f[wr + k] * x[k];
                a_o += w_o[wr + k] * x[k];
                a_g += w_g[wr + k] * x[k];
            }
            const std::size_t ur = static_cast<std::size_t>(j) * h;
            for (int k = 0; k < h; ++k) {
                a_i += u_i[ur + k] * h_prev[k];
                a_f += u_f[ur + k] * h_prev[k];
                a_o += u_o[ur + k] * h_prev[k];
                a_g += u_g[ur + k] * h_prev[k];
            }
            const double gi = sigmoid(a_i);
            const double gf = sigmoid(a_f);
            const double go = sigmoid(a_o);
            const double gg = std::tanh(a_g);
            const double c = gf * c_prev[j] + gi * gg;
            const double tc = std::tanh(c);
            trace.gate_i[row0 + j] = gi;
            trace.gate_f[row0 + j] = gf;
            trace.gate_o[row0 + j] = go;
            trace.gate_g[row0 + j] = gg;
            trace.cell[row0 + j] = c;
            trace.tanh_cell[row0 + j] = tc;
            trace.h[row0 + j] = go * tc;
        }
        for (int j = 0; j < h; ++j) {
            h_prev[j] = trace.h[row0 + j];
            c_prev[j] = trace.cell[row0 + j];
        }
    }

    trace.dropout_mask.assign(h, 1.0);
    if (train_mode && dropout_rate > 0.0) {
        const double keep_scale = 1.0 / (1.0 - dropout_rate);
        for (int j = 0; j < h; ++j) {
            trace.dropout_mask[j] = rng->next_double() < dropout_rate ? 0.0 : keep_scale;
        }
    }
    trace.h_dropped.resize(h);
    const std::size_t last = static_cast<std::size_t>(window - 1) * h;
    for (int j = 0; j < h; ++j) {
        trace.h_dropped[j] = trace.h[last + j] * trace.dropout_mask[j];
    }

    const auto dense_w = params.dense_w();
    double z = params.dense_b();
    for (int j = 0; j < h; ++j) z += dense_w[j] * trace.h_dropped[j];
    trace.dense_z = z;
    trace.p = std::clamp(sigmoid(z), kProbEps, 1.0 - kProbEps);
    return trace;
}

double bce_loss(double p, int y) {
    const double q = std::clamp(p, kProbEps, 1.0 - kProbEps);
    return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

LstmParams lstm_backward(const ForwardTrace& trace, const LstmParams& params,
                         std::span<const double> sequence, int y) {
    const int h = params.hidden();
    const int f = params.n_features();
    const int window = trace.window;

    LstmParams grads(f, h);
    const double dz = trace.p - static_cast<double>(y);

    const auto dense_w = params.dense_w();
    auto g_dense_w = grads.dense_w();
    for (int j = 0; j < h; ++j) g_dense_w[j] = dz * trace.h_dropped[j];
    grads.dense_b() = dz;

    std::vector<double> dh(h, 0.0), dc(h, 0.0), dh_prev(h, 0.0);
    for (int j = 0; j < h; ++j) dh[j] = dz * dense_w[j] * trace.dropout_mask[j];

    const auto u_i = params.u(Gate::Input), u_f = params.u(Gate::Forget),
               u_o = params.u(Gate::Output), u_g = params.u(Gate::Candidate);
    auto gw_i = grads.w(Gate::Input), gw_f = grads.w(Gate::Forget),
         gw_o = grads.w(Gate::Output), gw_g = grads.w(Gate::Candidate);
    auto gu_i = grads.u(Gate::Input), gu_f = grads.u(Gate::Forget),
         gu_o = grads.u(Gate::Output), gu_g = grads.u(Gate::Candidate);
    auto gb_i = grads.b(Gate::Input), gb_f = grads.b(Gate::Forget),
         gb_o = grads.b(Gate::Output), gb_g = grads.b(Gate::Candidate);

    for (int t = window - 1; t >= 0; --t) {
        const std::size_t row0 = static_cast<std::size_t>(t) * h;
        const double* x = sequence.data() + static_cast<std::size_t>(t) * f;
        const double* h_prev =
            t > 0 ? trace.h.data() + static_cast<std::size_t>(t - 1) * h : nullptr;
        const double* c_prev =
            t > 0 ? trace.cell.data() + static_cast<std::size_t>(t - 1) * h : nullptr;

        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (int j = 0; j < h; ++j) {
            const double gi = trace.gate_i[row0 + j];
            const double gf = trace.gate_f[row0 + j];
            const double go = trace.gate_o[row0 + j];
            const double gg = trace.gate_g[row0 + j];
            const double tc = trace.tanh_cell[row0 + j];
            const double cp = t > 0 ? c_prev[j] : 0.0;

            const double do_t = dh[j] * tc;
            const double dc_t = dc[j] + dh[j] * go * (1.0 - tc * tc);

            const double da_o = do_t * go * (1.0 - go);
            const double da_f = dc_t * cp * gf * (1.0 - gf);
            const double da_i = dc_t * gg * gi * (1.0 - gi);
            const double da_g = dc_t * gi * (1.0 - gg * gg);

            const std::size_t wr = static_cast<std::size_t>(j) * f;
            for (int k = 0; k < f; ++k) {
                gw_i[wr + k] += da_i * x[k];
                gw_f[wr + k] += da_f * x[k];
                gw_o[wr + k] += da_o * x[k];
                gw_g[wr + k] += da_g * x[k];
            }
            if (t > 0) {
                const std::size_t ur = static_cast<std::size_t>(j) * h;
                for (int k = 0; k < h; ++k) {
                    gu_i[ur + k] += da_i * h_prev[k];
                    gu_f[ur + k] += da_f * h_prev[k];
                    gu_o[ur + k] += da_o * h_prev[k];
                    gu_g[ur + k] += da_g * h_prev[k];
                }
            }
            gb_i[j] += da_i;
            gb_f[j] += da_f;
            gb_o[j] += da_o;
            gb_g[j] += da_g;

            if (t > 0) {
                const std::size_t ur = static_cast<std::size_t>(j);
                // dh_prev[k] += sum over gates of U[j][k] * da; U rows are per
                // output unit j, so the transpose walk is column k of row j.
                for (int k = 0; k < h; ++k) {
                    const std::size_t idx = ur * h + k;
                    dh_prev[k] += u_i[idx] * da_i + u_f[idx] * da_f + u_o[idx] * da_o +
                                  u_g[idx] * da_g;
                }
            }
            dc[j] = dc_t * gf;  // flows to c_{t-1}
        }
        if (t > 0) dh = dh_prev;
    }
    return grads;
}

void clip_gradients(LstmParams& grads, double max_norm) {
    if (max_norm <= 0.0) return;
    double sq = 0.0;
    for (double v : grads.flat()) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm <= max_norm) return;
    const double scale = max_norm / norm;
    for (double& v : grads.flat()) v *= scale;
}

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state,
               const AdamConfig& config) {
    auto p = params.flat();
    auto g = grads.flat();
    if (p.size() != g.size()) throw std::invalid_argument("adam_step: shape mismatch");
    if (state.m.size() != p.size()) {
        state.m.assign(p.size(), 0.0);
        state.v.assign(p.size(), 0.0);
        state.t = 0;
    }
    state.t += 1;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.t));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < p.size(); ++i) {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g[i];
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g[i] * g[i];
        const double m_hat = state.m[i] / c1;
        const double v_hat = state.v[i] / c2;
        p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps);
    }
}

GradCheckReport gradient_check(const LstmParams& params, std::span<const double> sequence,
                               int window, int y, double delta, double tolerance) {
    const ForwardTrace trace = lstm_forward(params, sequence, window, 0.0, false);
    const LstmParams analytic = lstm_backward(trace, params, sequence, y);
    return gradient_check(params, sequence, window, y, analytic, delta, tolerance);
}

GradCheckReport gradient_check(const LstmParams& params, std::span<const double> sequence,
                               int window, int y, const LstmParams& analytic,
                               double delta, double tolerance) {
    GradCheckReport report;
    report.delta = delta;
    report.tolerance = tolerance;

    LstmParams probe = params;
    auto flat = probe.flat();
    const auto a = analytic.flat();
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double saved = flat[i];
        flat[i] = saved + delta;
        const double loss_plus =
            bce_loss(lstm_forward(probe, sequence, window, 0.0, false).p, y);
        flat[i] = saved - delta;
        const double loss_minus =
            bce_loss(lstm_forward(probe, sequence, window, 0.0, false).p, y);
        flat[i] = saved;

        const double numeric = (loss_plus - loss_minus) / (2.0 * delta);
        const double denom = std::max({std::abs(a[i]), std::abs(numeric), 1e-6});
        const double rel = std::abs(a[i] - numeric) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_index = i;
            report.worst_coord = probe.coord_name(i);
            report.analytic = a[i];
            report.numeric = numeric;
        }
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

}  // namespace tornadocast
