#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavrl/rng.hpp"

namespace uavrl {

enum class HeadKind { Plain, Dueling };
enum class CombineMode { Mean, Max };

struct NetConfig {
    int input_dim = 3;
    std::vector<int> hidden = {64, 64};
    int outputs = 7;
    HeadKind head = HeadKind::Plain;
    CombineMode combine = CombineMode::Mean;
    int stream_hidden = 32;  // hidden width of each dueling stream; 0 = linear streams
};

// One dense layer viewed into the flat parameter vector. Weights are
// row-major [out][in], followed by the bias vector.
struct LayerSpec {
    int in = 0;
    int out = 0;
    std::size_t w_off = 0;
    std::size_t b_off = 0;
    bool relu = false;
};

// Feed-forward Q-network over a flat parameter array. For the dueling head
// the trunk feeds a scalar value stream and an |A|-wide advantage stream
// whose outputs are combined below; the plain head is a single linear output.
struct QNetwork {
    NetConfig config;
    std::uint64_t init_seed = 0;
    std::vector<LayerSpec> layers;  // trunk, then head layers in declaration order
    std::size_t trunk_layers = 0;
    std::size_t value_begin = 0;    // dueling: first value-stream layer index
    std::size_t adv_begin = 0;      // dueling: first advantage-stream layer index
    std::vector<double> params;

    int input_dim() const { return config.input_dim; }
    int outputs() const { return config.outputs; }
    bool dueling() const { return config.head == HeadKind::Dueling; }

    double* w(const LayerSpec& l) { return params.data() + l.w_off; }
    const double* w(const LayerSpec& l) const { return params.data() + l.w_off; }
    double* b(const LayerSpec& l) { return params.data() + l.b_off; }
    const double* b(const LayerSpec& l) const { return params.data() + l.b_off; }
};

namespace detail {

inline void append_layer(QNetwork& net, int in, int out, bool relu, std::size_t& cursor) {
    LayerSpec l;
    l.in = in;
    l.out = out;
    l.relu = relu;
    l.w_off = cursor;
    cursor += static_cast<std::size_t>(in) * static_cast<std::size_t>(out);
    l.b_off = cursor;
    cursor += static_cast<std::size_t>(out);
    net.layers.push_back(l);
}

}  // namespace detail

// Builds the layer layout and initializes weights uniformly in
// +-sqrt(6/(fan_in+fan_out)), biases zero.
inline QNetwork make_network(const NetConfig& cfg, std::uint64_t seed) {
    if (cfg.input_dim < 1 || cfg.outputs < 1)
        throw std::invalid_argument("make_network: input_dim and outputs must be >= 1");
    for (int hdim : cfg.hidden)
        if (hdim < 1) throw std::invalid_argument("make_network: hidden dims must be >= 1");
    if (cfg.stream_hidden < 0)
        throw std::invalid_argument("make_network: stream_hidden must be >= 0");

    QNetwork net;
    net.config = cfg;
    net.init_seed = seed;
    std::size_t cursor = 0;
    int width = cfg.input_dim;
    for (int hdim : cfg.hidden) {
        detail::append_layer(net, width, hdim, true, cursor);
        width = hdim;
    }
    net.trunk_layers = net.layers.size();
    if (cfg.head == HeadKind::Plain) {
        detail::append_layer(net, width, cfg.outputs, false, cursor);
    } else {
        net.value_begin = net.layers.size();
        if (cfg.stream_hidden > 0) {
            detail::append_layer(net, width, cfg.stream_hidden, true, cursor);
            detail::append_layer(net, cfg.stream_hidden, 1, false, cursor);
        } else {
            detail::append_layer(net, width, 1, false, cursor);
        }
        net.adv_begin = net.layers.size();
        if (cfg.stream_hidden > 0) {
            detail::append_layer(net, width, cfg.stream_hidden, true, cursor);
            detail::append_layer(net, cfg.stream_hidden, cfg.outputs, false, cursor);
        } else {
            detail::append_layer(net, width, cfg.outputs, false, cursor);
        }
    }
    net.params.assign(cursor, 0.0);

    Rng rng(seed);
    for (const auto& l : net.layers) {
        const double bound = std::sqrt(6.0 / static_cast<double>(l.in + l.out));
        double* weights = net.params.data() + l.w_off;
        const std::size_t count = static_cast<std::size_t>(l.in) * static_cast<std::size_t>(l.out);
        for (std::size_t i = 0; i < count; ++i) weights[i] = rng.uniform(-bound, bound);
        // biases stay zero
    }
    return net;
}

// Combines the value and advantage streams into Q-values. Mean mode
// subtracts the advantage mean, max mode the advantage maximum, so the
// decomposition is identifiable either way.
inline std::vector<double> dueling_combine(double v, std::span<const double> a,
                                           CombineMode mode) {
    double shift = 0.0;
    if (mode == CombineMode::Mean) {
        for (double ai : a) shift += ai;
        shift /= static_cast<double>(a.size());
    } else {
        shift = *std::max_element(a.begin(), a.end());
    }
    std::vector<double> q(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) q[i] = v + a[i] - shift;
    return q;
}

// Per-layer activations kept for backpropagation. pre[i] holds the linear
// output of layer i before ReLU, act[i] the values fed to the next layer.
struct ForwardCache {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;
    std::vector<std::vector<double>> act;
    double value = 0.0;                 // dueling scalar stream output
    std::vector<double> advantage;      // dueling vector stream output
    int adv_max_index = -1;             // argmax used by max-mode combine
    std::vector<double> q;
};

namespace detail {

inline void layer_forward(const QNetwork& net, const LayerSpec& l,
                          std::span<const double> x, std::vector<double>& pre,
                          std::vector<double>& act) {
    pre.assign(static_cast<std::size_t>(l.out), 0.0);
    const double* weights = net.w(l);
    const double* bias = net.b(l);
    for (int o = 0; o < l.out; ++o) {
        const double* row = weights + static_cast<std::size_t>(o) * static_cast<std::size_t>(l.in);
        double z = bias[o];
        for (int i = 0; i < l.in; ++i) z += row[i] * x[static_cast<std::size_t>(i)];
        pre[static_cast<std::size_t>(o)] = z;
    }
    act = pre;
    if (l.relu)
        for (double& v : act) v = std::max(0.0, v);
}

}  // namespace detail

inline std::vector<double> forward(const QNetwork& net, std::span<const double> x,
                                   ForwardCache& cache) {
    if (static_cast<int>(x.size()) != net.input_dim())
        throw std::invalid_argument("forward: input size mismatch");
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("forward: non-finite input");

    cache.input.assign(x.begin(), x.end());
    cache.pre.resize(net.layers.size());
    cache.act.resize(net.layers.size());

    std::span<const double> cur = cache.input;
    for (std::size_t i = 0; i < net.trunk_layers; ++i) {
        detail::layer_forward(net, net.layers[i], cur, cache.pre[i], cache.act[i]);
        cur = cache.act[i];
    }

    if (!net.dueling()) {
        const std::size_t out_idx = net.trunk_layers;
        detail::layer_forward(net, net.layers[out_idx], cur, cache.pre[out_idx],
                              cache.act[out_idx]);
        cache.q = cache.act[out_idx];
        return cache.q;
    }

    std::span<const double> trunk_out = cur;
    for (std::size_t i = net.value_begin; i < net.adv_begin; ++i) {
        detail::layer_forward(net, net.layers[i], cur, cache.pre[i], cache.act[i]);
        cur = cache.act[i];
    }
    cache.value = cur[0];
    cur = trunk_out;
    for (std::size_t i = net.adv_begin; i < net.layers.size(); ++i) {
        detail::layer_forward(net, net.layers[i], cur, cache.pre[i], cache.act[i]);
        cur = cache.act[i];
    }
    cache.advantage.assign(cur.begin(), cur.end());
    cache.adv_max_index = static_cast<int>(
        std::max_element(cache.advantage.begin(), cache.advantage.end()) -
        cache.advantage.begin());
    cache.q = dueling_combine(cache.value, cache.advantage, net.config.combine);
    return cache.q;
}

inline std::vector<double> forward(const QNetwork& net, std::span<const double> x) {
    ForwardCache cache;
    return forward(net, x, cache);
}

namespace detail {

// Backpropagates d_out (gradient w.r.t. layer activations) through one layer,
// accumulating parameter gradients and returning the input gradient.
inline std::vector<double> layer_backward(const QNetwork& net, const LayerSpec& l,
                                          std::span<const double> layer_input,
                                          const std::vector<double>& pre,
                                          std::vector<double> d_out,
                                          std::vector<double>& grads) {
    if (l.relu)
        for (int o = 0; o < l.out; ++o)
            if (pre[static_cast<std::size_t>(o)] <= 0.0) d_out[static_cast<std::size_t>(o)] = 0.0;

    std::vector<double> d_in(static_cast<std::size_t>(l.in), 0.0);
    const double* weights = net.w(l);
    double* gw = grads.data() + l.w_off;
    double* gb = grads.data() + l.b_off;
    for (int o = 0; o < l.out; ++o) {
        const double dz = d_out[static_cast<std::size_t>(o)];
        if (dz == 0.0) continue;
        const std::size_t row = static_cast<std::size_t>(o) * static_cast<std::size_t>(l.in);
        gb[o] += dz;
        for (int i = 0; i < l.in; ++i) {
            gw[row + static_cast<std::size_t>(i)] += dz * layer_input[static_cast<std::size_t>(i)];
            d_in[static_cast<std::size_t>(i)] += dz * weights[row + static_cast<std::size_t>(i)];
        }
    }
    return d_in;
}

inline std::span<const double> layer_input(const QNetwork& net, const ForwardCache& cache,
                                           std::size_t layer_idx, std::size_t first_of_block) {
    if (layer_idx == first_of_block) {
        if (first_of_block == 0) return cache.input;
        // head blocks start from the trunk output
        return net.trunk_layers == 0 ? std::span<const double>(cache.input)
                                     : std::span<const double>(cache.act[net.trunk_layers - 1]);
    }
    return cache.act[layer_idx - 1];
}

// Accumulates dloss/dparams into grads given dloss/dQ for one sample.
inline void backward(const QNetwork& net, const ForwardCache& cache,
                     std::span<const double> d_q, std::vector<double>& grads) {
    std::vector<double> d_trunk_out;
    if (!net.dueling()) {
        std::vector<double> d = {d_q.begin(), d_q.end()};
        const std::size_t out_idx = net.trunk_layers;
        d_trunk_out = layer_backward(net, net.layers[out_idx],
                                     layer_input(net, cache, out_idx, net.trunk_layers),
                                     cache.pre[out_idx], std::move(d), grads);
    } else {
        const int n = net.outputs();
        double sum_dq = 0.0;
        for (double v : d_q) sum_dq += v;

        std::vector<double> d_adv(d_q.begin(), d_q.end());
        if (net.config.combine == CombineMode::Mean) {
            const double share = sum_dq / static_cast<double>(n);
            for (double& v : d_adv) v -= share;
        } else {
            d_adv[static_cast<std::size_t>(cache.adv_max_index)] -= sum_dq;
        }

        std::vector<double> d = std::move(d_adv);
        for (std::size_t i = net.layers.size(); i-- > net.adv_begin;)
            d = layer_backward(net, net.layers[i], layer_input(net, cache, i, net.adv_begin),
                               cache.pre[i], std::move(d), grads);
        d_trunk_out = std::move(d);

        d = {sum_dq};
        for (std::size_t i = net.adv_begin; i-- > net.value_begin;)
            d = layer_backward(net, net.layers[i], layer_input(net, cache, i, net.value_begin),
                               cache.pre[i], std::move(d), grads);
        for (std::size_t i = 0; i < d_trunk_out.size(); ++i) d_trunk_out[i] += d[i];
    }

    std::vector<double> d = std::move(d_trunk_out);
    for (std::size_t i = net.trunk_layers; i-- > 0;)
        d = layer_backward(net, net.layers[i], layer_input(net, cache, i, 0), cache.pre[i],
                           std::move(d), grads);
}

}  // namespace detail

// Adam moment accumulators, one entry per network parameter.
struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step_count = 0;
    std::vector<double> m;
    std::vector<double> v;

    AdamState() = default;
    AdamState(const QNetwork& net, double lr)
        : learning_rate(lr), m(net.params.size(), 0.0), v(net.params.size(), 0.0) {}
};

inline void adam_step(QNetwork& net, const std::vector<double>& grads, AdamState& adam) {
    if (grads.size() != net.params.size() || adam.m.size() != net.params.size())
        throw std::invalid_argument("adam_step: shape mismatch");
    adam.step_count += 1;
    const double bc1 = 1.0 - std::pow(adam.beta1, static_cast<double>(adam.step_count));
    const double bc2 = 1.0 - std::pow(adam.beta2, static_cast<double>(adam.step_count));
    for (std::size_t i = 0; i < net.params.size(); ++i) {
        adam.m[i] = adam.beta1 * adam.m[i] + (1.0 - adam.beta1) * grads[i];
        adam.v[i] = adam.beta2 * adam.v[i] + (1.0 - adam.beta2) * grads[i] * grads[i];
        const double m_hat = adam.m[i] / bc1;
        const double v_hat = adam.v[i] / bc2;
        net.params[i] -= adam.learning_rate * m_hat / (std::sqrt(v_hat) + adam.epsilon);
    }
}

// One mini-batch update. Returns the mean squared error over the batch
// before the parameters move; gradients flow only through the Q-value of
// each sample's taken action.
inline double train_step(QNetwork& net, AdamState& adam,
                         const std::vector<std::vector<double>>& inputs,
                         const std::vector<int>& actions,
                         const std::vector<double>& targets) {
    const std::size_t n = inputs.size();
    if (n == 0) throw std::invalid_argument("train_step: empty batch");
    if (actions.size() != n || targets.size() != n)
        throw std::invalid_argument("train_step: batch size mismatch");
    for (double y : targets)
        if (!std::isfinite(y)) throw std::invalid_argument("train_step: non-finite target");

    std::vector<double> grads(net.params.size(), 0.0);
    std::vector<double> d_q(static_cast<std::size_t>(net.outputs()), 0.0);
    ForwardCache cache;
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const int a = actions[i];
        if (a < 0 || a >= net.outputs())
            throw std::invalid_argument("train_step: action index out of range");
        forward(net, inputs[i], cache);
        const double err = cache.q[static_cast<std::size_t>(a)] - targets[i];
        loss += err * err;
        std::fill(d_q.begin(), d_q.end(), 0.0);
        d_q[static_cast<std::size_t>(a)] = 2.0 * err / static_cast<double>(n);
        detail::backward(net, cache, d_q, grads);
    }
    loss /= static_cast<double>(n);
    if (!std::isfinite(loss)) throw std::runtime_error("train_step: loss diverged");

    adam_step(net, grads, adam);
    for (double p : net.params)
        if (!std::isfinite(p)) throw std::runtime_error("train_step: parameters diverged");
    return loss;
}

namespace detail {

inline std::vector<bool> relu_pattern(const QNetwork& net, const ForwardCache& cache) {
    std::vector<bool> pattern;
    for (std::size_t i = 0; i < net.layers.size(); ++i)
        if (net.layers[i].relu)
            for (double z : cache.pre[i]) pattern.push_back(z > 0.0);
    return pattern;
}

}  // namespace detail

// Compares analytic gradients against central finite differences on a
// random sample of parameters and returns the largest relative error.
// Parameters whose +-h evaluations land on different ReLU (or max-combine)
// branches are skipped: the loss is not differentiable across those.
inline double gradient_check(QNetwork& net, std::span<const double> input, int action,
                             double target, Rng& rng, std::size_t max_checked = 200) {
    const double h = 1e-5;
    ForwardCache cache;
    forward(net, input, cache);
    const double base_q = cache.q[static_cast<std::size_t>(action)];
    std::vector<double> analytic(net.params.size(), 0.0);
    std::vector<double> d_q(static_cast<std::size_t>(net.outputs()), 0.0);
    d_q[static_cast<std::size_t>(action)] = 2.0 * (base_q - target);
    detail::backward(net, cache, d_q, analytic);

    std::vector<std::size_t> indices;
    if (net.params.size() <= max_checked) {
        indices.resize(net.params.size());
        for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    } else {
        indices.resize(max_checked);
        for (auto& idx : indices)
            idx = static_cast<std::size_t>(rng.uniform_int(static_cast<int>(net.params.size())));
    }

    ForwardCache plus_cache, minus_cache;
    double max_rel = 0.0;
    for (std::size_t idx : indices) {
        const double saved = net.params[idx];
        net.params[idx] = saved + h;
        forward(net, input, plus_cache);
        net.params[idx] = saved - h;
        forward(net, input, minus_cache);
        net.params[idx] = saved;

        const auto pattern_plus = detail::relu_pattern(net, plus_cache);
        const auto pattern_minus = detail::relu_pattern(net, minus_cache);
        if (pattern_plus != pattern_minus ||
            plus_cache.adv_max_index != minus_cache.adv_max_index)
            continue;

        const double lp = std::pow(plus_cache.q[static_cast<std::size_t>(action)] - target, 2.0);
        const double lm = std::pow(minus_cache.q[static_cast<std::size_t>(action)] - target, 2.0);
        const double numeric = (lp - lm) / (2.0 * h);
        const double denom = std::max({std::abs(analytic[idx]), std::abs(numeric), 1.0});
        max_rel = std::max(max_rel, std::abs(analytic[idx] - numeric) / denom);
    }
    return max_rel;
}

// Copies the online parameters into the target network. Both networks must
// share the same architecture.
inline void sync_target(const QNetwork& online, QNetwork& target) {
    if (online.config.input_dim != target.config.input_dim ||
        online.config.hidden != target.config.hidden ||
        online.config.outputs != target.config.outputs ||
        online.config.head != target.config.head ||
        online.config.stream_hidden != target.config.stream_hidden ||
        online.params.size() != target.params.size())
        throw std::invalid_argument("sync_target: architecture mismatch");
    target.params = online.params;
}

// --- checkpoint format ------------------------------------------------
//
// Little-endian binary:
//   char[8]  magic "UAVQNv1\0"
//   u32      head kind (0 plain, 1 dueling)
//   u32      combine mode (0 mean, 1 max)
//   u64      init seed
//   u32      input_dim
//   u32      hidden layer count, then u32 per hidden width
//   u32      stream_hidden
//   u32      outputs
//   u64      parameter count
//   f64[n]   parameters in declaration order (per layer: weights row-major,
//            then biases; trunk first, then value stream, then advantage
//            stream for dueling heads, or the single output layer for plain)

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'U', 'A', 'V', 'Q', 'N', 'v', '1', '\0'};

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in) {
    T value{};
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw std::runtime_error("checkpoint: truncated file");
    return value;
}

}  // namespace detail

inline void save_network(const QNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_network: cannot open " + path);
    out.write(detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic));
    detail::write_raw(out, static_cast<std::uint32_t>(net.config.head));
    detail::write_raw(out, static_cast<std::uint32_t>(net.config.combine));
    detail::write_raw(out, static_cast<std::uint64_t>(net.init_seed));
    detail::write_raw(out, static_cast<std::uint32_t>(net.config.input_dim));
    detail::write_raw(out, static_cast<std::uint32_t>(net.config.hidden.size()));
    for (int hdim : net.config.hidden)
        detail::write_raw(out, static_cast<std::uint32_t>(hdim));
    detail::write_raw(out, static_cast<std::uint32_t>(net.config.stream_hidden));
    detail::write_raw(out, static_cast<std::uint32_t>(net.config.outputs));
    detail::write_raw(out, static_cast<std::uint64_t>(net.params.size()));
    out.write(reinterpret_cast<const char*>(net.params.data()),
              static_cast<std::streamsize>(net.params.size() * sizeof(double)));
    if (!out) throw std::runtime_error("save_network: write failed for " + path);
}

inline QNetwork load_network(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_network: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, detail::kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("load_network: bad magic in " + path);
    NetConfig cfg;
    const auto head = detail::read_raw<std::uint32_t>(in);
    const auto combine = detail::read_raw<std::uint32_t>(in);
    if (head > 1 || combine > 1) throw std::runtime_error("load_network: bad header");
    cfg.head = static_cast<HeadKind>(head);
    cfg.combine = static_cast<CombineMode>(combine);
    const auto seed = detail::read_raw<std::uint64_t>(in);
    cfg.input_dim = static_cast<int>(detail::read_raw<std::uint32_t>(in));
    const auto n_hidden = detail::read_raw<std::uint32_t>(in);
    cfg.hidden.resize(n_hidden);
    for (auto& hdim : cfg.hidden)
        hdim = static_cast<int>(detail::read_raw<std::uint32_t>(in));
    cfg.stream_hidden = static_cast<int>(detail::read_raw<std::uint32_t>(in));
    cfg.outputs = static_cast<int>(detail::read_raw<std::uint32_t>(in));
    const auto count = detail::read_raw<std::uint64_t>(in);

    QNetwork net = make_network(cfg, seed);
    if (net.params.size() != count)
        throw std::runtime_error("load_network: parameter count mismatch");
    in.read(reinterpret_cast<char*>(net.params.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!in) throw std::runtime_error("load_network: truncated parameters");
    return net;
}

}  // namespace uavrl
