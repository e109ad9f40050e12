#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ifc/nn.hpp"
#include "ifc/tensor.hpp"

namespace ifc {

enum class LayerKind {
    conv,
    batchnorm,
    relu,
    maxpool,
    transpose_conv,
    concat,
    add,
    subtract,
    linear_activation,
};

// One graph node. inputs holds node indices; -1 refers to the network input.
// transpose_conv upsamples to the spatial size of node target_of.
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    int filters = 0;
    int kernel = 0;
    int stride = 1;
    std::vector<int> inputs;
    int target_of = -1;
};

struct ModelGraph {
    std::string name;
    double width_mult = 1.0;
    std::vector<LayerSpec> layers;
    int output = -1;
};

struct Shape {
    int c = 0, h = 0, w = 0;
    bool operator==(const Shape&) const = default;
};

// Checks acyclicity (inputs precede nodes) and hyperparameter validity.
void validate_graph(const ModelGraph& g);

// Exact output shape of every node for the given input shape.
std::vector<Shape> infer_shapes(const ModelGraph& g, Shape input);

// Parameter names: n{i}.w / n{i}.b for conv and transpose_conv,
// n{i}.scale / n{i}.shift / n{i}.mean / n{i}.var for batchnorm.
std::map<std::string, std::array<int, 4>> expected_params(const ModelGraph& g, int input_channels);

// Graph descriptor embedded in weights files, e.g. "arch=res-unet width_mult=0.5".
std::string graph_descriptor(const ModelGraph& g);

struct WeightsFile {
    std::string descriptor;
    std::map<std::string, Tensor4<float>> tensors;
};

// "DCTW" container: version byte, descriptor text, then named float32 tensors
// (including batchnorm running stats), all integers little-endian.
void save_weights(const std::string& path, const WeightsFile& weights);
WeightsFile load_weights(const std::string& path);

// ---------------------------------------------------------------------------
// Executor

template <class S>
using ParamMap = std::map<std::string, Tensor4<S>>;

template <class S>
ParamMap<S> cast_params(const ParamMap<float>& params) {
    ParamMap<S> out;
    for (const auto& [name, t] : params) out.emplace(name, t.template cast<S>());
    return out;
}

inline std::string param_key(int node, const char* field) {
    return "n" + std::to_string(node) + "." + field;
}

// He-normal weights, zero biases, identity batchnorm affine, unit running variance.
template <class S>
ParamMap<S> init_params(const ModelGraph& g, int input_channels, Rng& rng) {
    ParamMap<S> params;
    for (const auto& [name, d] : expected_params(g, input_channels)) {
        Tensor4<S> t(d[0], d[1], d[2], d[3]);
        if (name.ends_with(".w"))
            he_init(t, rng);
        else if (name.ends_with(".scale") || name.ends_with(".var"))
            std::fill(t.v.begin(), t.v.end(), S(1));
        params.emplace(name, std::move(t));
    }
    return params;
}

template <class S>
struct ForwardTrace {
    std::vector<Tensor4<S>> outputs;
    std::vector<BatchNormCache<S>> bn;
    std::vector<std::vector<int64_t>> pool_argmax;
};

// Executes the graph. Train mode updates batchnorm running statistics in
// params; pass a trace to enable backward().
template <class S>
Tensor4<S> forward(const ModelGraph& g, const Tensor4<S>& x, ParamMap<S>& params, Mode mode,
                   ForwardTrace<S>* trace = nullptr) {
    validate_graph(g);
    if (x.c <= 0) fail("input channels must be positive");
    int n = int(g.layers.size());
    std::vector<Tensor4<S>> acts(n);
    if (trace) {
        trace->outputs.clear();
        trace->bn.assign(n, {});
        trace->pool_argmax.assign(n, {});
    }
    auto in_act = [&](int idx) -> const Tensor4<S>& { return idx < 0 ? x : acts[idx]; };
    for (int i = 0; i < n; ++i) {
        const LayerSpec& l = g.layers[i];
        const Tensor4<S>& a = in_act(l.inputs.at(0));
        switch (l.kind) {
            case LayerKind::conv:
                acts[i] = conv2d_forward(a, params.at(param_key(i, "w")),
                                         params.at(param_key(i, "b")), l.stride, PadMode::same);
                break;
            case LayerKind::batchnorm: {
                BatchNormCache<S> cache;
                acts[i] = batchnorm_forward(a, params.at(param_key(i, "scale")),
                                            params.at(param_key(i, "shift")),
                                            params.at(param_key(i, "mean")),
                                            params.at(param_key(i, "var")), mode,
                                            trace ? &cache : nullptr);
                if (trace) trace->bn[i] = std::move(cache);
                break;
            }
            case LayerKind::relu:
                acts[i] = relu_forward(a);
                break;
            case LayerKind::maxpool: {
                MaxPoolResult<S> r = maxpool_forward(a, 3, l.stride);
                acts[i] = std::move(r.out);
                if (trace) trace->pool_argmax[i] = std::move(r.argmax);
                break;
            }
            case LayerKind::transpose_conv: {
                const Tensor4<S>& target = in_act(l.target_of);
                acts[i] = transpose_conv_forward(a, params.at(param_key(i, "w")),
                                                 params.at(param_key(i, "b")), l.stride, target.h,
                                                 target.w);
                break;
            }
            case LayerKind::concat:
                acts[i] = concat_channels(a, in_act(l.inputs.at(1)));
                break;
            case LayerKind::add:
                acts[i] = add(a, in_act(l.inputs.at(1)));
                break;
            case LayerKind::subtract:
                acts[i] = subtract(a, in_act(l.inputs.at(1)));
                break;
            case LayerKind::linear_activation:
                acts[i] = a;
                break;
        }
    }
    Tensor4<S> out = acts[g.output];
    if (trace) trace->outputs = std::move(acts);
    return out;
}

// Gradients for trainable parameters (w, b, scale, shift), keyed like params.
template <class S>
ParamMap<S> backward(const ModelGraph& g, const Tensor4<S>& x, const ForwardTrace<S>& trace,
                     const ParamMap<S>& params, const Tensor4<S>& grad_out) {
    int n = int(g.layers.size());
    if (int(trace.outputs.size()) != n) fail("trace does not match graph");
    std::vector<std::optional<Tensor4<S>>> node_grad(n);
    auto accumulate = [&](int idx, Tensor4<S>&& grad) {
        if (idx < 0) return;  // gradient w.r.t. the network input is not needed
        if (node_grad[idx])
            *node_grad[idx] = add(*node_grad[idx], grad);
        else
            node_grad[idx] = std::move(grad);
    };
    auto in_act = [&](int idx) -> const Tensor4<S>& { return idx < 0 ? x : trace.outputs[idx]; };
    ParamMap<S> grads;
    node_grad[g.output] = grad_out;
    for (int i = n - 1; i >= 0; --i) {
        if (!node_grad[i]) continue;
        Tensor4<S> gout = std::move(*node_grad[i]);
        node_grad[i].reset();
        const LayerSpec& l = g.layers[i];
        const Tensor4<S>& a = in_act(l.inputs.at(0));
        switch (l.kind) {
            case LayerKind::conv: {
                ConvGrads<S> cg =
                    conv2d_backward(a, params.at(param_key(i, "w")), gout, l.stride, PadMode::same);
                grads.emplace(param_key(i, "w"), std::move(cg.w));
                grads.emplace(param_key(i, "b"), std::move(cg.b));
                accumulate(l.inputs[0], std::move(cg.x));
                break;
            }
            case LayerKind::batchnorm: {
                BatchNormGrads<S> bg =
                    batchnorm_backward(gout, trace.bn[i], params.at(param_key(i, "scale")));
                grads.emplace(param_key(i, "scale"), std::move(bg.scale));
                grads.emplace(param_key(i, "shift"), std::move(bg.shift));
                accumulate(l.inputs[0], std::move(bg.x));
                break;
            }
            case LayerKind::relu:
                accumulate(l.inputs[0], relu_backward(a, gout));
                break;
            case LayerKind::maxpool: {
                MaxPoolResult<S> fwd{trace.outputs[i], trace.pool_argmax[i]};
                accumulate(l.inputs[0], maxpool_backward(a, fwd, gout));
                break;
            }
            case LayerKind::transpose_conv: {
                ConvGrads<S> cg =
                    transpose_conv_backward(a, params.at(param_key(i, "w")), gout, l.stride);
                grads.emplace(param_key(i, "w"), std::move(cg.w));
                grads.emplace(param_key(i, "b"), std::move(cg.b));
                accumulate(l.inputs[0], std::move(cg.x));
                break;
            }
            case LayerKind::concat: {
                auto [ga, gb] = split_channels(gout, a.c);
                accumulate(l.inputs[0], std::move(ga));
                accumulate(l.inputs[1], std::move(gb));
                break;
            }
            case LayerKind::add:
                accumulate(l.inputs[0], Tensor4<S>(gout));
                accumulate(l.inputs[1], std::move(gout));
                break;
            case LayerKind::subtract: {
                Tensor4<S> neg = gout;
                for (S& v : neg.v) v = -v;
                accumulate(l.inputs[0], std::move(gout));
                accumulate(l.inputs[1], std::move(neg));
                break;
            }
            case LayerKind::linear_activation:
                accumulate(l.inputs[0], std::move(gout));
                break;
        }
    }
    return grads;
}

}  // namespace ifc
