#pragma once

// Layer and model specifications shared by both inference backends, shape
// inference, level-cost accounting, and the built-in AlexNet-style
// architecture for 32x32 color inputs.

#include "hecnn/activation.hpp"
#include "hecnn/tensor.hpp"

namespace hecnn {

struct LayerSpec {
    enum class Kind { Conv2d, AvgPool2d, ZeroPad2d, Dense, Activation, Sigmoid };
    enum class Padding { Same, Valid };

    Kind kind = Kind::Conv2d;
    std::size_t filters = 0, kernel_h = 0, kernel_w = 0, stride = 1;  // conv2d
    Padding padding = Padding::Same;
    std::size_t pool = 0;       // avg_pool2d (square window, stride = window)
    std::size_t pad = 0;        // zero_pad2d (symmetric)
    std::size_t units = 0;      // dense
    std::string surrogate;      // activation: registered PolyActivation name

    static LayerSpec conv2d(std::size_t filters, std::size_t kh, std::size_t kw, std::size_t stride = 1,
                            Padding padding = Padding::Same) {
        LayerSpec l;
        l.kind = Kind::Conv2d;
        l.filters = filters;
        l.kernel_h = kh;
        l.kernel_w = kw;
        l.stride = stride;
        l.padding = padding;
        return l;
    }
    static LayerSpec avg_pool2d(std::size_t pool) {
        LayerSpec l;
        l.kind = Kind::AvgPool2d;
        l.pool = pool;
        return l;
    }
    static LayerSpec zero_pad2d(std::size_t pad) {
        LayerSpec l;
        l.kind = Kind::ZeroPad2d;
        l.pad = pad;
        return l;
    }
    static LayerSpec dense(std::size_t units) {
        LayerSpec l;
        l.kind = Kind::Dense;
        l.units = units;
        return l;
    }
    static LayerSpec activation(std::string surrogate) {
        LayerSpec l;
        l.kind = Kind::Activation;
        l.surrogate = std::move(surrogate);
        return l;
    }
    static LayerSpec sigmoid() {
        LayerSpec l;
        l.kind = Kind::Sigmoid;
        return l;
    }

    const char* kind_name() const {
        switch (kind) {
            case Kind::Conv2d: return "conv2d";
            case Kind::AvgPool2d: return "avg_pool2d";
            case Kind::ZeroPad2d: return "zero_pad2d";
            case Kind::Dense: return "dense";
            case Kind::Activation: return "activation";
            case Kind::Sigmoid: return "sigmoid";
        }
        return "?";
    }
};

struct ModelSpec {
    Shape input;
    std::vector<LayerSpec> layers;
    std::map<std::string, PolyActivation> activations;
    std::vector<double> channel_scale;         // preprocessing: per-channel input multiplier
    std::vector<std::vector<double>> weights;  // parallel to layers; empty for non-parameter layers
    std::vector<std::vector<double>> biases;

    const PolyActivation& surrogate(const std::string& name) const {
        auto it = activations.find(name);
        if (it == activations.end())
            throw std::invalid_argument("model: activation layer references unregistered surrogate '" + name + "'");
        return it->second;
    }

    void ensure_param_slots() {
        weights.resize(layers.size());
        biases.resize(layers.size());
    }
};

namespace nn_detail {

inline std::size_t conv_out_dim(std::size_t in, std::size_t k, std::size_t s, LayerSpec::Padding p) {
    if (p == LayerSpec::Padding::Same) return (in + s - 1) / s;
    if (in < k) throw std::invalid_argument("shape_infer: conv kernel larger than input (valid padding)");
    return (in - k) / s + 1;
}

}  // namespace nn_detail

// Output shape of one layer; flatten is implicit before the first dense layer.
inline Shape infer_layer_shape(const ModelSpec& model, const LayerSpec& l, const Shape& in) {
    using K = LayerSpec::Kind;
    switch (l.kind) {
        case K::Conv2d: {
            if (in.flat) throw std::invalid_argument("shape_infer: conv2d on flattened input");
            if (l.filters == 0 || l.kernel_h == 0 || l.kernel_w == 0 || l.stride == 0)
                throw std::invalid_argument("shape_infer: conv2d parameters must be positive");
            return Shape::spatial(nn_detail::conv_out_dim(in.h, l.kernel_h, l.stride, l.padding),
                                  nn_detail::conv_out_dim(in.w, l.kernel_w, l.stride, l.padding), l.filters);
        }
        case K::AvgPool2d: {
            if (in.flat) throw std::invalid_argument("shape_infer: avg_pool2d on flattened input");
            if (l.pool == 0) throw std::invalid_argument("shape_infer: pool size must be positive");
            if (in.h < l.pool || in.w < l.pool)
                throw std::invalid_argument("shape_infer: spatial dims smaller than pool size");
            return Shape::spatial(in.h / l.pool, in.w / l.pool, in.c);
        }
        case K::ZeroPad2d: {
            if (in.flat) throw std::invalid_argument("shape_infer: zero_pad2d on flattened input");
            return Shape::spatial(in.h + 2 * l.pad, in.w + 2 * l.pad, in.c);
        }
        case K::Dense: {
            if (l.units == 0) throw std::invalid_argument("shape_infer: dense units must be positive");
            return Shape::flattened(l.units);
        }
        case K::Activation:
            model.surrogate(l.surrogate);  // must be registered
            return in;
        case K::Sigmoid:
            return in;
    }
    throw std::invalid_argument("shape_infer: unknown layer kind");
}

// Per-layer output shapes. Also validates the sigmoid-only-final rule.
inline std::vector<Shape> shape_infer(const ModelSpec& model) {
    std::vector<Shape> out;
    Shape cur = model.input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const LayerSpec& l = model.layers[i];
        if (l.kind == LayerSpec::Kind::Sigmoid && i + 1 != model.layers.size())
            throw std::invalid_argument("shape_infer: sigmoid allowed only as final layer");
        if (l.kind == LayerSpec::Kind::Dense && !cur.flat) cur = cur.as_flat();  // implicit flatten
        cur = infer_layer_shape(model, l, cur);
        out.push_back(cur);
    }
    return out;
}

// (weight count, bias count) for a parameter layer given its input shape.
inline std::pair<std::size_t, std::size_t> param_counts(const LayerSpec& l, const Shape& in) {
    if (l.kind == LayerSpec::Kind::Conv2d) return {l.kernel_h * l.kernel_w * in.c * l.filters, l.filters};
    if (l.kind == LayerSpec::Kind::Dense) return {in.positions() * l.units, l.units};
    return {0, 0};
}

// Levels consumed by the encrypted pass: one per conv/pool/dense, the power
// plan's depth per activation, none for padding. A trailing sigmoid is
// evaluated client-side after decryption and costs nothing.
inline std::size_t depth_cost(const ModelSpec& model) {
    std::size_t cost = 0;
    for (const auto& l : model.layers) {
        switch (l.kind) {
            case LayerSpec::Kind::Conv2d:
            case LayerSpec::Kind::AvgPool2d:
            case LayerSpec::Kind::Dense: cost += 1; break;
            case LayerSpec::Kind::Activation: cost += model.surrogate(l.surrogate).encrypted_depth(); break;
            case LayerSpec::Kind::ZeroPad2d:
            case LayerSpec::Kind::Sigmoid: break;
        }
    }
    return cost;
}

inline constexpr const char* kDefaultSurrogateName = "relu-poly2";

// The built-in AlexNet-style stack for 32x32x3 inputs: four convolutions,
// four 2x2 average pools, three zero-pads, three dense layers, a degree-2
// polynomial activation after every conv/dense, and a final sigmoid.
inline ModelSpec alexnet32_preset() {
    ModelSpec m;
    m.input = Shape::spatial(32, 32, 3);
    m.activations[kDefaultSurrogateName] = relu_default_surrogate();
    auto act = [] { return LayerSpec::activation(kDefaultSurrogateName); };
    m.layers = {
        LayerSpec::conv2d(96, 11, 11),   // 1
        act(),                           // 2
        LayerSpec::avg_pool2d(2),        // 3
        LayerSpec::conv2d(256, 5, 5),    // 4
        act(),                           // 5
        LayerSpec::avg_pool2d(2),        // 6
        LayerSpec::zero_pad2d(1),        // 7
        LayerSpec::conv2d(384, 3, 3),    // 8
        act(),                           // 9
        LayerSpec::avg_pool2d(2),        // 10
        LayerSpec::zero_pad2d(1),        // 11
        LayerSpec::conv2d(384, 3, 3),    // 12
        act(),                           // 13
        LayerSpec::zero_pad2d(1),        // 14
        LayerSpec::avg_pool2d(2),        // 15
        LayerSpec::dense(4096),          // 16
        act(),                           // 17
        LayerSpec::dense(4096),          // 18
        act(),                           // 19
        LayerSpec::dense(1),             // 20
        LayerSpec::sigmoid(),            // 21
    };
    m.ensure_param_slots();
    return m;
}

// A small conv net that fits an 8-level budget; handy default for demos and
// the encrypted-path tests.
inline ModelSpec tiny_preset() {
    ModelSpec m;
    m.input = Shape::spatial(8, 8, 3);
    m.activations[kDefaultSurrogateName] = relu_default_surrogate();
    m.layers = {
        LayerSpec::conv2d(4, 3, 3),
        LayerSpec::activation(kDefaultSurrogateName),
        LayerSpec::avg_pool2d(2),
        LayerSpec::dense(1),
    };
    m.ensure_param_slots();
    return m;
}

}  // namespace hecnn
