#pragma once

// Layer kernels for the two backends. Convolution, pooling and dense layers
// are linear maps with plaintext weights: on the encrypted path every output
// position is a scalar multiply-accumulate over input ciphertexts followed
// by a single rescale, so each such layer consumes exactly one level.
// Activations evaluate the registered polynomial surrogate (power-basis plan
// on ciphertexts). A trailing sigmoid runs only on the plain path; the
// encrypted pass stops at the pre-sigmoid logits.

#include <chrono>

#include "hecnn/model.hpp"

namespace hecnn {

struct EvalKeys {
    PublicKey pk;   // pad layers encrypt fresh zeros
    EvaluationKey evk;
};

namespace nn_detail {

struct ConvGeom {
    std::size_t kh, kw, stride;
    std::ptrdiff_t pad_top, pad_left;
    Shape in, out;

    static ConvGeom make(const Shape& in, const LayerSpec& l, const Shape& out) {
        ConvGeom g{l.kernel_h, l.kernel_w, l.stride, 0, 0, in, out};
        if (l.padding == LayerSpec::Padding::Same) {
            std::size_t need_h = (out.h - 1) * l.stride + l.kernel_h;
            std::size_t need_w = (out.w - 1) * l.stride + l.kernel_w;
            g.pad_top = need_h > in.h ? static_cast<std::ptrdiff_t>((need_h - in.h) / 2) : 0;
            g.pad_left = need_w > in.w ? static_cast<std::ptrdiff_t>((need_w - in.w) / 2) : 0;
        }
        return g;
    }

    bool tap(std::size_t oy, std::size_t ox, std::size_t ky, std::size_t kx, std::size_t& iy,
             std::size_t& ix) const {
        std::ptrdiff_t y = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad_top;
        std::ptrdiff_t x = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad_left;
        if (y < 0 || x < 0 || y >= static_cast<std::ptrdiff_t>(in.h) || x >= static_cast<std::ptrdiff_t>(in.w))
            return false;
        iy = static_cast<std::size_t>(y);
        ix = static_cast<std::size_t>(x);
        return true;
    }
};

inline std::size_t conv_w_index(const ConvGeom& g, std::size_t ky, std::size_t kx, std::size_t ic,
                                std::size_t oc) {
    return ((ky * g.kw + kx) * g.in.c + ic) * g.out.c + oc;
}

inline double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

}  // namespace nn_detail

// ---- plain kernels ---------------------------------------------------------

inline TensorPlain conv2d_plain(const TensorPlain& x, const LayerSpec& l, const std::vector<double>& w,
                                const std::vector<double>& b, const Shape& out_shape) {
    auto g = nn_detail::ConvGeom::make(x.shape, l, out_shape);
    auto [wc, bc] = param_counts(l, x.shape);
    if (w.size() != wc || b.size() != bc) throw std::invalid_argument("conv2d: weight/bias shape mismatch");
    TensorPlain out = TensorPlain::zeros(out_shape, x.batch);
    for (std::size_t bi = 0; bi < x.batch; ++bi) {
        for (std::size_t oy = 0; oy < out_shape.h; ++oy)
            for (std::size_t ox = 0; ox < out_shape.w; ++ox)
                for (std::size_t oc = 0; oc < out_shape.c; ++oc) {
                    double acc = b[oc];
                    for (std::size_t ky = 0; ky < g.kh; ++ky)
                        for (std::size_t kx = 0; kx < g.kw; ++kx) {
                            std::size_t iy, ix;
                            if (!g.tap(oy, ox, ky, kx, iy, ix)) continue;
                            for (std::size_t ic = 0; ic < x.shape.c; ++ic)
                                acc += x.at(bi, pos_index(x.shape, iy, ix, ic)) *
                                       w[nn_detail::conv_w_index(g, ky, kx, ic, oc)];
                        }
                    out.at(bi, pos_index(out_shape, oy, ox, oc)) = acc;
                }
    }
    return out;
}

inline TensorPlain avg_pool2d_plain(const TensorPlain& x, const LayerSpec& l, const Shape& out_shape) {
    TensorPlain out = TensorPlain::zeros(out_shape, x.batch);
    double inv_area = 1.0 / static_cast<double>(l.pool * l.pool);
    for (std::size_t bi = 0; bi < x.batch; ++bi)
        for (std::size_t oy = 0; oy < out_shape.h; ++oy)
            for (std::size_t ox = 0; ox < out_shape.w; ++ox)
                for (std::size_t ch = 0; ch < out_shape.c; ++ch) {
                    double acc = 0.0;
                    for (std::size_t dy = 0; dy < l.pool; ++dy)
                        for (std::size_t dx = 0; dx < l.pool; ++dx)
                            acc += x.at(bi, pos_index(x.shape, oy * l.pool + dy, ox * l.pool + dx, ch));
                    out.at(bi, pos_index(out_shape, oy, ox, ch)) = acc * inv_area;
                }
    return out;
}

inline TensorPlain zero_pad2d_plain(const TensorPlain& x, const LayerSpec& l, const Shape& out_shape) {
    TensorPlain out = TensorPlain::zeros(out_shape, x.batch);
    for (std::size_t bi = 0; bi < x.batch; ++bi)
        for (std::size_t y = 0; y < x.shape.h; ++y)
            for (std::size_t xx = 0; xx < x.shape.w; ++xx)
                for (std::size_t ch = 0; ch < x.shape.c; ++ch)
                    out.at(bi, pos_index(out_shape, y + l.pad, xx + l.pad, ch)) =
                        x.at(bi, pos_index(x.shape, y, xx, ch));
    return out;
}

inline TensorPlain dense_plain(const TensorPlain& x, const LayerSpec& l, const std::vector<double>& w,
                               const std::vector<double>& b) {
    std::size_t in_f = x.shape.positions();
    if (w.size() != in_f * l.units || b.size() != l.units)
        throw std::invalid_argument("dense: weight/bias shape mismatch");
    TensorPlain out = TensorPlain::zeros(Shape::flattened(l.units), x.batch);
    for (std::size_t bi = 0; bi < x.batch; ++bi)
        for (std::size_t u = 0; u < l.units; ++u) {
            double acc = b[u];
            for (std::size_t i = 0; i < in_f; ++i) acc += x.at(bi, i) * w[i * l.units + u];
            out.at(bi, u) = acc;
        }
    return out;
}

inline TensorPlain activation_plain(const TensorPlain& x, const PolyActivation& act) {
    TensorPlain out = x;
    for (auto& v : out.data) v = eval_plain(act, v);
    return out;
}

inline double sigmoid_exact(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Sequential layer application; the final sigmoid (if present) is exact.
inline TensorPlain forward_plain(const ModelSpec& model, const TensorPlain& x,
                                 std::vector<double>* layer_seconds = nullptr) {
    if (!(x.shape == model.input))
        throw std::invalid_argument("forward_plain: input shape " + x.shape.str() + " != model input " +
                                    model.input.str());
    std::vector<Shape> shapes = shape_infer(model);
    TensorPlain cur = x;
    if (layer_seconds) layer_seconds->assign(model.layers.size(), 0.0);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        double t0 = nn_detail::now_seconds();
        const LayerSpec& l = model.layers[i];
        if (l.kind == LayerSpec::Kind::Dense && !cur.shape.flat) cur = cur.flattened();
        switch (l.kind) {
            case LayerSpec::Kind::Conv2d:
                cur = conv2d_plain(cur, l, model.weights[i], model.biases[i], shapes[i]);
                break;
            case LayerSpec::Kind::AvgPool2d: cur = avg_pool2d_plain(cur, l, shapes[i]); break;
            case LayerSpec::Kind::ZeroPad2d: cur = zero_pad2d_plain(cur, l, shapes[i]); break;
            case LayerSpec::Kind::Dense: cur = dense_plain(cur, l, model.weights[i], model.biases[i]); break;
            case LayerSpec::Kind::Activation: cur = activation_plain(cur, model.surrogate(l.surrogate)); break;
            case LayerSpec::Kind::Sigmoid:
                for (auto& v : cur.data) v = sigmoid_exact(v);
                break;
        }
        if (layer_seconds) (*layer_seconds)[i] = nn_detail::now_seconds() - t0;
    }
    return cur;
}

// ---- encrypted kernels ------------------------------------------------------

namespace nn_detail {

inline TensorEncrypted conv2d_encrypted(const CkksEngine& eng, const TensorEncrypted& x, const LayerSpec& l,
                                        const std::vector<double>& w, const std::vector<double>& b,
                                        const Shape& out_shape, unsigned threads) {
    auto g = ConvGeom::make(x.shape, l, out_shape);
    auto [wc, bc] = param_counts(l, x.shape);
    if (w.size() != wc || b.size() != bc) throw std::invalid_argument("conv2d: weight/bias shape mismatch");
    if (x.level() == 0) throw std::invalid_argument("conv2d: no level headroom");
    double wscale = eng.params().scale;
    std::size_t level = x.level();
    // weights are reused across spatial positions; encode each once
    std::vector<CkksEngine::ScalarPlain> wsp(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) wsp[i] = eng.make_scalar_plain(w[i], wscale, level);

    TensorEncrypted out;
    out.shape = out_shape;
    out.batch = x.batch;
    out.cells.resize(out_shape.positions());
    double acc_scale = x.scale() * wscale;
    parallel_for(out_shape.h * out_shape.w, threads, [&](std::size_t pb, std::size_t pe) {
        for (std::size_t p = pb; p < pe; ++p) {
            std::size_t oy = p / out_shape.w, ox = p % out_shape.w;
            for (std::size_t oc = 0; oc < out_shape.c; ++oc) {
                Ciphertext acc = eng.make_zero_ciphertext(level, acc_scale);
                for (std::size_t ky = 0; ky < g.kh; ++ky)
                    for (std::size_t kx = 0; kx < g.kw; ++kx) {
                        std::size_t iy, ix;
                        if (!g.tap(oy, ox, ky, kx, iy, ix)) continue;
                        for (std::size_t ic = 0; ic < x.shape.c; ++ic)
                            eng.mul_scalar_mac(acc, x.cells[pos_index(x.shape, iy, ix, ic)],
                                               wsp[conv_w_index(g, ky, kx, ic, oc)]);
                    }
                eng.add_scalar_inplace(acc, b[oc]);
                out.cells[pos_index(out_shape, oy, ox, oc)] = eng.rescale(acc);
            }
        }
    });
    return out;
}

inline TensorEncrypted avg_pool2d_encrypted(const CkksEngine& eng, const TensorEncrypted& x,
                                            const LayerSpec& l, const Shape& out_shape, unsigned threads) {
    if (x.level() == 0) throw std::invalid_argument("avg_pool2d: no level headroom");
    double inv_area = 1.0 / static_cast<double>(l.pool * l.pool);
    CkksEngine::ScalarPlain sp = eng.make_scalar_plain(inv_area, eng.params().scale, x.level());
    TensorEncrypted out;
    out.shape = out_shape;
    out.batch = x.batch;
    out.cells.resize(out_shape.positions());
    parallel_for(out_shape.positions(), threads, [&](std::size_t pb, std::size_t pe) {
        for (std::size_t p = pb; p < pe; ++p) {
            std::size_t ch = p % out_shape.c;
            std::size_t oxy = p / out_shape.c;
            std::size_t oy = oxy / out_shape.w, ox = oxy % out_shape.w;
            Ciphertext sum = x.cells[pos_index(x.shape, oy * l.pool, ox * l.pool, ch)];
            for (std::size_t dy = 0; dy < l.pool; ++dy)
                for (std::size_t dx = 0; dx < l.pool; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    eng.add_inplace(sum, x.cells[pos_index(x.shape, oy * l.pool + dy, ox * l.pool + dx, ch)]);
                }
            Ciphertext scaled = eng.make_zero_ciphertext(sum.level, sum.scale * sp.scale);
            eng.mul_scalar_mac(scaled, sum, sp);
            out.cells[p] = eng.rescale(scaled);
        }
    });
    return out;
}

inline TensorEncrypted zero_pad2d_encrypted(const CkksEngine& eng, const PublicKey& pk,
                                            const TensorEncrypted& x, const LayerSpec& l,
                                            const Shape& out_shape, u64 seed, unsigned threads) {
    TensorEncrypted out;
    out.shape = out_shape;
    out.batch = x.batch;
    out.cells.resize(out_shape.positions());
    double scale = x.scale();
    std::size_t level = x.level();
    parallel_for(out_shape.positions(), threads, [&](std::size_t pb, std::size_t pe) {
        for (std::size_t p = pb; p < pe; ++p) {
            std::size_t ch = p % out_shape.c;
            std::size_t xy = p / out_shape.c;
            std::size_t y = xy / out_shape.w, xx = xy % out_shape.w;
            bool inside = y >= l.pad && y < l.pad + x.shape.h && xx >= l.pad && xx < l.pad + x.shape.w;
            if (inside) {
                out.cells[p] = x.cells[pos_index(x.shape, y - l.pad, xx - l.pad, ch)];
            } else {
                // fresh encryption of zero at the tensor's scale, lowered to its level
                EncodedPlaintext zero = eng.encode_const(0.0, scale, eng.top_level());
                Ciphertext ct = eng.encrypt(pk, zero, CkksEngine::derive_seed(seed, 0xbad0 + p));
                out.cells[p] = eng.mod_switch(ct, level);
            }
        }
    });
    return out;
}

inline TensorEncrypted dense_encrypted(const CkksEngine& eng, const TensorEncrypted& x, const LayerSpec& l,
                                       const std::vector<double>& w, const std::vector<double>& b,
                                       unsigned threads) {
    std::size_t in_f = x.shape.positions();
    if (w.size() != in_f * l.units || b.size() != l.units)
        throw std::invalid_argument("dense: weight/bias shape mismatch");
    if (x.level() == 0) throw std::invalid_argument("dense: no level headroom");
    double wscale = eng.params().scale;
    std::size_t level = x.level();
    double acc_scale = x.scale() * wscale;
    TensorEncrypted out;
    out.shape = Shape::flattened(l.units);
    out.batch = x.batch;
    out.cells.resize(l.units);
    parallel_for(l.units, threads, [&](std::size_t ub, std::size_t ue) {
        for (std::size_t u = ub; u < ue; ++u) {
            Ciphertext acc = eng.make_zero_ciphertext(level, acc_scale);
            for (std::size_t i = 0; i < in_f; ++i)
                eng.mul_scalar_mac(acc, x.cells[i], eng.make_scalar_plain(w[i * l.units + u], wscale, level));
            eng.add_scalar_inplace(acc, b[u]);
            out.cells[u] = eng.rescale(acc);
        }
    });
    return out;
}

}  // namespace nn_detail

// Same layer sequence over ciphertext tensors; the output is the encrypted
// pre-sigmoid logits. Depth exhaustion is reported with the offending layer.
inline TensorEncrypted forward_encrypted(const ModelSpec& model, const TensorEncrypted& x,
                                         const CkksEngine& eng, const EvalKeys& keys, u64 seed = 1,
                                         unsigned threads = 1, std::vector<double>* layer_seconds = nullptr) {
    if (!(x.shape == model.input))
        throw std::invalid_argument("forward_encrypted: input shape " + x.shape.str() + " != model input " +
                                    model.input.str());
    std::vector<Shape> shapes = shape_infer(model);

    // pre-flight level accounting, so failures name the layer
    std::ptrdiff_t level = static_cast<std::ptrdiff_t>(x.level());
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        std::size_t cost = 0;
        switch (model.layers[i].kind) {
            case LayerSpec::Kind::Conv2d:
            case LayerSpec::Kind::AvgPool2d:
            case LayerSpec::Kind::Dense: cost = 1; break;
            case LayerSpec::Kind::Activation:
                cost = model.surrogate(model.layers[i].surrogate).encrypted_depth();
                break;
            default: break;
        }
        level -= static_cast<std::ptrdiff_t>(cost);
        if (level < 0)
            throw std::invalid_argument("forward_encrypted: depth budget exhausted at layer " +
                                        std::to_string(i) + " (" + model.layers[i].kind_name() + ")");
    }

    TensorEncrypted cur = x;
    if (layer_seconds) layer_seconds->assign(model.layers.size(), 0.0);
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        double t0 = nn_detail::now_seconds();
        const LayerSpec& l = model.layers[i];
        if (l.kind == LayerSpec::Kind::Dense && !cur.shape.flat) cur.shape = cur.shape.as_flat();
        u64 layer_seed = CkksEngine::derive_seed(seed, 0x1a7e + i);
        switch (l.kind) {
            case LayerSpec::Kind::Conv2d:
                cur = nn_detail::conv2d_encrypted(eng, cur, l, model.weights[i], model.biases[i], shapes[i],
                                                  threads);
                break;
            case LayerSpec::Kind::AvgPool2d:
                cur = nn_detail::avg_pool2d_encrypted(eng, cur, l, shapes[i], threads);
                break;
            case LayerSpec::Kind::ZeroPad2d:
                cur = nn_detail::zero_pad2d_encrypted(eng, keys.pk, cur, l, shapes[i], layer_seed, threads);
                break;
            case LayerSpec::Kind::Dense:
                cur = nn_detail::dense_encrypted(eng, cur, l, model.weights[i], model.biases[i], threads);
                break;
            case LayerSpec::Kind::Activation: {
                const PolyActivation& act = model.surrogate(l.surrogate);
                TensorEncrypted next;
                next.shape = cur.shape;
                next.batch = cur.batch;
                next.cells.resize(cur.cells.size());
                parallel_for(cur.cells.size(), threads, [&](std::size_t cb, std::size_t ce) {
                    for (std::size_t p = cb; p < ce; ++p)
                        next.cells[p] = eval_encrypted(act, cur.cells[p], eng, keys.evk);
                });
                cur = std::move(next);
                break;
            }
            case LayerSpec::Kind::Sigmoid:
                // monotone; the client thresholds the decrypted logit at 0 instead
                break;
        }
        cur.check_uniform();
        if (layer_seconds) (*layer_seconds)[i] = nn_detail::now_seconds() - t0;
    }
    return cur;
}

}  // namespace hecnn
