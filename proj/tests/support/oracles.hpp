#pragma once

// Independent reference implementations used as test oracles. These are
// deliberately written as straight-line arithmetic, sharing no code with the
// library paths they check.

#include <complex>
#include <vector>

#include "hecnn/model.hpp"
#include "hecnn/ring.hpp"

namespace hecnn::test {

// O(n^2) negacyclic convolution over one prime, signed 128-bit accumulation.
inline std::vector<u64> naive_negacyclic(const std::vector<u64>& a, const std::vector<u64>& b, u64 q) {
    std::size_t n = a.size();
    std::vector<u64> out(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        u128 pos = 0, neg = 0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t j = k >= i ? k - i : k + n - i;
            u128 term = (static_cast<u128>(a[i]) * b[j]) % q;
            if (k >= i)
                pos += term;
            else
                neg += term;  // wrapped: X^n = -1
            if ((i & 15) == 15) {
                pos %= q;
                neg %= q;
            }
        }
        pos %= q;
        neg %= q;
        out[k] = static_cast<u64>((pos + q - neg) % q);
    }
    return out;
}

// Plain-loop conv reference (same NHWC/same-valid semantics as the spec'd layer).
inline TensorPlain naive_conv2d(const TensorPlain& x, std::size_t filters, std::size_t kh, std::size_t kw,
                                std::size_t stride, bool same, const std::vector<double>& w,
                                const std::vector<double>& b) {
    std::size_t oh = same ? (x.shape.h + stride - 1) / stride : (x.shape.h - kh) / stride + 1;
    std::size_t ow = same ? (x.shape.w + stride - 1) / stride : (x.shape.w - kw) / stride + 1;
    std::ptrdiff_t pad_top = 0, pad_left = 0;
    if (same) {
        std::size_t need_h = (oh - 1) * stride + kh;
        std::size_t need_w = (ow - 1) * stride + kw;
        if (need_h > x.shape.h) pad_top = static_cast<std::ptrdiff_t>((need_h - x.shape.h) / 2);
        if (need_w > x.shape.w) pad_left = static_cast<std::ptrdiff_t>((need_w - x.shape.w) / 2);
    }
    Shape os = Shape::spatial(oh, ow, filters);
    TensorPlain out = TensorPlain::zeros(os, x.batch);
    for (std::size_t bi = 0; bi < x.batch; ++bi)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                for (std::size_t oc = 0; oc < filters; ++oc) {
                    double acc = b[oc];
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx)
                            for (std::size_t ic = 0; ic < x.shape.c; ++ic) {
                                std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pad_top;
                                std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * stride + kx) - pad_left;
                                if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(x.shape.h) ||
                                    ix >= static_cast<std::ptrdiff_t>(x.shape.w))
                                    continue;
                                acc += x.at(bi, (static_cast<std::size_t>(iy) * x.shape.w +
                                                 static_cast<std::size_t>(ix)) *
                                                        x.shape.c +
                                                    ic) *
                                       w[((ky * kw + kx) * x.shape.c + ic) * filters + oc];
                            }
                    out.at(bi, (oy * ow + ox) * filters + oc) = acc;
                }
    return out;
}

inline TensorPlain naive_avg_pool(const TensorPlain& x, std::size_t pool) {
    Shape os = Shape::spatial(x.shape.h / pool, x.shape.w / pool, x.shape.c);
    TensorPlain out = TensorPlain::zeros(os, x.batch);
    for (std::size_t bi = 0; bi < x.batch; ++bi)
        for (std::size_t oy = 0; oy < os.h; ++oy)
            for (std::size_t ox = 0; ox < os.w; ++ox)
                for (std::size_t c = 0; c < os.c; ++c) {
                    double s = 0;
                    for (std::size_t dy = 0; dy < pool; ++dy)
                        for (std::size_t dx = 0; dx < pool; ++dx)
                            s += x.at(bi, ((oy * pool + dy) * x.shape.w + ox * pool + dx) * x.shape.c + c);
                    out.at(bi, (oy * os.w + ox) * os.c + c) = s / static_cast<double>(pool * pool);
                }
    return out;
}

inline TensorPlain naive_dense(const TensorPlain& x, std::size_t units, const std::vector<double>& w,
                               const std::vector<double>& b) {
    std::size_t in_f = x.shape.positions();
    TensorPlain out = TensorPlain::zeros(Shape::flattened(units), x.batch);
    for (std::size_t bi = 0; bi < x.batch; ++bi)
        for (std::size_t u = 0; u < units; ++u) {
            double acc = b[u];
            for (std::size_t i = 0; i < in_f; ++i) acc += x.at(bi, i) * w[i * units + u];
            out.at(bi, u) = acc;
        }
    return out;
}

inline double max_slot_err(const PlaintextVector& got, const std::vector<double>& want) {
    double m = 0;
    for (std::size_t i = 0; i < want.size(); ++i)
        m = std::max(m, std::abs(got[i] - std::complex<double>{want[i], 0.0}));
    return m;
}

inline std::vector<double> random_reals(Rng& rng, std::size_t n, double lo, double hi) {
    std::vector<double> v(n);
    for (auto& x : v) x = lo + (hi - lo) * rng.uniform01();
    return v;
}

// magnitudes in [0.5, 1], random sign: products stay away from zero so
// relative error is meaningful
inline std::vector<double> random_away_from_zero(Rng& rng, std::size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) x = (0.5 + 0.5 * rng.uniform01()) * (rng.below(2) ? 1.0 : -1.0);
    return v;
}

}  // namespace hecnn::test
