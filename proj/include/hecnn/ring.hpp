#pragma once

// Arithmetic in R_q = Z_q[X]/(X^n + 1) over a chain of word-sized primes
// (residue number system). Multiplication uses a negacyclic NTT per prime
// when the prime supports it (q == 1 mod 2n) and falls back to schoolbook
// convolution otherwise. All values are immutable after construction and
// all operations are pure.

#include <cstring>
#include <optional>
#include <span>

#include "hecnn/bigint.hpp"
#include "hecnn/common.hpp"

namespace hecnn {

enum class Rep : u8 { Coeff = 0, Ntt = 1 };

struct RingParams {
    std::size_t n = 0;                // ring degree, power of two
    std::vector<u64> primes;          // q0, p1, p2, ... ; prefix products form the leveled moduli
    std::vector<bool> ntt_friendly;   // primes[i] == 1 (mod 2n)

    static RingParams create(std::size_t n, const std::vector<int>& prime_bits) {
        RingParams p;
        p.n = n;
        std::vector<u64> taken;
        for (int bits : prime_bits) {
            p.primes.push_back(find_ntt_primes(1, bits, static_cast<u64>(2 * n), taken)[0]);
            taken.push_back(p.primes.back());
        }
        p.finalize();
        return p;
    }

    void finalize() {
        ntt_friendly.clear();
        for (u64 q : primes) ntt_friendly.push_back(q % (2 * n) == 1);
        validate();
    }

    void validate() const {
        if (n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("RingParams: n must be a power of two >= 8");
        if (primes.empty()) throw std::invalid_argument("RingParams: empty modulus chain");
        for (std::size_t i = 0; i < primes.size(); ++i) {
            if (!is_prime_u64(primes[i])) throw std::invalid_argument("RingParams: chain entry not prime");
            for (std::size_t j = i + 1; j < primes.size(); ++j)
                if (primes[i] == primes[j]) throw std::invalid_argument("RingParams: duplicate chain prime");
        }
    }

    std::size_t chain_length() const { return primes.size(); }
    std::size_t top_level() const { return primes.size() - 1; }
};

// Precomputed negacyclic NTT tables for one prime.
class NttTables {
public:
    NttTables(u64 q, std::size_t n) : mod_(q), n_(n) {
        if (q % (2 * n) != 1) throw std::invalid_argument("NttTables: prime != 1 mod 2n");
        u64 psi = find_primitive_root(q, n);
        std::size_t logn = 0;
        while ((std::size_t(1) << logn) < n) ++logn;
        roots_.resize(n);
        roots_shoup_.resize(n);
        iroots_.resize(n);
        iroots_shoup_.resize(n);
        u64 psi_inv = mod_.inv(psi);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = bit_reverse(i, logn);
            roots_[i] = mod_.pow(psi, r);
            roots_shoup_[i] = shoup_precompute(roots_[i], q);
            iroots_[i] = mod_.pow(psi_inv, r);
            iroots_shoup_[i] = shoup_precompute(iroots_[i], q);
        }
        n_inv_ = mod_.inv(static_cast<u64>(n % q));
        n_inv_shoup_ = shoup_precompute(n_inv_, q);
    }

    // Butterflies run with lazy reduction (values in [0, 4q)), one strict
    // reduction at the end. Requires q < 2^61, which Modulus enforces.
    void forward(u64* a) const {
        const u64 q = mod_.q;
        const u64 two_q = 2 * q;
        std::size_t t = n_;
        for (std::size_t m = 1; m < n_; m <<= 1) {
            t >>= 1;
            for (std::size_t i = 0; i < m; ++i) {
                std::size_t j1 = 2 * i * t;
                u64 s = roots_[m + i];
                u64 s_sh = roots_shoup_[m + i];
                for (std::size_t j = j1; j < j1 + t; ++j) {
                    u64 u = a[j];
                    if (u >= two_q) u -= two_q;
                    u64 v = mul_shoup_lazy(a[j + t], s, s_sh, q);
                    a[j] = u + v;
                    a[j + t] = u + two_q - v;
                }
            }
        }
        for (std::size_t j = 0; j < n_; ++j) {
            u64 v = a[j];
            if (v >= two_q) v -= two_q;
            if (v >= q) v -= q;
            a[j] = v;
        }
    }

    void inverse(u64* a) const {
        const u64 q = mod_.q;
        const u64 two_q = 2 * q;
        std::size_t t = 1;
        for (std::size_t m = n_; m > 1; m >>= 1) {
            std::size_t j1 = 0;
            std::size_t h = m >> 1;
            for (std::size_t i = 0; i < h; ++i) {
                u64 s = iroots_[h + i];
                u64 s_sh = iroots_shoup_[h + i];
                for (std::size_t j = j1; j < j1 + t; ++j) {
                    u64 u = a[j];
                    u64 v = a[j + t];
                    u64 sum = u + v;
                    if (sum >= two_q) sum -= two_q;
                    a[j] = sum;
                    a[j + t] = mul_shoup_lazy(u + two_q - v, s, s_sh, q);
                }
                j1 += 2 * t;
            }
            t <<= 1;
        }
        for (std::size_t j = 0; j < n_; ++j) {
            u64 v = mul_shoup_lazy(a[j], n_inv_, n_inv_shoup_, q);
            if (v >= q) v -= q;
            a[j] = v;
        }
    }

    const Modulus& modulus() const { return mod_; }

private:
    static std::size_t bit_reverse(std::size_t x, std::size_t bits) {
        std::size_t r = 0;
        for (std::size_t i = 0; i < bits; ++i) r |= ((x >> i) & 1) << (bits - 1 - i);
        return r;
    }

    static u64 find_primitive_root(u64 q, std::size_t n) {
        Modulus m(q);
        u64 exp = (q - 1) / static_cast<u64>(2 * n);
        for (u64 x = 2; x < q; ++x) {
            u64 c = m.pow(x, exp);
            if (m.pow(c, static_cast<u64>(n)) == q - 1) return c;  // c^n == -1 => order exactly 2n
        }
        throw std::runtime_error("NttTables: no primitive 2n-th root found");
    }

    Modulus mod_;
    std::size_t n_;
    std::vector<u64> roots_, roots_shoup_, iroots_, iroots_shoup_;
    u64 n_inv_ = 0, n_inv_shoup_ = 0;
};

// Per-level CRT data for reconstructing coefficients at decode time.
struct CrtTable {
    BigUInt modulus;                   // Q_l
    std::vector<BigUInt> punctured;    // Q_l / q_i
    std::vector<u64> punctured_inv;    // (Q_l / q_i)^{-1} mod q_i
};

class RingContext {
public:
    explicit RingContext(RingParams params) : params_(std::move(params)) {
        params_.validate();
        mods_.reserve(params_.primes.size());
        for (u64 q : params_.primes) mods_.emplace_back(q);
        ntt_.resize(params_.primes.size());
        for (std::size_t i = 0; i < params_.primes.size(); ++i) {
            if (params_.ntt_friendly[i]) ntt_[i].emplace(params_.primes[i], params_.n);
        }
        // inverse of primes[l] modulo primes[i], used by rescale
        std::size_t len = params_.primes.size();
        inv_dropped_.assign(len, std::vector<u64>(len, 0));
        for (std::size_t l = 1; l < len; ++l) {
            for (std::size_t i = 0; i < l; ++i) {
                inv_dropped_[l][i] = mods_[i].inv(params_.primes[l] % params_.primes[i]);
            }
        }
        crt_.resize(len);
        for (std::size_t l = 0; l < len; ++l) {
            CrtTable t;
            t.modulus = BigUInt(1);
            for (std::size_t i = 0; i <= l; ++i) t.modulus.mul_u64(params_.primes[i]);
            for (std::size_t i = 0; i <= l; ++i) {
                BigUInt m = t.modulus.div_u64(params_.primes[i]);
                t.punctured_inv.push_back(mods_[i].inv(m.mod_u64(params_.primes[i])));
                t.punctured.push_back(std::move(m));
            }
            crt_[l] = std::move(t);
        }
    }

    const RingParams& params() const { return params_; }
    std::size_t degree() const { return params_.n; }
    std::size_t chain_length() const { return params_.primes.size(); }
    std::size_t top_level() const { return params_.primes.size() - 1; }
    u64 prime(std::size_t i) const { return params_.primes[i]; }
    const Modulus& mod(std::size_t i) const { return mods_[i]; }
    bool ntt_ready(std::size_t i) const { return ntt_[i].has_value(); }

    const NttTables& ntt(std::size_t i) const {
        if (!ntt_[i]) throw std::invalid_argument("RingContext: modulus not NTT-friendly");
        return *ntt_[i];
    }

    bool all_ntt_friendly(std::size_t level) const {
        for (std::size_t i = 0; i <= level; ++i)
            if (!ntt_[i]) return false;
        return true;
    }

    u64 inv_dropped_prime(std::size_t level, std::size_t i) const { return inv_dropped_[level][i]; }
    const CrtTable& crt(std::size_t level) const { return crt_[level]; }

    double log2_modulus(std::size_t level) const {
        double b = 0;
        for (std::size_t i = 0; i <= level; ++i) b += std::log2(static_cast<double>(params_.primes[i]));
        return b;
    }

private:
    RingParams params_;
    std::vector<Modulus> mods_;
    std::vector<std::optional<NttTables>> ntt_;
    std::vector<std::vector<u64>> inv_dropped_;
    std::vector<CrtTable> crt_;
};

struct RingPoly {
    u32 level = 0;
    Rep rep = Rep::Coeff;
    std::vector<std::vector<u64>> rns;  // [prime index <= level][coefficient]

    std::size_t degree() const { return rns.empty() ? 0 : rns[0].size(); }
    std::size_t prime_count() const { return rns.size(); }

    bool is_zero() const {
        for (const auto& row : rns)
            for (u64 v : row)
                if (v) return false;
        return true;
    }
};

inline RingPoly make_zero_poly(const RingContext& ctx, std::size_t level, Rep rep = Rep::Coeff) {
    RingPoly p;
    p.level = static_cast<u32>(level);
    p.rep = rep;
    p.rns.assign(level + 1, std::vector<u64>(ctx.degree(), 0));
    return p;
}

// Constant polynomial c (a small signed integer), same residue in every prime.
inline RingPoly make_constant_poly(const RingContext& ctx, std::size_t level, i64 c) {
    RingPoly p = make_zero_poly(ctx, level, Rep::Coeff);
    for (std::size_t i = 0; i <= level; ++i) p.rns[i][0] = ctx.mod(i).reduce_i64(c);
    return p;
}

// Polynomial from shared small signed coefficients (same integer under every prime).
inline RingPoly poly_from_signed(const RingContext& ctx, std::size_t level, std::span<const i64> coeffs) {
    if (coeffs.size() != ctx.degree()) throw std::invalid_argument("poly_from_signed: wrong coefficient count");
    RingPoly p = make_zero_poly(ctx, level, Rep::Coeff);
    for (std::size_t i = 0; i <= level; ++i) {
        const Modulus& m = ctx.mod(i);
        for (std::size_t j = 0; j < coeffs.size(); ++j) p.rns[i][j] = m.reduce_i64(coeffs[j]);
    }
    return p;
}

namespace detail {

inline void require_compatible(const RingPoly& a, const RingPoly& b) {
    if (a.level != b.level) throw std::invalid_argument("ring op: level mismatch");
    if (a.degree() != b.degree()) throw std::invalid_argument("ring op: degree mismatch");
    if (a.rep != b.rep) throw std::invalid_argument("ring op: representation mismatch");
}

}  // namespace detail

inline RingPoly poly_add(const RingContext& ctx, const RingPoly& a, const RingPoly& b) {
    detail::require_compatible(a, b);
    RingPoly out = a;
    for (std::size_t i = 0; i < out.rns.size(); ++i) {
        const Modulus& m = ctx.mod(i);
        const auto& src = b.rns[i];
        auto& dst = out.rns[i];
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = m.add(dst[j], src[j]);
    }
    return out;
}

inline RingPoly poly_sub(const RingContext& ctx, const RingPoly& a, const RingPoly& b) {
    detail::require_compatible(a, b);
    RingPoly out = a;
    for (std::size_t i = 0; i < out.rns.size(); ++i) {
        const Modulus& m = ctx.mod(i);
        const auto& src = b.rns[i];
        auto& dst = out.rns[i];
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = m.sub(dst[j], src[j]);
    }
    return out;
}

inline RingPoly poly_neg(const RingContext& ctx, const RingPoly& a) {
    RingPoly out = a;
    for (std::size_t i = 0; i < out.rns.size(); ++i) {
        const Modulus& m = ctx.mod(i);
        for (auto& v : out.rns[i]) v = m.neg(v);
    }
    return out;
}

enum class NttDirection { Forward, Inverse };

inline void ntt_transform_inplace(const RingContext& ctx, RingPoly& a, NttDirection dir) {
    if (dir == NttDirection::Forward) {
        if (a.rep != Rep::Coeff) throw std::invalid_argument("ntt_transform: already in NTT domain");
        for (std::size_t i = 0; i < a.rns.size(); ++i) ctx.ntt(i).forward(a.rns[i].data());
        a.rep = Rep::Ntt;
    } else {
        if (a.rep != Rep::Ntt) throw std::invalid_argument("ntt_transform: not in NTT domain");
        for (std::size_t i = 0; i < a.rns.size(); ++i) ctx.ntt(i).inverse(a.rns[i].data());
        a.rep = Rep::Coeff;
    }
}

inline RingPoly ntt_transform(const RingContext& ctx, const RingPoly& a, NttDirection dir) {
    RingPoly out = a;
    ntt_transform_inplace(ctx, out, dir);
    return out;
}

// Pointwise product of two NTT-domain polynomials.
inline RingPoly poly_pointwise_mul(const RingContext& ctx, const RingPoly& a, const RingPoly& b) {
    detail::require_compatible(a, b);
    if (a.rep != Rep::Ntt) throw std::invalid_argument("pointwise mul: operands must be in NTT domain");
    RingPoly out = a;
    for (std::size_t i = 0; i < out.rns.size(); ++i) {
        const Modulus& m = ctx.mod(i);
        const auto& src = b.rns[i];
        auto& dst = out.rns[i];
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = m.mul(dst[j], src[j]);
    }
    return out;
}

// acc += a * b, all in NTT domain.
inline void poly_pointwise_mac(const RingContext& ctx, RingPoly& acc, const RingPoly& a, const RingPoly& b) {
    detail::require_compatible(a, b);
    detail::require_compatible(acc, a);
    if (acc.rep != Rep::Ntt) throw std::invalid_argument("pointwise mac: operands must be in NTT domain");
    for (std::size_t i = 0; i < acc.rns.size(); ++i) {
        const Modulus& m = ctx.mod(i);
        const auto& ra = a.rns[i];
        const auto& rb = b.rns[i];
        auto& dst = acc.rns[i];
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = m.add(dst[j], m.mul(ra[j], rb[j]));
    }
}

namespace detail {

inline RingPoly schoolbook_negacyclic(const RingContext& ctx, const RingPoly& a, const RingPoly& b) {
    std::size_t n = a.degree();
    RingPoly out = make_zero_poly(ctx, a.level, Rep::Coeff);
    for (std::size_t p = 0; p < a.rns.size(); ++p) {
        const Modulus& m = ctx.mod(p);
        const auto& ra = a.rns[p];
        const auto& rb = b.rns[p];
        auto& dst = out.rns[p];
        for (std::size_t i = 0; i < n; ++i) {
            if (ra[i] == 0) continue;
            for (std::size_t j = 0; j < n; ++j) {
                u64 t = m.mul(ra[i], rb[j]);
                std::size_t k = i + j;
                if (k < n) {
                    dst[k] = m.add(dst[k], t);
                } else {
                    dst[k - n] = m.sub(dst[k - n], t);  // X^n == -1
                }
            }
        }
    }
    return out;
}

}  // namespace detail

// Product reduced mod X^n + 1 and the active modulus. Coefficient-domain
// inputs take the NTT path when every active prime supports it, otherwise
// schoolbook; NTT-domain inputs multiply pointwise.
inline RingPoly poly_negacyclic_mul(const RingContext& ctx, const RingPoly& a, const RingPoly& b) {
    detail::require_compatible(a, b);
    if (a.rep == Rep::Ntt) return poly_pointwise_mul(ctx, a, b);
    if (ctx.all_ntt_friendly(a.level)) {
        RingPoly fa = ntt_transform(ctx, a, NttDirection::Forward);
        RingPoly fb = ntt_transform(ctx, b, NttDirection::Forward);
        RingPoly prod = poly_pointwise_mul(ctx, fa, fb);
        ntt_transform_inplace(ctx, prod, NttDirection::Inverse);
        return prod;
    }
    return detail::schoolbook_negacyclic(ctx, a, b);
}

// Divide by the dropped (top) chain prime with round-to-nearest and reduce
// under the shorter modulus. Implemented residue-wise from the centered
// remainder, so no multi-precision arithmetic is needed.
inline RingPoly rescale_poly(const RingContext& ctx, const RingPoly& a) {
    if (a.level == 0) throw std::invalid_argument("rescale_poly: already at last level");
    if (a.rep != Rep::Coeff) throw std::invalid_argument("rescale_poly: requires coefficient domain");
    std::size_t l = a.level;
    u64 p = ctx.prime(l);
    u64 p_half = p >> 1;
    RingPoly out = make_zero_poly(ctx, l - 1, Rep::Coeff);
    std::size_t n = a.degree();
    const auto& last = a.rns[l];
    for (std::size_t i = 0; i < l; ++i) {
        const Modulus& m = ctx.mod(i);
        u64 p_mod = p % m.q;
        u64 p_inv = ctx.inv_dropped_prime(l, i);
        const auto& src = a.rns[i];
        auto& dst = out.rns[i];
        for (std::size_t j = 0; j < n; ++j) {
            u64 v = last[j];
            u64 centered = v % m.q;
            if (v > p_half) centered = m.sub(centered, p_mod);  // represents v - p
            dst[j] = m.mul(m.sub(src[j], centered), p_inv);
        }
    }
    return out;
}

enum class SampleKind { Uniform, Ternary, Gaussian };

inline SampleKind parse_sample_kind(const std::string& s) {
    if (s == "uniform") return SampleKind::Uniform;
    if (s == "ternary") return SampleKind::Ternary;
    if (s == "gaussian") return SampleKind::Gaussian;
    throw std::invalid_argument("sample_poly: unknown kind '" + s + "'");
}

struct SampleParams {
    std::size_t level = 0;
    double sigma = 0.0;            // gaussian only
    double ternary_density = 2.0 / 3.0;  // P(coefficient != 0); 2/3 gives the uniform ternary distribution
};

// Deterministic for a fixed seed. Ternary coefficients are in {-1, 0, 1};
// gaussian coefficients are rounded draws clamped to +-6 sigma.
inline RingPoly sample_poly(const RingContext& ctx, SampleKind kind, const SampleParams& sp, u64 seed) {
    Rng rng(seed);
    std::size_t n = ctx.degree();
    switch (kind) {
        case SampleKind::Uniform: {
            RingPoly p = make_zero_poly(ctx, sp.level, Rep::Coeff);
            for (std::size_t i = 0; i <= sp.level; ++i) {
                u64 q = ctx.prime(i);
                for (auto& v : p.rns[i]) v = rng.below(q);
            }
            return p;
        }
        case SampleKind::Ternary: {
            std::vector<i64> c(n);
            double d = sp.ternary_density;
            if (d < 0.0 || d > 1.0) throw std::invalid_argument("sample_poly: ternary density out of range");
            for (auto& v : c) {
                double u = rng.uniform01();
                v = u < d / 2 ? 1 : (u < d ? -1 : 0);
            }
            return poly_from_signed(ctx, sp.level, c);
        }
        case SampleKind::Gaussian: {
            if (!(sp.sigma > 0.0)) throw std::invalid_argument("sample_poly: gaussian requires sigma > 0");
            i64 bound = std::llround(6.0 * sp.sigma);
            std::vector<i64> c(n);
            for (auto& v : c) {
                i64 z = std::llround(rng.gaussian() * sp.sigma);
                v = std::clamp(z, -bound, bound);
            }
            return poly_from_signed(ctx, sp.level, c);
        }
    }
    throw std::invalid_argument("sample_poly: unknown kind");
}

// Drop RNS rows down to `level` (no scaling; valid because the represented
// noise-plus-message integer is far below the smaller modulus).
inline RingPoly poly_drop_to_level(const RingPoly& a, std::size_t level) {
    if (level > a.level) throw std::invalid_argument("poly_drop_to_level: cannot raise level");
    RingPoly out;
    out.level = static_cast<u32>(level);
    out.rep = a.rep;
    out.rns.assign(a.rns.begin(), a.rns.begin() + static_cast<std::ptrdiff_t>(level + 1));
    return out;
}

// Centered CRT reconstruction of one coefficient as a long double.
inline long double reconstruct_centered(const RingContext& ctx, const RingPoly& a, std::size_t coeff_idx) {
    const CrtTable& t = ctx.crt(a.level);
    BigUInt acc;
    for (std::size_t i = 0; i <= a.level; ++i) {
        u64 w = ctx.mod(i).mul(a.rns[i][coeff_idx], t.punctured_inv[i]);
        acc.add_mul(t.punctured[i], w);
    }
    while (acc.compare(t.modulus) >= 0) acc.sub(t.modulus);
    // center into (-Q/2, Q/2]
    BigUInt twice = acc;
    twice.mul_u64(2);
    if (twice.compare(t.modulus) > 0) {
        BigUInt neg = t.modulus;
        neg.sub(acc);
        return -neg.to_long_double();
    }
    return acc.to_long_double();
}

// Full centered CRT reconstruction as a BigUInt plus sign flag.
inline BigUInt reconstruct_mod_q(const RingContext& ctx, const RingPoly& a, std::size_t coeff_idx) {
    const CrtTable& t = ctx.crt(a.level);
    BigUInt acc;
    for (std::size_t i = 0; i <= a.level; ++i) {
        u64 w = ctx.mod(i).mul(a.rns[i][coeff_idx], t.punctured_inv[i]);
        acc.add_mul(t.punctured[i], w);
    }
    while (acc.compare(t.modulus) >= 0) acc.sub(t.modulus);
    return acc;
}

}  // namespace hecnn
