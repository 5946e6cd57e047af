#pragma once

// Leveled CKKS over the RNS ring: canonical-embedding encode/decode with a
// scaling factor, public-key encryption, and the homomorphic
// add / multiply / relinearize / rescale pipeline with exact scale and
// level bookkeeping.
//
// The embedding maps n/2 complex slots to the polynomial that evaluates to
// those values at the odd powers of the primitive 2n-th complex root of
// unity (conjugate-symmetric extension on the other half). The fast path
// realizes this as a twisted length-n FFT; an O(n^2) reference evaluation
// is kept alongside and the two are required to agree.

#include <complex>
#include <numeric>

#include "hecnn/ring.hpp"

namespace hecnn {

struct CkksParams {
    RingParams ring;
    double scale = 0.0;        // default encoding scale factor (> 1)
    double sigma = 3.2;        // error distribution parameter
    bool degenerate_noise = false;  // force ternary + gaussian samplers to zero (debugging oracle)

    std::size_t slot_count() const { return ring.n / 2; }

    void validate() const {
        ring.validate();
        if (!(scale > 1.0)) throw std::invalid_argument("CkksParams: scale must be > 1");
        if (sigma < 0.0) throw std::invalid_argument("CkksParams: sigma must be >= 0");
    }
};

using PlaintextVector = std::vector<std::complex<double>>;

struct EncodedPlaintext {
    RingPoly poly;
    double scale = 0.0;
    bool is_constant = false;  // constant polynomial; enables the scalar fast path
};

struct SecretKey {
    RingPoly s;  // ternary, coefficient domain, top level
};

struct PublicKey {
    RingPoly b, a;  // b = -a*s + e, stored in NTT domain at top level
};

struct EvaluationKey {
    u32 base_bits = 0;                                 // digit width w
    std::vector<std::pair<RingPoly, RingPoly>> pairs;  // (b_t, a_t) with b_t = -a_t*s + e_t + 2^{wt} s^2
};

struct KeySet {
    SecretKey secret;
    PublicKey public_key;
    EvaluationKey eval;
};

struct EncryptionRandomness {
    RingPoly r;       // ternary
    RingPoly e0, e1;  // error polynomials
};

struct Ciphertext {
    RingPoly c0, c1;
    double scale = 0.0;
    u32 level = 0;
};

inline constexpr double kScaleRelTol = 0x1p-30;
inline constexpr u32 kRelinBaseBits = 20;

class CkksEngine {
public:
    explicit CkksEngine(CkksParams params) : par_(std::move(params)), ctx_(par_.ring) {
        par_.validate();
        if (!ctx_.all_ntt_friendly(ctx_.top_level()))
            throw std::invalid_argument("CkksEngine: all chain primes must be NTT-friendly");
        std::size_t n = ctx_.degree();
        twiddle_.resize(n);
        twist_.resize(n);
        const long double pi = 3.14159265358979323846264338327950288L;
        for (std::size_t k = 0; k < n; ++k) {
            long double t = 2.0L * pi * static_cast<long double>(k) / static_cast<long double>(n);
            twiddle_[k] = {static_cast<double>(std::cos(t)), static_cast<double>(std::sin(t))};
            long double u = pi * static_cast<long double>(k) / static_cast<long double>(n);
            twist_[k] = {static_cast<double>(std::cos(u)), static_cast<double>(std::sin(u))};
        }
    }

    const CkksParams& params() const { return par_; }
    const RingContext& ring() const { return ctx_; }
    std::size_t slot_count() const { return par_.slot_count(); }
    std::size_t top_level() const { return ctx_.top_level(); }

    // Guaranteed multiplicative depth: one rescale per chain prime after the base.
    std::size_t depth_budget() const { return ctx_.chain_length() - 1; }

    // ---- encode / decode ----------------------------------------------

    EncodedPlaintext encode(const PlaintextVector& values, double scale, std::size_t level) const {
        check_encode(values.size(), max_abs(values), scale, level);
        std::size_t n = ctx_.degree();
        std::vector<std::complex<double>> v(n, {0.0, 0.0});
        for (std::size_t j = 0; j < values.size(); ++j) {
            v[j] = values[j];
            v[n - 1 - j] = std::conj(values[j]);
        }
        fft(v, /*invert=*/true);
        EncodedPlaintext out;
        out.scale = scale;
        out.poly = make_zero_poly(ctx_, level, Rep::Coeff);
        for (std::size_t k = 0; k < n; ++k) {
            std::complex<double> u = v[k] * std::conj(twist_[k]);
            long double c = static_cast<long double>(u.real()) * static_cast<long double>(scale);
            set_coeff(out.poly, k, roundl(c));
        }
        return out;
    }

    EncodedPlaintext encode_real(const std::vector<double>& values, double scale, std::size_t level) const {
        PlaintextVector v(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) v[i] = {values[i], 0.0};
        return encode(v, scale, level);
    }

    // Constant vector (c, c, ..., c): constant polynomial round(scale*c).
    EncodedPlaintext encode_const(double c, double scale, std::size_t level) const {
        check_encode(1, std::abs(c), scale, level);
        EncodedPlaintext out;
        out.scale = scale;
        out.is_constant = true;
        out.poly = make_zero_poly(ctx_, level, Rep::Coeff);
        set_coeff(out.poly, 0, roundl(static_cast<long double>(c) * static_cast<long double>(scale)));
        return out;
    }

    PlaintextVector decode(const EncodedPlaintext& m) const {
        if (!(m.scale > 0.0) || !std::isfinite(m.scale)) throw std::invalid_argument("decode: invalid scale");
        std::size_t n = ctx_.degree();
        std::vector<std::complex<double>> u(n);
        for (std::size_t k = 0; k < n; ++k) {
            double c = static_cast<double>(reconstruct_centered(ctx_, m.poly, k));
            u[k] = twist_[k] * c;
        }
        fft(u, /*invert=*/false);
        PlaintextVector out(slot_count());
        for (std::size_t j = 0; j < out.size(); ++j) out[j] = u[j] / m.scale;
        return out;
    }

    // O(n^2) reference embedding, long double arithmetic. Used to validate
    // the fast path; only sensible at small n.
    EncodedPlaintext encode_slow(const PlaintextVector& values, double scale, std::size_t level) const {
        check_encode(values.size(), max_abs(values), scale, level);
        std::size_t n = ctx_.degree();
        EncodedPlaintext out;
        out.scale = scale;
        out.poly = make_zero_poly(ctx_, level, Rep::Coeff);
        const long double pi = 3.14159265358979323846264338327950288L;
        for (std::size_t k = 0; k < n; ++k) {
            long double acc = 0.0L;
            for (std::size_t j = 0; j < slot_count(); ++j) {
                std::complex<double> z = j < values.size() ? values[j] : std::complex<double>{0, 0};
                long double ang = -pi * static_cast<long double>((2 * j + 1) * k) / static_cast<long double>(n);
                acc += static_cast<long double>(z.real()) * std::cos(ang) -
                       static_cast<long double>(z.imag()) * std::sin(ang);
            }
            acc *= 2.0L / static_cast<long double>(n);
            set_coeff(out.poly, k, roundl(acc * static_cast<long double>(scale)));
        }
        return out;
    }

    PlaintextVector decode_slow(const EncodedPlaintext& m) const {
        if (!(m.scale > 0.0) || !std::isfinite(m.scale)) throw std::invalid_argument("decode: invalid scale");
        std::size_t n = ctx_.degree();
        std::vector<long double> coeffs(n);
        for (std::size_t k = 0; k < n; ++k) coeffs[k] = reconstruct_centered(ctx_, m.poly, k);
        const long double pi = 3.14159265358979323846264338327950288L;
        PlaintextVector out(slot_count());
        for (std::size_t j = 0; j < slot_count(); ++j) {
            long double re = 0.0L, im = 0.0L;
            for (std::size_t k = 0; k < n; ++k) {
                long double ang = pi * static_cast<long double>((2 * j + 1) * k) / static_cast<long double>(n);
                re += coeffs[k] * std::cos(ang);
                im += coeffs[k] * std::sin(ang);
            }
            out[j] = {static_cast<double>(re / m.scale), static_cast<double>(im / m.scale)};
        }
        return out;
    }

    // ---- keys -----------------------------------------------------------

    KeySet keygen(u64 seed) const {
        std::size_t top = top_level();
        KeySet ks;
        ks.secret.s = sample_ternary(top, 2.0 / 3.0, derive_seed(seed, 0x5ec0));
        RingPoly s_ntt = ntt_transform(ctx_, ks.secret.s, NttDirection::Forward);

        RingPoly a = sample_poly(ctx_, SampleKind::Uniform, {.level = top}, derive_seed(seed, 0xa0a0));
        ntt_transform_inplace(ctx_, a, NttDirection::Forward);
        RingPoly e = sample_error(top, derive_seed(seed, 0xe000));
        ntt_transform_inplace(ctx_, e, NttDirection::Forward);
        // b = -a*s + e
        ks.public_key.b = poly_add(ctx_, poly_neg(ctx_, poly_pointwise_mul(ctx_, a, s_ntt)), e);
        ks.public_key.a = std::move(a);

        // evaluation key: s^2 under base-2^w digit decomposition
        ks.eval.base_bits = kRelinBaseBits;
        RingPoly s2 = poly_pointwise_mul(ctx_, s_ntt, s_ntt);
        std::size_t digits = relin_digits(top);
        for (std::size_t t = 0; t < digits; ++t) {
            RingPoly at = sample_poly(ctx_, SampleKind::Uniform, {.level = top},
                                      derive_seed(seed, 0xeb00 + 2 * t));
            ntt_transform_inplace(ctx_, at, NttDirection::Forward);
            RingPoly et = sample_error(top, derive_seed(seed, 0xeb01 + 2 * t));
            ntt_transform_inplace(ctx_, et, NttDirection::Forward);
            RingPoly bt = poly_add(ctx_, poly_neg(ctx_, poly_pointwise_mul(ctx_, at, s_ntt)), et);
            // + 2^{wt} * s^2 (the power-of-two factor is reduced per prime)
            RingPoly shifted = s2;
            for (std::size_t i = 0; i <= top; ++i) {
                const Modulus& m = ctx_.mod(i);
                u64 f = m.pow(2, static_cast<u64>(kRelinBaseBits) * t);
                for (auto& v : shifted.rns[i]) v = m.mul(v, f);
            }
            bt = poly_add(ctx_, bt, shifted);
            ks.eval.pairs.emplace_back(std::move(bt), std::move(at));
        }
        return ks;
    }

    EncryptionRandomness make_encryption_randomness(u64 seed) const {
        EncryptionRandomness r;
        r.r = sample_ternary(top_level(), 0.5, derive_seed(seed, 0x0a01));
        r.e0 = sample_error(top_level(), derive_seed(seed, 0x0a02));
        r.e1 = sample_error(top_level(), derive_seed(seed, 0x0a03));
        return r;
    }

    // ---- encrypt / decrypt ----------------------------------------------

    // ctxt = (c0 = r*b + e0 + m, c1 = r*a + e1) at the top level.
    Ciphertext encrypt(const PublicKey& pk, const EncodedPlaintext& m, const EncryptionRandomness& rand) const {
        if (m.poly.level != top_level()) throw std::invalid_argument("encrypt: plaintext must be at top level");
        if (m.poly.rep != Rep::Coeff) throw std::invalid_argument("encrypt: plaintext must be in coefficient domain");
        RingPoly r_ntt = ntt_transform(ctx_, rand.r, NttDirection::Forward);
        RingPoly c0 = poly_pointwise_mul(ctx_, r_ntt, pk.b);
        ntt_transform_inplace(ctx_, c0, NttDirection::Inverse);
        c0 = poly_add(ctx_, c0, rand.e0);
        c0 = poly_add(ctx_, c0, m.poly);
        RingPoly c1 = poly_pointwise_mul(ctx_, r_ntt, pk.a);
        ntt_transform_inplace(ctx_, c1, NttDirection::Inverse);
        c1 = poly_add(ctx_, c1, rand.e1);
        Ciphertext ct;
        ct.c0 = std::move(c0);
        ct.c1 = std::move(c1);
        ct.scale = m.scale;
        ct.level = static_cast<u32>(top_level());
        return ct;
    }

    Ciphertext encrypt(const PublicKey& pk, const EncodedPlaintext& m, u64 seed) const {
        return encrypt(pk, m, make_encryption_randomness(seed));
    }

    // m ~ c0 + c1*s at the ciphertext's level, carrying its scale.
    EncodedPlaintext decrypt(const SecretKey& sk, const Ciphertext& ct) const {
        RingPoly s = poly_drop_to_level(sk.s, ct.level);
        EncodedPlaintext out;
        out.poly = poly_add(ctx_, ct.c0, poly_negacyclic_mul(ctx_, ct.c1, s));
        out.scale = ct.scale;
        return out;
    }

    // ---- homomorphic ops -------------------------------------------------

    Ciphertext add(const Ciphertext& x, const Ciphertext& y) const {
        require_same_level(x, y, "add");
        require_scale_match(x.scale, y.scale, "add");
        Ciphertext out;
        out.c0 = poly_add(ctx_, x.c0, y.c0);
        out.c1 = poly_add(ctx_, x.c1, y.c1);
        out.scale = x.scale;
        out.level = x.level;
        return out;
    }

    Ciphertext sub(const Ciphertext& x, const Ciphertext& y) const {
        require_same_level(x, y, "sub");
        require_scale_match(x.scale, y.scale, "sub");
        Ciphertext out;
        out.c0 = poly_sub(ctx_, x.c0, y.c0);
        out.c1 = poly_sub(ctx_, x.c1, y.c1);
        out.scale = x.scale;
        out.level = x.level;
        return out;
    }

    Ciphertext add_plain(const Ciphertext& x, const EncodedPlaintext& m) const {
        if (m.poly.level != x.level) throw std::invalid_argument("add_plain: level mismatch");
        require_scale_match(x.scale, m.scale, "add_plain");
        Ciphertext out = x;
        out.c0 = poly_add(ctx_, out.c0, m.poly);
        return out;
    }

    // Tensor to three elements, relinearize with evk, rescale once.
    // Result scale = scale_x * scale_y / dropped prime, level decremented.
    Ciphertext mul(const Ciphertext& x, const Ciphertext& y, const EvaluationKey& evk) const {
        require_same_level(x, y, "mul");
        if (x.level == 0) throw std::invalid_argument("mul: at last level, no room to rescale");
        check_scale_headroom(x.scale, y.scale, x.level);
        std::size_t level = x.level;
        RingPoly fx0 = ntt_transform(ctx_, x.c0, NttDirection::Forward);
        RingPoly fx1 = ntt_transform(ctx_, x.c1, NttDirection::Forward);
        RingPoly fy0 = ntt_transform(ctx_, y.c0, NttDirection::Forward);
        RingPoly fy1 = ntt_transform(ctx_, y.c1, NttDirection::Forward);
        RingPoly d0 = poly_pointwise_mul(ctx_, fx0, fy0);
        RingPoly d1 = poly_pointwise_mul(ctx_, fx0, fy1);
        poly_pointwise_mac(ctx_, d1, fx1, fy0);
        RingPoly d2 = poly_pointwise_mul(ctx_, fx1, fy1);
        ntt_transform_inplace(ctx_, d2, NttDirection::Inverse);

        auto [r0, r1] = key_switch(d2, evk, level);
        d0 = poly_add(ctx_, d0, r0);
        d1 = poly_add(ctx_, d1, r1);
        ntt_transform_inplace(ctx_, d0, NttDirection::Inverse);
        ntt_transform_inplace(ctx_, d1, NttDirection::Inverse);

        Ciphertext out;
        out.c0 = rescale_poly(ctx_, d0);
        out.c1 = rescale_poly(ctx_, d1);
        out.level = static_cast<u32>(level - 1);
        out.scale = x.scale * y.scale / static_cast<double>(ctx_.prime(level));
        return out;
    }

    // mul(x, x) with the redundant transforms elided.
    Ciphertext square(const Ciphertext& x, const EvaluationKey& evk) const {
        if (x.level == 0) throw std::invalid_argument("mul: at last level, no room to rescale");
        check_scale_headroom(x.scale, x.scale, x.level);
        std::size_t level = x.level;
        RingPoly fx0 = ntt_transform(ctx_, x.c0, NttDirection::Forward);
        RingPoly fx1 = ntt_transform(ctx_, x.c1, NttDirection::Forward);
        RingPoly d0 = poly_pointwise_mul(ctx_, fx0, fx0);
        RingPoly d1 = poly_pointwise_mul(ctx_, fx0, fx1);
        d1 = poly_add(ctx_, d1, d1);
        RingPoly d2 = poly_pointwise_mul(ctx_, fx1, fx1);
        ntt_transform_inplace(ctx_, d2, NttDirection::Inverse);

        auto [r0, r1] = key_switch(d2, evk, level);
        d0 = poly_add(ctx_, d0, r0);
        d1 = poly_add(ctx_, d1, r1);
        ntt_transform_inplace(ctx_, d0, NttDirection::Inverse);
        ntt_transform_inplace(ctx_, d1, NttDirection::Inverse);

        Ciphertext out;
        out.c0 = rescale_poly(ctx_, d0);
        out.c1 = rescale_poly(ctx_, d1);
        out.level = static_cast<u32>(level - 1);
        out.scale = x.scale * x.scale / static_cast<double>(ctx_.prime(level));
        return out;
    }

    // Plaintext multiply without rescaling; scale multiplies, level unchanged.
    Ciphertext mul_plain_raw(const Ciphertext& x, const EncodedPlaintext& m) const {
        if (m.poly.level != x.level) throw std::invalid_argument("mul_plain: level mismatch");
        check_scale_headroom(x.scale, m.scale, x.level);
        Ciphertext out;
        out.level = x.level;
        out.scale = x.scale * m.scale;
        if (m.is_constant) {
            out.c0 = scalar_mul(x.c0, m.poly);
            out.c1 = scalar_mul(x.c1, m.poly);
            return out;
        }
        RingPoly f = ntt_transform(ctx_, m.poly, NttDirection::Forward);
        RingPoly c0 = ntt_transform(ctx_, x.c0, NttDirection::Forward);
        RingPoly c1 = ntt_transform(ctx_, x.c1, NttDirection::Forward);
        c0 = poly_pointwise_mul(ctx_, c0, f);
        c1 = poly_pointwise_mul(ctx_, c1, f);
        ntt_transform_inplace(ctx_, c0, NttDirection::Inverse);
        ntt_transform_inplace(ctx_, c1, NttDirection::Inverse);
        out.c0 = std::move(c0);
        out.c1 = std::move(c1);
        return out;
    }

    Ciphertext mul_plain(const Ciphertext& x, const EncodedPlaintext& m) const {
        if (x.level == 0) throw std::invalid_argument("mul_plain: at last level, no room to rescale");
        return rescale(mul_plain_raw(x, m));
    }

    // ---- scalar (slot-constant) plaintext fast path ----------------------
    //
    // A constant vector encodes as a constant polynomial, so multiplying by
    // it is a per-coefficient scalar multiply and adding it touches only
    // coefficient zero. These helpers avoid materializing the plaintext
    // polynomial; they are the workhorses of plaintext-weight layers.

    struct ScalarPlain {
        std::vector<u64> residues, residues_shoup;  // per active prime
        double scale = 0.0;
        u32 level = 0;
    };

    ScalarPlain make_scalar_plain(double c, double scale, std::size_t level) const {
        check_encode(1, std::abs(c), scale, level);
        ScalarPlain sp;
        sp.scale = scale;
        sp.level = static_cast<u32>(level);
        long double v = roundl(static_cast<long double>(c) * static_cast<long double>(scale));
        for (std::size_t i = 0; i <= level; ++i) {
            const Modulus& m = ctx_.mod(i);
            long double q = static_cast<long double>(m.q);
            long double r = std::fmod(v, q);
            if (r < 0) r += q;
            u64 rv = static_cast<u64>(r);
            sp.residues.push_back(rv);
            sp.residues_shoup.push_back(shoup_precompute(rv, m.q));
        }
        return sp;
    }

    Ciphertext make_zero_ciphertext(std::size_t level, double scale) const {
        Ciphertext ct;
        ct.c0 = make_zero_poly(ctx_, level, Rep::Coeff);
        ct.c1 = make_zero_poly(ctx_, level, Rep::Coeff);
        ct.scale = scale;
        ct.level = static_cast<u32>(level);
        return ct;
    }

    void add_inplace(Ciphertext& acc, const Ciphertext& x) const {
        require_same_level(acc, x, "add");
        require_scale_match(acc.scale, x.scale, "add");
        acc.c0 = poly_add(ctx_, acc.c0, x.c0);
        acc.c1 = poly_add(ctx_, acc.c1, x.c1);
    }

    // acc += x * scalar. acc must carry scale x.scale * sp.scale.
    void mul_scalar_mac(Ciphertext& acc, const Ciphertext& x, const ScalarPlain& sp) const {
        if (x.level != acc.level || sp.level != acc.level)
            throw std::invalid_argument("mul_scalar_mac: level mismatch");
        require_scale_match(acc.scale, x.scale * sp.scale, "mul_scalar_mac");
        for (std::size_t i = 0; i <= acc.level; ++i) {
            const Modulus& m = ctx_.mod(i);
            u64 c = sp.residues[i];
            u64 c_sh = sp.residues_shoup[i];
            const auto& x0 = x.c0.rns[i];
            const auto& x1 = x.c1.rns[i];
            auto& a0 = acc.c0.rns[i];
            auto& a1 = acc.c1.rns[i];
            for (std::size_t j = 0; j < a0.size(); ++j) {
                a0[j] = m.add(a0[j], mul_shoup(x0[j], c, c_sh, m.q));
                a1[j] = m.add(a1[j], mul_shoup(x1[j], c, c_sh, m.q));
            }
        }
    }

    // ct += constant (encoded at the ciphertext's own scale).
    void add_scalar_inplace(Ciphertext& ct, double c) const {
        ScalarPlain sp = make_scalar_plain(c, ct.scale, ct.level);
        for (std::size_t i = 0; i <= ct.level; ++i)
            ct.c0.rns[i][0] = ctx_.mod(i).add(ct.c0.rns[i][0], sp.residues[i]);
    }

    Ciphertext rescale(const Ciphertext& x) const {
        if (x.level == 0) throw std::invalid_argument("rescale: no level headroom");
        Ciphertext out;
        out.c0 = rescale_poly(ctx_, x.c0);
        out.c1 = rescale_poly(ctx_, x.c1);
        out.level = x.level - 1;
        out.scale = x.scale / static_cast<double>(ctx_.prime(x.level));
        return out;
    }

    // Lower the level without dividing the scale (operand alignment for add).
    Ciphertext mod_switch(const Ciphertext& x, std::size_t to_level) const {
        if (to_level > x.level) throw std::invalid_argument("mod_switch: cannot raise level");
        Ciphertext out;
        out.c0 = poly_drop_to_level(x.c0, to_level);
        out.c1 = poly_drop_to_level(x.c1, to_level);
        out.level = static_cast<u32>(to_level);
        out.scale = x.scale;
        return out;
    }

    // ---- helpers ---------------------------------------------------------

    RingPoly sample_error(std::size_t level, u64 seed) const {
        if (par_.degenerate_noise || par_.sigma == 0.0) return make_zero_poly(ctx_, level, Rep::Coeff);
        return sample_poly(ctx_, SampleKind::Gaussian, {.level = level, .sigma = par_.sigma}, seed);
    }

    RingPoly sample_ternary(std::size_t level, double density, u64 seed) const {
        if (par_.degenerate_noise) return make_zero_poly(ctx_, level, Rep::Coeff);
        return sample_poly(ctx_, SampleKind::Ternary, {.level = level, .ternary_density = density}, seed);
    }

    static u64 derive_seed(u64 seed, u64 domain) { return splitmix64(seed ^ splitmix64(domain)); }

    std::size_t relin_digits(std::size_t level) const {
        std::size_t bits = static_cast<std::size_t>(std::ceil(ctx_.log2_modulus(level)));
        return (bits + kRelinBaseBits - 1) / kRelinBaseBits;
    }

private:
    static double max_abs(const PlaintextVector& v) {
        double m = 0.0;
        for (const auto& z : v) m = std::max(m, std::abs(z));
        return m;
    }

    void check_encode(std::size_t len, double maxval, double scale, std::size_t level) const {
        if (len > slot_count()) throw std::invalid_argument("encode: vector longer than slot count");
        if (!(scale > 1.0)) throw std::invalid_argument("encode: scale must be > 1");
        if (level > top_level()) throw std::invalid_argument("encode: level out of range");
        double bits = std::log2(scale) + std::log2(maxval + 1.0) + 2.0;
        if (bits >= ctx_.log2_modulus(level) - 1.0)
            throw std::invalid_argument("encode: scaled coefficients overflow the active modulus");
    }

    void set_coeff(RingPoly& p, std::size_t k, long double v) const {
        // Reduce a (possibly > 64-bit) signed integer into each prime row.
        if (v >= -9.2e18L && v <= 9.2e18L) {
            i64 iv = static_cast<i64>(v);
            for (std::size_t i = 0; i < p.rns.size(); ++i) p.rns[i][k] = ctx_.mod(i).reduce_i64(iv);
            return;
        }
        for (std::size_t i = 0; i < p.rns.size(); ++i) {
            long double q = static_cast<long double>(ctx_.prime(i));
            long double r = std::fmod(v, q);
            if (r < 0) r += q;
            p.rns[i][k] = static_cast<u64>(r);
        }
    }

    void fft(std::vector<std::complex<double>>& a, bool invert) const {
        std::size_t n = a.size();
        for (std::size_t i = 1, j = 0; i < n; ++i) {
            std::size_t bit = n >> 1;
            for (; j & bit; bit >>= 1) j ^= bit;
            j ^= bit;
            if (i < j) std::swap(a[i], a[j]);
        }
        for (std::size_t len = 2; len <= n; len <<= 1) {
            std::size_t stride = n / len;
            for (std::size_t i = 0; i < n; i += len) {
                for (std::size_t j = 0; j < len / 2; ++j) {
                    std::complex<double> w = twiddle_[stride * j];
                    if (invert) w = std::conj(w);
                    std::complex<double> u = a[i + j];
                    std::complex<double> v = a[i + j + len / 2] * w;
                    a[i + j] = u + v;
                    a[i + j + len / 2] = u - v;
                }
            }
        }
        if (invert) {
            double inv_n = 1.0 / static_cast<double>(n);
            for (auto& x : a) x *= inv_n;
        }
    }

    void require_same_level(const Ciphertext& x, const Ciphertext& y, const char* op) const {
        if (x.level != y.level)
            throw std::invalid_argument(std::string(op) + ": level mismatch (use rescale/mod_switch first)");
    }

    void require_scale_match(double sx, double sy, const char* op) const {
        double m = std::max(std::abs(sx), std::abs(sy));
        if (std::abs(sx - sy) > kScaleRelTol * m)
            throw std::invalid_argument(std::string(op) + ": scale mismatch (no silent alignment)");
    }

    void check_scale_headroom(double sx, double sy, std::size_t level) const {
        if (std::log2(sx) + std::log2(sy) >= ctx_.log2_modulus(level) - 1.0)
            throw std::invalid_argument("mul: scale overflow for the active modulus");
    }

    RingPoly scalar_mul(const RingPoly& p, const RingPoly& constant) const {
        RingPoly out = p;
        for (std::size_t i = 0; i < out.rns.size(); ++i) {
            const Modulus& m = ctx_.mod(i);
            u64 c = constant.rns[i][0];
            u64 c_shoup = shoup_precompute(c, m.q);
            for (auto& v : out.rns[i]) v = mul_shoup(v, c, c_shoup, m.q);
        }
        return out;
    }

    // Base-2^w key switching of d2 (coefficient domain) onto (b_t, a_t).
    // Returns the NTT-domain pair to fold into (d0, d1).
    std::pair<RingPoly, RingPoly> key_switch(const RingPoly& d2, const EvaluationKey& evk,
                                             std::size_t level) const {
        if (evk.pairs.empty()) throw std::invalid_argument("mul: empty evaluation key");
        if (evk.base_bits != kRelinBaseBits) throw std::invalid_argument("mul: unexpected evk digit base");
        std::size_t digits = relin_digits(level);
        if (digits > evk.pairs.size()) throw std::invalid_argument("mul: evaluation key too short for level");
        std::size_t n = ctx_.degree();
        std::vector<std::vector<u64>> dig(digits, std::vector<u64>(n));
        for (std::size_t j = 0; j < n; ++j) {
            BigUInt v = reconstruct_mod_q(ctx_, d2, j);
            for (std::size_t t = 0; t < digits; ++t)
                dig[t][j] = v.bits(t * kRelinBaseBits, kRelinBaseBits);
        }
        RingPoly acc0 = make_zero_poly(ctx_, level, Rep::Ntt);
        RingPoly acc1 = make_zero_poly(ctx_, level, Rep::Ntt);
        for (std::size_t t = 0; t < digits; ++t) {
            RingPoly dp = make_zero_poly(ctx_, level, Rep::Coeff);
            for (std::size_t i = 0; i <= level; ++i) {
                const Modulus& m = ctx_.mod(i);
                for (std::size_t j = 0; j < n; ++j) {
                    u64 v = dig[t][j];
                    dp.rns[i][j] = v < m.q ? v : v % m.q;
                }
            }
            ntt_transform_inplace(ctx_, dp, NttDirection::Forward);
            poly_pointwise_mac(ctx_, acc0, dp, poly_drop_to_level(evk.pairs[t].first, level));
            poly_pointwise_mac(ctx_, acc1, dp, poly_drop_to_level(evk.pairs[t].second, level));
        }
        return {std::move(acc0), std::move(acc1)};
    }

    CkksParams par_;
    RingContext ctx_;
    std::vector<std::complex<double>> twiddle_;  // e^{2 pi i k / n}
    std::vector<std::complex<double>> twist_;    // e^{i pi k / n}
};

}  // namespace hecnn
