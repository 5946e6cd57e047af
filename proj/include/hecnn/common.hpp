#pragma once

// Shared low-level machinery: 64-bit modular arithmetic with Barrett and
// Shoup reductions, deterministic seeded sampling, prime search for
// NTT-friendly moduli, and a small parallel-for helper.

#include <algorithm>
#include <cstdint>
#include <cstddef>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>
#include <functional>

namespace hecnn {

using u8 = std::uint8_t;
using u16 = std::uint16_t;
using u32 = std::uint32_t;
using u64 = std::uint64_t;
using i64 = std::int64_t;
using u128 = unsigned __int128;

inline u64 mul_hi64(u64 a, u64 b) { return static_cast<u64>((static_cast<u128>(a) * b) >> 64); }

// Word-sized modulus with a precomputed Barrett ratio floor(2^128 / q).
// Valid for odd q < 2^61.
struct Modulus {
    u64 q = 0;
    u64 ratio_lo = 0, ratio_hi = 0;

    Modulus() = default;
    explicit Modulus(u64 modulus) : q(modulus) {
        if (q < 2 || q >= (u64(1) << 61)) throw std::invalid_argument("Modulus: need 2 <= q < 2^61");
        u128 ones = ~static_cast<u128>(0);
        u128 ratio = ones / q;  // == floor(2^128 / q) for q not a power of two; off-by-zero irrelevant below
        ratio_lo = static_cast<u64>(ratio);
        ratio_hi = static_cast<u64>(ratio >> 64);
    }

    u64 reduce128(u64 lo, u64 hi) const {
        // Barrett reduction of a 128-bit value; input must be < q^2.
        u64 carry = mul_hi64(lo, ratio_lo);
        u128 t = static_cast<u128>(lo) * ratio_hi;
        u64 tmp1 = static_cast<u64>(t) + carry;
        u64 tmp3 = static_cast<u64>(t >> 64) + (tmp1 < carry ? 1 : 0);
        t = static_cast<u128>(hi) * ratio_lo;
        u64 s = tmp1 + static_cast<u64>(t);
        u64 carry2 = static_cast<u64>(t >> 64) + (s < tmp1 ? 1 : 0);
        u64 quot = hi * ratio_hi + tmp3 + carry2;
        u64 rem = lo - quot * q;
        if (rem >= q) rem -= q;
        return rem;
    }

    u64 mul(u64 a, u64 b) const {
        u128 z = static_cast<u128>(a) * b;
        return reduce128(static_cast<u64>(z), static_cast<u64>(z >> 64));
    }

    u64 add(u64 a, u64 b) const {
        u64 s = a + b;
        return s >= q ? s - q : s;
    }

    u64 sub(u64 a, u64 b) const { return a >= b ? a - b : a + q - b; }

    u64 neg(u64 a) const { return a == 0 ? 0 : q - a; }

    u64 pow(u64 base, u64 exp) const {
        u64 r = 1;
        u64 b = base % q;
        while (exp) {
            if (exp & 1) r = mul(r, b);
            b = mul(b, b);
            exp >>= 1;
        }
        return r;
    }

    // Inverse by Fermat; q must be prime.
    u64 inv(u64 a) const { return pow(a, q - 2); }

    u64 reduce_i64(i64 v) const {
        i64 m = v % static_cast<i64>(q);
        return m < 0 ? static_cast<u64>(m + static_cast<i64>(q)) : static_cast<u64>(m);
    }
};

// Shoup precomputation for multiplying by a fixed operand w < q.
inline u64 shoup_precompute(u64 w, u64 q) {
    return static_cast<u64>((static_cast<u128>(w) << 64) / q);
}

// x*w mod q with w', requires x < q, w < q. Result in [0, q).
inline u64 mul_shoup(u64 x, u64 w, u64 w_shoup, u64 q) {
    u64 qhat = mul_hi64(x, w_shoup);
    u64 r = x * w - qhat * q;
    return r >= q ? r - q : r;
}

// Lazy variant: any x, result in [0, 2q]. Used by the NTT butterflies,
// which keep values in [0, 4q) and reduce once at the end.
inline u64 mul_shoup_lazy(u64 x, u64 w, u64 w_shoup, u64 q) {
    u64 qhat = mul_hi64(x, w_shoup);
    return x * w - qhat * q;
}

namespace detail {

inline bool miller_rabin(u64 n, u64 a, const Modulus& m) {
    if (a % n == 0) return true;
    u64 d = n - 1;
    int r = 0;
    while ((d & 1) == 0) { d >>= 1; ++r; }
    u64 x = m.pow(a % n, d);
    if (x == 1 || x == n - 1) return true;
    for (int i = 1; i < r; ++i) {
        x = m.mul(x, x);
        if (x == n - 1) return true;
    }
    return false;
}

}  // namespace detail

inline bool is_prime_u64(u64 n) {
    if (n < 2) return false;
    for (u64 p : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (n == p) return true;
        if (n % p == 0) return false;
    }
    Modulus m(n);
    // Deterministic witness set for all 64-bit integers.
    for (u64 a : {2ull, 3ull, 5ull, 7ull, 11ull, 13ull, 17ull, 19ull, 23ull, 29ull, 31ull, 37ull}) {
        if (!detail::miller_rabin(n, a, m)) return false;
    }
    return true;
}

// Largest primes <= 2^bit_size with p == 1 (mod step), excluding any in `taken`.
inline std::vector<u64> find_ntt_primes(std::size_t count, int bit_size, u64 step,
                                        std::vector<u64> taken = {}) {
    if (bit_size < 10 || bit_size > 60) throw std::invalid_argument("find_ntt_primes: bit_size out of range");
    std::vector<u64> out;
    u64 top = (u64(1) << bit_size);
    u64 c = (top / step) * step + 1;
    while (c + step > top) c -= step;  // first candidate strictly below 2^bit_size
    while (out.size() < count) {
        if (c <= (u64(1) << (bit_size - 1))) throw std::runtime_error("find_ntt_primes: search exhausted");
        if (is_prime_u64(c) && std::find(taken.begin(), taken.end(), c) == taken.end()) {
            out.push_back(c);
            taken.push_back(c);
        }
        c -= step;
    }
    return out;
}

inline u64 splitmix64(u64 x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Deterministic random stream. All distribution code is written out here so a
// fixed seed reproduces the same draws on any standard library.
class Rng {
public:
    explicit Rng(u64 seed) : gen_(seed) {}

    u64 next() { return gen_(); }

    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Unbiased integer in [0, bound).
    u64 below(u64 bound) {
        if (bound == 0) throw std::invalid_argument("Rng::below: zero bound");
        u64 zone = std::numeric_limits<u64>::max() - (std::numeric_limits<u64>::max() - bound + 1) % bound;
        for (;;) {
            u64 r = next();
            if (r <= zone) return r % bound;
        }
    }

    double gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform01();
        if (u1 < 1e-300) u1 = 1e-300;
        double u2 = uniform01();
        double mag = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        cached_ = mag * std::sin(two_pi * u2);
        have_cached_ = true;
        return mag * std::cos(two_pi * u2);
    }

private:
    std::mt19937_64 gen_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

// Chunked parallel loop. fn(begin, end) runs on disjoint ranges; with
// threads <= 1 it degenerates to a plain call, and results must not depend
// on the chunking (callers only write disjoint output slots).
inline void parallel_for(std::size_t count, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (count == 0) return;
    if (threads <= 1 || count < 2) {
        fn(0, count);
        return;
    }
    unsigned workers = std::min<std::size_t>(threads, count);
    std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
        std::size_t b = t * chunk;
        std::size_t e = std::min(count, b + chunk);
        if (b >= e) break;
        pool.emplace_back([&fn, b, e] { fn(b, e); });
    }
    for (auto& th : pool) th.join();
}

}  // namespace hecnn
