#pragma once

// Minimal unsigned big integer, just large enough for CRT reconstruction
// across a residue chain (a few hundred bits). Little-endian 64-bit limbs.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hecnn/common.hpp"

namespace hecnn {

class BigUInt {
public:
    BigUInt() = default;
    explicit BigUInt(u64 v) {
        if (v) limbs_.push_back(v);
    }

    bool is_zero() const { return limbs_.empty(); }
    std::size_t limb_count() const { return limbs_.size(); }
    u64 limb(std::size_t i) const { return i < limbs_.size() ? limbs_[i] : 0; }

    std::size_t bit_length() const {
        if (limbs_.empty()) return 0;
        u64 top = limbs_.back();
        std::size_t b = 64;
        while (!(top >> (b - 1))) --b;
        return (limbs_.size() - 1) * 64 + b;
    }

    // this += a * m
    void add_mul(const BigUInt& a, u64 m) {
        if (m == 0 || a.is_zero()) return;
        if (limbs_.size() < a.limbs_.size() + 1) limbs_.resize(a.limbs_.size() + 1, 0);
        u64 carry = 0;
        for (std::size_t i = 0; i < a.limbs_.size(); ++i) {
            u128 t = static_cast<u128>(a.limbs_[i]) * m + limbs_[i] + carry;
            limbs_[i] = static_cast<u64>(t);
            carry = static_cast<u64>(t >> 64);
        }
        std::size_t i = a.limbs_.size();
        while (carry) {
            if (i >= limbs_.size()) limbs_.resize(i + 1, 0);
            u128 t = static_cast<u128>(limbs_[i]) + carry;
            limbs_[i] = static_cast<u64>(t);
            carry = static_cast<u64>(t >> 64);
            ++i;
        }
        normalize();
    }

    void mul_u64(u64 m) {
        if (m == 0) { limbs_.clear(); return; }
        u64 carry = 0;
        for (auto& l : limbs_) {
            u128 t = static_cast<u128>(l) * m + carry;
            l = static_cast<u64>(t);
            carry = static_cast<u64>(t >> 64);
        }
        if (carry) limbs_.push_back(carry);
    }

    int compare(const BigUInt& o) const {
        if (limbs_.size() != o.limbs_.size()) return limbs_.size() < o.limbs_.size() ? -1 : 1;
        for (std::size_t i = limbs_.size(); i-- > 0;) {
            if (limbs_[i] != o.limbs_[i]) return limbs_[i] < o.limbs_[i] ? -1 : 1;
        }
        return 0;
    }

    // this -= o; requires this >= o.
    void sub(const BigUInt& o) {
        if (compare(o) < 0) throw std::invalid_argument("BigUInt::sub underflow");
        u64 borrow = 0;
        for (std::size_t i = 0; i < limbs_.size(); ++i) {
            u64 rhs = o.limb(i);
            u64 a = limbs_[i];
            u64 d = a - rhs - borrow;
            borrow = (a < rhs + borrow) || (rhs == std::numeric_limits<u64>::max() && borrow) ? 1 : 0;
            limbs_[i] = d;
        }
        normalize();
    }

    // Quotient of division by a single word; also yields the remainder.
    BigUInt div_u64(u64 d, u64* rem_out = nullptr) const {
        if (d == 0) throw std::invalid_argument("BigUInt::div_u64 by zero");
        BigUInt q;
        q.limbs_.assign(limbs_.size(), 0);
        u128 rem = 0;
        for (std::size_t i = limbs_.size(); i-- > 0;) {
            u128 cur = (rem << 64) | limbs_[i];
            q.limbs_[i] = static_cast<u64>(cur / d);
            rem = cur % d;
        }
        q.normalize();
        if (rem_out) *rem_out = static_cast<u64>(rem);
        return q;
    }

    u64 mod_u64(u64 d) const {
        u64 r = 0;
        div_u64(d, &r);
        return r;
    }

    // Bits [off, off+cnt), cnt <= 64.
    u64 bits(std::size_t off, std::size_t cnt) const {
        u64 lo = limb(off / 64) >> (off % 64);
        if (off % 64 && off % 64 + cnt > 64) lo |= limb(off / 64 + 1) << (64 - off % 64);
        return cnt >= 64 ? lo : lo & ((u64(1) << cnt) - 1);
    }

    long double to_long_double() const {
        long double v = 0.0L;
        for (std::size_t i = limbs_.size(); i-- > 0;) v = v * 18446744073709551616.0L + static_cast<long double>(limbs_[i]);
        return v;
    }

private:
    void normalize() {
        while (!limbs_.empty() && limbs_.back() == 0) limbs_.pop_back();
    }

    std::vector<u64> limbs_;
};

}  // namespace hecnn
