#pragma once

// Two's-complement fixed-point codec: reals to bit arrays (LSB first) and
// back, the integer substrate for the Boolean-circuit arithmetic path.

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "hecnn/common.hpp"

namespace hecnn {

using BitVec = std::vector<u8>;  // one bit per entry, LSB first

struct FixedPointCodec {
    std::size_t total_bits = 0;       // k
    std::size_t fractional_bits = 0;  // f

    FixedPointCodec(std::size_t k, std::size_t f) : total_bits(k), fractional_bits(f) {
        if (k == 0 || k > 64 || f >= k)
            throw std::invalid_argument("FixedPointCodec: need 0 <= f < k <= 64");
    }

    double resolution() const { return std::ldexp(1.0, -static_cast<int>(fractional_bits)); }
    double max_value() const { return std::ldexp(1.0, static_cast<int>(total_bits - fractional_bits - 1)); }

    // Round-to-nearest (half away from zero) onto the fixed-point grid.
    BitVec encode(double x) const {
        if (!(std::abs(x) < max_value())) throw std::invalid_argument("fixed-point encode: overflow");
        i64 v = std::llround(std::ldexp(x, static_cast<int>(fractional_bits)));
        i64 lim = i64(1) << (total_bits - 1);
        if (v >= lim || v < -lim) throw std::invalid_argument("fixed-point encode: overflow after rounding");
        u64 word = static_cast<u64>(v);  // two's complement
        BitVec bits(total_bits);
        for (std::size_t i = 0; i < total_bits; ++i) bits[i] = static_cast<u8>((word >> i) & 1);
        return bits;
    }

    double decode(const BitVec& bits) const {
        if (bits.size() != total_bits) throw std::invalid_argument("fixed-point decode: wrong bit count");
        u64 word = 0;
        for (std::size_t i = 0; i < total_bits; ++i)
            if (bits[i]) word |= u64(1) << i;
        // sign extend
        if (total_bits < 64 && (word >> (total_bits - 1)))
            word |= ~((u64(1) << total_bits) - 1);
        return std::ldexp(static_cast<double>(static_cast<i64>(word)), -static_cast<int>(fractional_bits));
    }
};

}  // namespace hecnn
