#pragma once

// Tensor carriers for the two inference backends. The plain tensor is a
// dense batch-major array. The encrypted tensor holds one ciphertext per
// tensor position with the batch packed into ciphertext slots (image i of
// the batch lives in slot i of every ciphertext), so no slot rotations are
// ever needed.

#include <array>
#include <sstream>

#include "hecnn/ckks.hpp"

namespace hecnn {

struct Shape {
    bool flat = false;
    std::size_t h = 0, w = 0, c = 0;  // spatial
    std::size_t feat = 0;             // flat

    static Shape spatial(std::size_t h, std::size_t w, std::size_t c) { return {false, h, w, c, 0}; }
    static Shape flattened(std::size_t features) { return {true, 0, 0, 0, features}; }

    std::size_t positions() const { return flat ? feat : h * w * c; }
    Shape as_flat() const { return flattened(positions()); }

    bool operator==(const Shape& o) const {
        return flat == o.flat && (flat ? feat == o.feat : (h == o.h && w == o.w && c == o.c));
    }

    std::string str() const {
        std::ostringstream os;
        if (flat)
            os << "(" << feat << ")";
        else
            os << "(" << h << "x" << w << "x" << c << ")";
        return os.str();
    }
};

// Row-major, channel-last position index; flatten preserves this order.
inline std::size_t pos_index(const Shape& s, std::size_t y, std::size_t x, std::size_t ch) {
    return (y * s.w + x) * s.c + ch;
}

struct TensorPlain {
    Shape shape;
    std::size_t batch = 0;
    std::vector<double> data;  // [batch][position]

    static TensorPlain zeros(const Shape& shape, std::size_t batch) {
        return {shape, batch, std::vector<double>(shape.positions() * batch, 0.0)};
    }

    double& at(std::size_t b, std::size_t pos) { return data[b * shape.positions() + pos]; }
    double at(std::size_t b, std::size_t pos) const { return data[b * shape.positions() + pos]; }

    TensorPlain flattened() const { return {shape.as_flat(), batch, data}; }
};

struct TensorEncrypted {
    Shape shape;
    std::size_t batch = 0;
    std::vector<Ciphertext> cells;  // one per position

    // All cells of a well-formed tensor share one (scale, level) pair.
    void check_uniform() const {
        for (const auto& ct : cells) {
            if (ct.level != cells.front().level || ct.scale != cells.front().scale)
                throw std::runtime_error("TensorEncrypted: cells disagree on scale/level");
        }
    }
    double scale() const { return cells.front().scale; }
    u32 level() const { return cells.front().level; }
};

inline TensorEncrypted encrypt_tensor(const CkksEngine& eng, const PublicKey& pk, const TensorPlain& x,
                                      u64 seed, unsigned threads = 1) {
    if (x.batch > eng.slot_count()) throw std::invalid_argument("encrypt_tensor: batch exceeds slot count");
    TensorEncrypted out;
    out.shape = x.shape;
    out.batch = x.batch;
    out.cells.resize(x.shape.positions());
    double scale = eng.params().scale;
    parallel_for(out.cells.size(), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t pos = b; pos < e; ++pos) {
            std::vector<double> slots(x.batch);
            for (std::size_t i = 0; i < x.batch; ++i) slots[i] = x.at(i, pos);
            EncodedPlaintext m = eng.encode_real(slots, scale, eng.top_level());
            out.cells[pos] = eng.encrypt(pk, m, CkksEngine::derive_seed(seed, 0xce11 + pos));
        }
    });
    return out;
}

inline TensorPlain decrypt_tensor(const CkksEngine& eng, const SecretKey& sk, const TensorEncrypted& x,
                                  unsigned threads = 1) {
    TensorPlain out = TensorPlain::zeros(x.shape, x.batch);
    parallel_for(x.cells.size(), threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t pos = b; pos < e; ++pos) {
            PlaintextVector v = eng.decode(eng.decrypt(sk, x.cells[pos]));
            for (std::size_t i = 0; i < x.batch; ++i) out.at(i, pos) = v[i].real();
        }
    });
    return out;
}

}  // namespace hecnn
