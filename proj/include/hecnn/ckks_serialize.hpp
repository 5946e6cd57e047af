#pragma once

// Versioned binary serialization for keys and ciphertexts. Layout is
// little-endian throughout:
//
//   magic "CKKS" | version u16 | kind u16 | n u32 | chain_len u16 |
//   primes u64[chain_len] | scale f64 | sigma f64 | degenerate u8 | payload
//
// Polynomial payload: level u16 | rep u8 | (level+1) * n residues u64.
// Round trips are bit-exact.

#include "hecnn/ckks.hpp"
#include "hecnn/io_util.hpp"

namespace hecnn {

enum class BlobKind : u16 {
    SecretKey = 1,
    PublicKey = 2,
    EvaluationKey = 3,
    Ciphertext = 4,
};

namespace detail {

inline constexpr char kCkksMagic[4] = {'C', 'K', 'K', 'S'};
inline constexpr u16 kCkksVersion = 1;

inline void write_header(std::ostream& os, BlobKind kind, const CkksParams& p) {
    io::write_bytes(os, kCkksMagic, 4);
    io::write_le<u16>(os, kCkksVersion);
    io::write_le<u16>(os, static_cast<u16>(kind));
    io::write_le<u32>(os, static_cast<u32>(p.ring.n));
    io::write_le<u16>(os, static_cast<u16>(p.ring.primes.size()));
    for (u64 q : p.ring.primes) io::write_le<u64>(os, q);
    io::write_le<double>(os, p.scale);
    io::write_le<double>(os, p.sigma);
    io::write_le<u8>(os, p.degenerate_noise ? 1 : 0);
}

inline CkksParams read_header(std::istream& is, BlobKind expected) {
    char magic[4];
    io::read_bytes(is, magic, 4);
    if (std::memcmp(magic, kCkksMagic, 4) != 0) throw std::runtime_error("ckks blob: bad magic");
    u16 version = io::read_le<u16>(is);
    if (version != kCkksVersion) throw std::runtime_error("ckks blob: unsupported version");
    u16 kind = io::read_le<u16>(is);
    if (kind != static_cast<u16>(expected)) throw std::runtime_error("ckks blob: wrong object kind");
    CkksParams p;
    p.ring.n = io::read_le<u32>(is);
    u16 chain = io::read_le<u16>(is);
    p.ring.primes.resize(chain);
    for (auto& q : p.ring.primes) q = io::read_le<u64>(is);
    p.scale = io::read_le<double>(is);
    p.sigma = io::read_le<double>(is);
    p.degenerate_noise = io::read_le<u8>(is) != 0;
    p.ring.finalize();
    return p;
}

inline void write_poly(std::ostream& os, const RingPoly& p) {
    io::write_le<u16>(os, static_cast<u16>(p.level));
    io::write_le<u8>(os, static_cast<u8>(p.rep));
    for (const auto& row : p.rns)
        for (u64 v : row) io::write_le<u64>(os, v);
}

inline RingPoly read_poly(std::istream& is, std::size_t n) {
    RingPoly p;
    p.level = io::read_le<u16>(is);
    p.rep = static_cast<Rep>(io::read_le<u8>(is));
    p.rns.assign(p.level + 1, std::vector<u64>(n));
    for (auto& row : p.rns)
        for (auto& v : row) v = io::read_le<u64>(is);
    return p;
}

}  // namespace detail

inline void save_secret_key(std::ostream& os, const CkksParams& p, const SecretKey& sk) {
    detail::write_header(os, BlobKind::SecretKey, p);
    detail::write_poly(os, sk.s);
}

inline std::pair<CkksParams, SecretKey> load_secret_key(std::istream& is) {
    CkksParams p = detail::read_header(is, BlobKind::SecretKey);
    SecretKey sk{detail::read_poly(is, p.ring.n)};
    return {std::move(p), std::move(sk)};
}

inline void save_public_key(std::ostream& os, const CkksParams& p, const PublicKey& pk) {
    detail::write_header(os, BlobKind::PublicKey, p);
    detail::write_poly(os, pk.b);
    detail::write_poly(os, pk.a);
}

inline std::pair<CkksParams, PublicKey> load_public_key(std::istream& is) {
    CkksParams p = detail::read_header(is, BlobKind::PublicKey);
    PublicKey pk;
    pk.b = detail::read_poly(is, p.ring.n);
    pk.a = detail::read_poly(is, p.ring.n);
    return {std::move(p), std::move(pk)};
}

inline void save_evaluation_key(std::ostream& os, const CkksParams& p, const EvaluationKey& evk) {
    detail::write_header(os, BlobKind::EvaluationKey, p);
    io::write_le<u16>(os, static_cast<u16>(evk.base_bits));
    io::write_le<u16>(os, static_cast<u16>(evk.pairs.size()));
    for (const auto& [b, a] : evk.pairs) {
        detail::write_poly(os, b);
        detail::write_poly(os, a);
    }
}

inline std::pair<CkksParams, EvaluationKey> load_evaluation_key(std::istream& is) {
    CkksParams p = detail::read_header(is, BlobKind::EvaluationKey);
    EvaluationKey evk;
    evk.base_bits = io::read_le<u16>(is);
    u16 count = io::read_le<u16>(is);
    for (u16 i = 0; i < count; ++i) {
        RingPoly b = detail::read_poly(is, p.ring.n);
        RingPoly a = detail::read_poly(is, p.ring.n);
        evk.pairs.emplace_back(std::move(b), std::move(a));
    }
    return {std::move(p), std::move(evk)};
}

inline void save_ciphertext(std::ostream& os, const CkksParams& p, const Ciphertext& ct) {
    detail::write_header(os, BlobKind::Ciphertext, p);
    io::write_le<double>(os, ct.scale);
    io::write_le<u16>(os, static_cast<u16>(ct.level));
    detail::write_poly(os, ct.c0);
    detail::write_poly(os, ct.c1);
}

inline std::pair<CkksParams, Ciphertext> load_ciphertext(std::istream& is) {
    CkksParams p = detail::read_header(is, BlobKind::Ciphertext);
    Ciphertext ct;
    ct.scale = io::read_le<double>(is);
    ct.level = io::read_le<u16>(is);
    ct.c0 = detail::read_poly(is, p.ring.n);
    ct.c1 = detail::read_poly(is, p.ring.n);
    return {std::move(p), std::move(ct)};
}

// Two parameter sets describe the same scheme instance.
inline bool same_params(const CkksParams& a, const CkksParams& b) {
    return a.ring.n == b.ring.n && a.ring.primes == b.ring.primes && a.scale == b.scale &&
           a.sigma == b.sigma && a.degenerate_noise == b.degenerate_noise;
}

}  // namespace hecnn
