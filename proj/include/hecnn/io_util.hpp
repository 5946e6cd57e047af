#pragma once

// Little-endian binary primitives shared by the file formats.

#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "hecnn/common.hpp"

namespace hecnn::io {

inline void write_bytes(std::ostream& os, const void* p, std::size_t len) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
    if (!os) throw std::runtime_error("io: write failed");
}

inline void read_bytes(std::istream& is, void* p, std::size_t len) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
    if (is.gcount() != static_cast<std::streamsize>(len)) throw std::runtime_error("io: unexpected end of file");
}

template <typename T>
void write_le(std::ostream& os, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));  // host is little-endian; format is little-endian
    write_bytes(os, buf, sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    unsigned char buf[sizeof(T)];
    read_bytes(is, buf, sizeof(T));
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

inline void write_u64_array(std::ostream& os, const std::vector<u64>& v) {
    write_le<u64>(os, v.size());
    for (u64 x : v) write_le<u64>(os, x);
}

inline std::vector<u64> read_u64_array(std::istream& is) {
    u64 len = read_le<u64>(is);
    if (len > (u64(1) << 32)) throw std::runtime_error("io: implausible array length");
    std::vector<u64> v(len);
    for (auto& x : v) x = read_le<u64>(is);
    return v;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("io: cannot open for writing: " + path);
    return f;
}

inline std::ifstream open_in(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("io: cannot open for reading: " + path);
    return f;
}

}  // namespace hecnn::io
