#pragma once

// Little-endian binary readers/writers used by the bank and checkpoint
// formats. Explicit byte order keeps the files portable.

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "ddcl/errors.hpp"

namespace ddcl::binio {

inline void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline void put_u64(std::ostream& os, std::uint64_t v) {
    put_u32(os, static_cast<std::uint32_t>(v));
    put_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

inline void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}

inline void put_bytes(std::ostream& os, const void* p, std::size_t n) {
    os.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n));
}

inline void put_string(std::ostream& os, const std::string& s) {
    put_u64(os, s.size());
    put_bytes(os, s.data(), s.size());
}

inline void read_exact(std::istream& is, void* p, std::size_t n, const char* what) {
    is.read(reinterpret_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(is.gcount()) != n)
        throw IoError(std::string(what) + ": truncated at byte offset " +
                      std::to_string(static_cast<long long>(is.tellg()) < 0
                                         ? 0
                                         : static_cast<long long>(is.tellg())));
}

inline std::uint32_t get_u32(std::istream& is, const char* what) {
    unsigned char b[4];
    read_exact(is, b, 4, what);
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
           (std::uint32_t(b[3]) << 24);
}

inline std::uint64_t get_u64(std::istream& is, const char* what) {
    std::uint64_t lo = get_u32(is, what);
    std::uint64_t hi = get_u32(is, what);
    return lo | (hi << 32);
}

inline float get_f32(std::istream& is, const char* what) {
    std::uint32_t bits = get_u32(is, what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline double get_f64(std::istream& is, const char* what) {
    std::uint64_t bits = get_u64(is, what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline std::string get_string(std::istream& is, const char* what) {
    std::uint64_t n = get_u64(is, what);
    std::string s(n, '\0');
    if (n) read_exact(is, s.data(), n, what);
    return s;
}

// FNV-1a 64, used for config/checkpoint integrity hashes.
struct Fnv64 {
    std::uint64_t state = 1469598103934665603ULL;
    void add(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            state ^= b[i];
            state *= 1099511628211ULL;
        }
    }
    void add_str(const std::string& s) { add(s.data(), s.size()); }
};

} // namespace ddcl::binio
