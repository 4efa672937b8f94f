#pragma once

#include <charconv>
#include <cstdint>
#include <string>

namespace tbsim {

// Shortest decimal form that round-trips the exact double. Used everywhere a
// number is written to a file so that serialize/parse/serialize is stable.
inline std::string format_double(double x) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::uint32_t bit_reverse(std::uint32_t v, int n_bits) {
    std::uint32_t r = 0;
    for (int i = 0; i < n_bits; ++i) {
        r = (r << 1) | (v & 1u);
        v >>= 1;
    }
    return r;
}

}  // namespace tbsim
