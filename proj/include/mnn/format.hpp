#pragma once

#include <charconv>
#include <string>

namespace mnn {

/// Shortest decimal text that round-trips to the same double.
inline std::string format_real(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string format_fixed(double v, int digits) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, digits);
    return std::string(buf, res.ptr);
}

} // namespace mnn
