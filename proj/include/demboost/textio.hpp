#pragma once

#include <charconv>
#include <cstdio>
#include <string>
#include <string_view>

#include "demboost/errors.hpp"

namespace demboost {

// Shortest representation that still round-trips a double exactly.
inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(std::string_view token, long line) {
    double value = 0.0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("non-numeric token '" + std::string(token) + "'", line);
    }
    return value;
}

inline long long parse_int(std::string_view token, long line) {
    long long value = 0;
    const char* begin = token.data();
    const char* end = begin + token.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw ParseError("expected integer, got '" + std::string(token) + "'", line);
    }
    return value;
}

}  // namespace demboost
