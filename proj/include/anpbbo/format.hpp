#pragma once

#include <charconv>
#include <cmath>
#include <string>
#include <system_error>

namespace anpbbo {

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

/// Fixed-point with `decimals` digits after the point.
inline std::string format_fixed(double v, int decimals)
{
    if (!std::isfinite(v)) return format_double(v);
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, decimals);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s)
{
    if (s == "nan") return std::nan("");
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + s + "'");
    return v;
}

} // namespace anpbbo
