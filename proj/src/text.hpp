#pragma once

// Small CSV helpers shared by the readers and writers.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "affect/datamodel.hpp"

namespace affect::detail
{

inline void strip_cr(std::string& line)
{
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

inline std::vector<std::string_view> split_csv(std::string_view line)
{
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true)
    {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos)
        {
            cells.push_back(line.substr(start));
            return cells;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline double parse_finite(std::string_view cell, std::size_t line, const std::string& column)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
        throw ParseError(line, column + ": not a number: '" + std::string(cell) + "'");
    if (!std::isfinite(v))
        throw ParseError(line, column + ": non-finite value");
    return v;
}

inline std::int64_t parse_int(std::string_view cell, std::size_t line, const std::string& column)
{
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || cell.empty())
        throw ParseError(line, column + ": not an integer: '" + std::string(cell) + "'");
    return v;
}

inline std::string format_double(double value)
{
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

} // namespace affect::detail
