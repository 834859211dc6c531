#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "anpbbo/format.hpp"
#include "anpbbo/objectives/twin.hpp"

namespace anpbbo::objectives {

inline constexpr const char* kSeriesHeader = "time_min,T1,T2,T3,w1,w2,w3";

enum class SeriesPrecision {
    measured,  ///< one decimal, the sensor resolution
    exact,     ///< shortest round-trip representation
};

inline void write_series_csv(const OutputSeries& series, std::ostream& os,
                             SeriesPrecision precision = SeriesPrecision::exact)
{
    if (series.channels() != kChannels) throw PreconditionError("series CSV needs exactly 6 channels");
    os << kSeriesHeader << '\n';
    for (Eigen::Index s = 0; s < series.samples(); ++s) {
        os << format_double(series.start_minutes + series.step_minutes * static_cast<double>(s));
        for (Eigen::Index ch = 0; ch < kChannels; ++ch) {
            const double v = series.values(ch, s);
            os << ',' << (precision == SeriesPrecision::measured ? format_fixed(v, 1) : format_double(v));
        }
        os << '\n';
    }
}

inline void write_series_csv(const OutputSeries& series, const std::filesystem::path& path,
                             SeriesPrecision precision = SeriesPrecision::exact)
{
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw ConfigurationError("cannot open '" + path.string() + "' for writing");
    write_series_csv(series, os, precision);
}

inline OutputSeries read_series_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line != kSeriesHeader)
        throw ConfigurationError(std::string("series CSV: expected header '") + kSeriesHeader + "'");
    std::vector<std::array<double, kChannels + 1>> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::array<double, kChannels + 1> row{};
        std::stringstream ss(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(ss, cell, ',')) {
            if (i >= row.size()) throw ConfigurationError("series CSV: too many columns in '" + line + "'");
            row[i++] = parse_double(cell);
        }
        if (i != row.size()) throw ConfigurationError("series CSV: too few columns in '" + line + "'");
        rows.push_back(row);
    }
    OutputSeries out;
    out.values.resize(kChannels, static_cast<Eigen::Index>(rows.size()));
    for (std::size_t s = 0; s < rows.size(); ++s)
        for (int ch = 0; ch < kChannels; ++ch)
            out.values(ch, static_cast<Eigen::Index>(s)) = rows[s][static_cast<std::size_t>(ch) + 1];
    if (!rows.empty()) out.start_minutes = rows.front()[0];
    if (rows.size() > 1) out.step_minutes = rows[1][0] - rows[0][0];
    return out;
}

inline OutputSeries read_series_csv(const std::filesystem::path& path)
{
    std::ifstream is(path);
    if (!is) throw ConfigurationError("cannot open '" + path.string() + "'");
    return read_series_csv(is);
}

} // namespace anpbbo::objectives
