#pragma once

#include <algorithm>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "anpbbo/bbo/engine.hpp"
#include "anpbbo/format.hpp"

namespace anpbbo::harness {

using json = nlohmann::json;

/// JSON number, or null for NaN and infinities.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json vector_json(const bbo::Vector& v)
{
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number_or_null(v(i)));
    return a;
}

/// index,round,batch_index,theta_1..theta_n,cost,incumbent. Failed
/// evaluations carry cost "nan". Wall-times live in timings.csv so that
/// this file is reproducible byte for byte.
inline void write_history_csv(std::ostream& os, const bbo::OptimizationHistory& history, Eigen::Index dim)
{
    os << "index,round,batch_index";
    for (Eigen::Index d = 0; d < dim; ++d) os << ",theta_" << d + 1;
    os << ",cost,incumbent\n";
    for (const auto& e : history.entries) {
        os << e.index << ',' << e.round << ',' << e.batch_index;
        for (Eigen::Index d = 0; d < dim; ++d) os << ',' << format_double(e.theta(d));
        os << ',' << format_double(e.ok ? e.cost : std::nan("")) << ',' << format_double(e.incumbent) << '\n';
    }
}

/// index,bbo_evaluations,incumbent; bbo_evaluations counts evaluations
/// after the initial design.
inline void write_incumbent_csv(std::ostream& os, const bbo::OptimizationHistory& history, std::size_t initial_points)
{
    os << "index,bbo_evaluations,incumbent\n";
    for (const auto& e : history.entries) {
        const std::size_t after = e.index + 1 > initial_points ? e.index + 1 - initial_points : 0;
        os << e.index << ',' << after << ',' << format_double(e.incumbent) << '\n';
    }
}

inline void write_batches_jsonl(std::ostream& os, const bbo::OptimizationHistory& history)
{
    for (const auto& plan : history.batches) {
        json candidates = json::array();
        for (const auto& c : plan.candidates) {
            json centers = json::array();
            for (const auto& center : c.exclusion.centers) centers.push_back(vector_json(center));
            candidates.push_back({{"theta", vector_json(c.theta)},
                                  {"unit", vector_json(c.unit)},
                                  {"latent_draw", c.latent_draw},
                                  {"acquisition", number_or_null(c.acquisition)},
                                  {"exclusion", {{"radius", c.exclusion.radius}, {"centers", centers}}}});
        }
        os << json{{"round", plan.round}, {"candidates", candidates}}.dump() << '\n';
    }
}

/// Per-round phase wall-times followed by per-evaluation wall-times.
inline void write_timings_csv(std::ostream& os, const bbo::OptimizationHistory& history)
{
    os << "kind,round,index,evaluate_ms,train_ms,select_ms,wall_ms,error\n";
    for (const auto& t : history.timings)
        os << "round," << t.round << ",," << format_double(t.evaluate_ms) << ',' << format_double(t.train_ms) << ','
           << format_double(t.select_ms) << ",,\n";
    for (const auto& e : history.entries) {
        std::string err = e.error;
        std::replace(err.begin(), err.end(), ',', ';');
        std::replace(err.begin(), err.end(), '\n', ' ');
        os << "evaluation," << e.round << ',' << e.index << ",,,," << format_double(e.wall_ms) << ',' << err << '\n';
    }
}

/// Median of a non-empty sample; mean of the two middle values when even.
inline double median(std::vector<double> values)
{
    if (values.empty()) throw PreconditionError("median of an empty sample");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

/// Per-evaluation-index median incumbent over runs; runs that stopped
/// early only contribute to the indices they reached.
inline std::vector<double> median_incumbents(const std::vector<const bbo::OptimizationHistory*>& runs)
{
    std::size_t longest = 0;
    for (const auto* h : runs) longest = std::max(longest, h->entries.size());
    std::vector<double> out;
    out.reserve(longest);
    for (std::size_t i = 0; i < longest; ++i) {
        std::vector<double> at;
        for (const auto* h : runs)
            if (i < h->entries.size()) at.push_back(h->entries[i].incumbent);
        out.push_back(median(at));
    }
    return out;
}

/// index,bbo_evaluations,<arm>... with per-index median incumbents.
inline void write_ablation_csv(std::ostream& os, const std::vector<std::string>& arms,
                               const std::vector<std::vector<double>>& medians, std::size_t initial_points)
{
    os << "index,bbo_evaluations";
    for (const auto& a : arms) os << ',' << a;
    os << '\n';
    std::size_t longest = 0;
    for (const auto& m : medians) longest = std::max(longest, m.size());
    for (std::size_t i = 0; i < longest; ++i) {
        os << i << ',' << (i + 1 > initial_points ? i + 1 - initial_points : 0);
        for (const auto& m : medians) {
            os << ',';
            if (i < m.size()) os << format_double(m[i]);
        }
        os << '\n';
    }
}

/// Create a fresh directory `<parent>/<stem>-<UTC timestamp>-seed<seed>`,
/// adding a numeric suffix instead of ever reusing an existing one.
inline std::filesystem::path create_run_directory(const std::filesystem::path& parent, const std::string& stem,
                                                  std::uint64_t seed)
{
    std::filesystem::create_directories(parent);
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%Y%m%dT%H%M%SZ", &utc);
    const std::string base = stem + "-" + stamp + "-seed" + std::to_string(seed);
    for (int attempt = 0;; ++attempt) {
        auto dir = parent / (attempt == 0 ? base : base + "-" + std::to_string(attempt));
        if (std::filesystem::create_directory(dir)) return dir;
    }
}

inline std::ofstream open_artifact(const std::filesystem::path& path)
{
    if (std::filesystem::exists(path)) throw Error("refusing to overwrite artifact '" + path.string() + "'");
    std::ofstream os(path);
    if (!os) throw Error("cannot write '" + path.string() + "'");
    return os;
}

} // namespace anpbbo::harness
