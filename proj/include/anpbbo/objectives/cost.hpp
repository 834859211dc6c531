#pragma once

#include <cmath>
#include <span>

#include "anpbbo/objectives/twin.hpp"

namespace anpbbo::objectives {

inline constexpr double kCostFloor = 1e-12;

/// Diagonals of the per-channel weight matrices W_i, one row per channel.
struct CostWeights {
    Series diagonal;

    static CostWeights per_channel(const Eigen::VectorXd& w, Eigen::Index samples)
    {
        CostWeights out;
        out.diagonal.resize(w.size(), samples);
        for (Eigen::Index ch = 0; ch < w.size(); ++ch) out.diagonal.row(ch).setConstant(w(ch));
        return out;
    }

    void validate() const
    {
        if (!(diagonal.array() > 0.0).all()) throw PreconditionError("cost weights must be positive");
    }
};

/// log(max(sum_i eps_i^T W_i eps_i, 1e-12)) with eps = measured - simulated.
inline double calibration_cost(const OutputSeries& measured, const OutputSeries& simulated, const CostWeights& w)
{
    if (measured.values.rows() != simulated.values.rows() || measured.values.cols() != simulated.values.cols())
        throw PreconditionError("calibration_cost: measured and simulated series differ in shape");
    if (w.diagonal.rows() != measured.values.rows() || w.diagonal.cols() != measured.values.cols())
        throw PreconditionError("calibration_cost: weight shape does not match the series");
    w.validate();
    const Series residual = measured.values - simulated.values;
    const double total = (residual.array().square() * w.diagonal.array()).sum();
    return std::log(std::max(total, kCostFloor));
}

/// ||eps||_2 / sqrt(T) for one channel.
inline double cvrmse(std::span<const double> measured, std::span<const double> simulated)
{
    if (measured.size() != simulated.size()) throw PreconditionError("cvrmse: length mismatch");
    if (measured.empty()) throw PreconditionError("cvrmse: empty series");
    double sum = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) {
        const double e = measured[i] - simulated[i];
        sum += e * e;
    }
    return std::sqrt(sum) / std::sqrt(static_cast<double>(measured.size()));
}

/// Per-channel cvrmse over two equally shaped series.
inline Eigen::VectorXd channel_cvrmse(const OutputSeries& measured, const OutputSeries& simulated)
{
    if (measured.values.rows() != simulated.values.rows() || measured.values.cols() != simulated.values.cols())
        throw PreconditionError("channel_cvrmse: shape mismatch");
    Eigen::VectorXd out(measured.channels());
    for (Eigen::Index ch = 0; ch < measured.channels(); ++ch) {
        const Eigen::VectorXd m = measured.values.row(ch).transpose();
        const Eigen::VectorXd s = simulated.values.row(ch).transpose();
        out(ch) = cvrmse({m.data(), static_cast<std::size_t>(m.size())}, {s.data(), static_cast<std::size_t>(s.size())});
    }
    return out;
}

} // namespace anpbbo::objectives
