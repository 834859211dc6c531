#pragma once

#include <cfenv>
#include <cmath>
#include <cstdint>
#include <random>

#include "anpbbo/objectives/twin.hpp"

namespace anpbbo::objectives {

/// Sensor model: additive Gaussian noise, then quantization.
struct MeasurementModel {
    double temperature_variance = 0.5;
    double humidity_variance = 4.0;
    double resolution = 0.1;
    std::uint64_t seed = 20240917;
    bool quantize = true;

    void validate() const
    {
        if (temperature_variance < 0.0 || humidity_variance < 0.0)
            throw ConfigurationError("measurement model: variances must be >= 0");
        if (!(resolution > 0.0)) throw ConfigurationError("measurement model: resolution must be > 0");
    }
};

/// Round to the nearest multiple of `resolution`, ties to even. When
/// 1/resolution is an integer the result is the double nearest to the
/// decimal multiple (21.4, not 21.400000000000002).
inline double quantize(double value, double resolution)
{
    const double inverse = 1.0 / resolution;
    const double whole = std::nearbyint(inverse);
    const bool integral_inverse = std::abs(inverse - whole) < 1e-9 * whole;
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    double out;
    if (integral_inverse) {
        out = std::nearbyint(value * whole) / whole;
    } else {
        out = std::nearbyint(value / resolution) * resolution;
    }
    std::fesetround(saved);
    return out;
}

inline OutputSeries corrupt_measurements(const OutputSeries& clean, const MeasurementModel& model)
{
    model.validate();
    std::mt19937_64 rng(model.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double sd_temperature = std::sqrt(model.temperature_variance);
    const double sd_humidity = std::sqrt(model.humidity_variance);
    OutputSeries out = clean;
    for (Eigen::Index s = 0; s < out.samples(); ++s) {
        for (Eigen::Index ch = 0; ch < out.channels(); ++ch) {
            const double sd = ch < kZones ? sd_temperature : sd_humidity;
            double v = out.values(ch, s) + sd * normal(rng);
            if (model.quantize) v = quantize(v, model.resolution);
            out.values(ch, s) = v;
        }
    }
    return out;
}

} // namespace anpbbo::objectives
