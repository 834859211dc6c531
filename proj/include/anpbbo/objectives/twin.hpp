#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>

#include "anpbbo/bbo/domain.hpp"
#include "anpbbo/errors.hpp"

namespace anpbbo::objectives {

using Series = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr int kZones = 3;
inline constexpr int kChannels = 6;
inline constexpr int kTwinParameters = 12;
inline constexpr int kSampleMinutes = 15;
inline constexpr int kSamplesPerDay = 24 * 60 / kSampleMinutes;

inline const std::array<const char*, kChannels>& channel_names()
{
    static const std::array<const char*, kChannels> names{"T1", "T2", "T3", "w1", "w2", "w3"};
    return names;
}

/// Multi-channel output: rows are channels (T1, T2, T3 in degC, then
/// w1, w2, w3 in g/kg), columns are samples every 15 minutes.
struct OutputSeries {
    Series values;
    double start_minutes = 0.0;
    double step_minutes = kSampleMinutes;

    Eigen::Index samples() const { return values.cols(); }
    Eigen::Index channels() const { return values.rows(); }

    /// Samples [first, first + count) of every channel.
    OutputSeries window(Eigen::Index first, Eigen::Index count) const
    {
        if (first < 0 || count < 0 || first + count > samples())
            throw PreconditionError("output series window out of range");
        return {values.middleCols(first, count), start_minutes + step_minutes * static_cast<double>(first),
                step_minutes};
    }
};

/// Reference values and search intervals of the 12 twin parameters.
struct TwinParameterTable {
    std::array<double, kTwinParameters> truth{8.00, 5.00, 0.45, 3.00, 1.00, 0.10, 1.00, 0.10, 18.00, 10.00, 0.48, 6.00};
    std::array<double, kTwinParameters> lower{6, 3, 0, 2, 0, 0, 0, 0, 14, 8, 0, 3};
    std::array<double, kTwinParameters> upper{10, 7, 1, 4, 2, 1, 1, 1, 20, 11, 2, 7};
};

inline const TwinParameterTable& twin_parameter_table()
{
    static const TwinParameterTable table;
    return table;
}

inline Eigen::VectorXd twin_true_theta()
{
    const auto& t = twin_parameter_table().truth;
    return Eigen::Map<const Eigen::VectorXd>(t.data(), kTwinParameters);
}

inline bbo::SearchDomain twin_domain()
{
    const auto& t = twin_parameter_table();
    return {Eigen::Map<const Eigen::VectorXd>(t.lower.data(), kTwinParameters),
            Eigen::Map<const Eigen::VectorXd>(t.upper.data(), kTwinParameters)};
}

/// Physical rates of the lumped three-zone model.
struct ZoneCoefficients {
    std::array<double, kZones> envelope{};   ///< alpha_i, 1/h
    std::array<double, kZones> heat_gain{};  ///< beta_i, K/h while occupied
    std::array<double, kZones> moisture_gain{};  ///< lambda_i, g/kg/h while occupied
    double ambient_humidity = 0.0;           ///< w_amb, g/kg
    double ambient_mean_temperature = 0.0;   ///< T_mean, degC
    double ventilation = 0.0;                ///< nu, 1/h
};

/// theta_1..theta_12 mapped to model roles:
///   alpha = 0.01 * (theta1, theta2, theta4), beta = (theta5, theta6, theta7),
///   lambda = (theta11, theta8, theta3), w_amb = theta9, T_mean = theta10,
///   nu = 0.1 * theta12.
struct TwinParameters {
    std::array<double, kTwinParameters> theta{};

    static TwinParameters from_vector(const Eigen::VectorXd& v)
    {
        if (v.size() != kTwinParameters)
            throw PreconditionError("twin parameters: expected 12 values, got " + std::to_string(v.size()));
        TwinParameters p;
        for (int i = 0; i < kTwinParameters; ++i) p.theta[static_cast<std::size_t>(i)] = v(i);
        return p;
    }

    Eigen::VectorXd as_vector() const { return Eigen::Map<const Eigen::VectorXd>(theta.data(), kTwinParameters); }

    void validate() const
    {
        const auto& t = twin_parameter_table();
        for (std::size_t i = 0; i < theta.size(); ++i)
            if (!(theta[i] >= t.lower[i] && theta[i] <= t.upper[i]))
                throw PreconditionError("twin parameter theta" + std::to_string(i + 1) + " = " +
                                        std::to_string(theta[i]) + " outside [" + std::to_string(t.lower[i]) + ", " +
                                        std::to_string(t.upper[i]) + "]");
    }

    ZoneCoefficients coefficients() const
    {
        ZoneCoefficients c;
        c.envelope = {0.01 * theta[0], 0.01 * theta[1], 0.01 * theta[3]};
        c.heat_gain = {theta[4], theta[5], theta[6]};
        c.moisture_gain = {theta[10], theta[7], theta[2]};
        c.ambient_humidity = theta[8];
        c.ambient_mean_temperature = theta[9];
        c.ventilation = 0.1 * theta[11];
        return c;
    }
};

/// Fixed inputs and integration settings of the stand-in twin.
struct TwinConstants {
    double solar_gain = 1.5;            ///< gamma, K/h at peak irradiance
    double ambient_amplitude = 8.0;     ///< degC, daily swing around T_mean
    double initial_temperature = 20.0;  ///< degC
    double initial_humidity = 8.0;      ///< g/kg
    int step_seconds = 60;              ///< explicit Euler step
};

namespace twin {

/// Occupancy windows in hours of the day, [start, end).
inline constexpr std::array<std::array<double, 2>, kZones> kOccupancy{{{5.0, 14.0}, {8.5, 18.0}, {15.0, 24.0}}};

inline double occupancy(int zone, double hour_of_day)
{
    const auto& w = kOccupancy[static_cast<std::size_t>(zone)];
    return hour_of_day >= w[0] && hour_of_day < w[1] ? 1.0 : 0.0;
}

inline double solar_shape(double hour_of_day)
{
    return std::max(0.0, std::sin(std::numbers::pi * (hour_of_day - 6.0) / 12.0));
}

inline double ambient_temperature(double mean, double amplitude, double hour_of_day)
{
    return mean + amplitude * std::sin(2.0 * std::numbers::pi * (hour_of_day - 9.0) / 24.0);
}

/// State derivatives (dT/dt for three zones, then dw/dt), per hour.
inline std::array<double, kChannels> derivatives(const ZoneCoefficients& c, const TwinConstants& k,
                                                 double hour_of_day, const std::array<double, kChannels>& x)
{
    std::array<double, kChannels> dx{};
    const double t_amb = ambient_temperature(c.ambient_mean_temperature, k.ambient_amplitude, hour_of_day);
    const double solar = k.solar_gain * solar_shape(hour_of_day);
    for (int i = 0; i < kZones; ++i) {
        const auto z = static_cast<std::size_t>(i);
        const double occ = occupancy(i, hour_of_day);
        dx[z] = c.envelope[z] * (t_amb - x[z]) + c.heat_gain[z] * occ + solar;
        dx[z + kZones] = c.ventilation * (c.ambient_humidity - x[z + kZones]) + c.moisture_gain[z] * occ;
    }
    return dx;
}

} // namespace twin

/**
 * Integrate the three-zone model with explicit Euler at
 * `constants.step_seconds` and sample every 15 minutes, starting with the
 * initial state at t = 0. No domain check on the coefficients.
 */
inline OutputSeries simulate_zones(const ZoneCoefficients& c, int days, const TwinConstants& constants = {})
{
    if (days < 1) throw PreconditionError("simulate: days must be >= 1");
    if (constants.step_seconds < 1 || (kSampleMinutes * 60) % constants.step_seconds != 0)
        throw ConfigurationError("simulate: step must divide the 15-minute sampling interval");
    const int steps_per_sample = kSampleMinutes * 60 / constants.step_seconds;
    const int samples = days * kSamplesPerDay;
    const double dt_hours = constants.step_seconds / 3600.0;

    std::array<double, kChannels> x{};
    for (int i = 0; i < kZones; ++i) {
        x[static_cast<std::size_t>(i)] = constants.initial_temperature;
        x[static_cast<std::size_t>(i + kZones)] = constants.initial_humidity;
    }

    OutputSeries out;
    out.values.resize(kChannels, samples);
    long long step = 0;
    const long long seconds_per_day = 24LL * 3600LL;
    for (int s = 0; s < samples; ++s) {
        for (int ch = 0; ch < kChannels; ++ch) out.values(ch, s) = x[static_cast<std::size_t>(ch)];
        for (int j = 0; j < steps_per_sample; ++j, ++step) {
            const long long second_of_day = (step * constants.step_seconds) % seconds_per_day;
            const double hour = static_cast<double>(second_of_day) / 3600.0;
            const auto dx = twin::derivatives(c, constants, hour, x);
            for (std::size_t ch = 0; ch < x.size(); ++ch) x[ch] += dt_hours * dx[ch];
        }
        for (double v : x)
            if (!std::isfinite(v)) {
                const double t = static_cast<double>(step * constants.step_seconds) / 3600.0;
                throw SimulationError("twin state became non-finite at t = " + std::to_string(t) + " h", t);
            }
    }
    return out;
}

/// The stand-in digital twin: parameters must lie in their search intervals.
inline OutputSeries simulate_twin(const TwinParameters& params, int days, const TwinConstants& constants = {})
{
    params.validate();
    return simulate_zones(params.coefficients(), days, constants);
}

} // namespace anpbbo::objectives
