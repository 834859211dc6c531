#pragma once

#include <cmath>

#include "anpbbo/errors.hpp"

namespace anpbbo::objectives {

/// J(theta) = sin(20 theta) + (10 theta / 3)^2 - 10 theta on [0, 1]. Its
/// global minimizer (the maximizer of -J) is near theta = 0.5445.
inline double exemplar_1d(double theta)
{
    if (!(theta >= 0.0 && theta <= 1.0)) throw PreconditionError("exemplar_1d: theta must lie in [0, 1]");
    const double scaled = 10.0 * theta / 3.0;
    return std::sin(20.0 * theta) + scaled * scaled - 10.0 * theta;
}

inline constexpr double kExemplarOptimum = 0.5445;

} // namespace anpbbo::objectives
