#pragma once

#include <cmath>
#include <functional>
#include <random>

#include "anpbbo/tensor/tape.hpp"

namespace anpbbo::testing {

using tensor::Tensor2;

template <typename Rng>
Tensor2 random_tensor(Eigen::Index rows, Eigen::Index cols, Rng& rng, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> u(lo, hi);
    Tensor2 t(rows, cols);
    for (Eigen::Index i = 0; i < t.size(); ++i) t(i) = u(rng);
    return t;
}

/// Central-difference gradient of `f` at `x`, perturbing x in place.
inline Tensor2 numeric_gradient(const std::function<double()>& f, Tensor2& x, double h = 1e-4)
{
    Tensor2 g(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double keep = x(i);
        x(i) = keep + h;
        const double up = f();
        x(i) = keep - h;
        const double down = f();
        x(i) = keep;
        g(i) = (up - down) / (2.0 * h);
    }
    return g;
}

/// ||a - n|| / max(||a||, ||n||); zero when both are below `floor`.
inline double relative_error(const Tensor2& analytic, const Tensor2& numeric, double floor = 1e-8)
{
    const double scale = std::max(analytic.norm(), numeric.norm());
    if (scale < floor) return 0.0;
    return (analytic - numeric).norm() / scale;
}

} // namespace anpbbo::testing
