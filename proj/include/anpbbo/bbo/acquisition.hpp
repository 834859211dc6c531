#pragma once

#include "anpbbo/anp/model.hpp"
#include "anpbbo/bbo/domain.hpp"

namespace anpbbo::bbo {

/// Upper confidence bound mu + beta * sigma on the maximization-form
/// objective.
inline double ucb(double mean, double std_dev, double beta) { return mean + beta * std_dev; }

inline Vector ucb(const anp::AnpPrediction& pred, double beta)
{
    return pred.mean + beta * pred.std;
}

/// Index of the largest entry; the lowest index wins ties.
inline Eigen::Index argmax_first(const Vector& v)
{
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v(i) > v(best)) best = i;
    return best;
}

} // namespace anpbbo::bbo
