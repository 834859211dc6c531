#pragma once

#include <string>

#include <Eigen/Core>

#include "anpbbo/errors.hpp"

namespace anpbbo::bbo {

using Vector = Eigen::VectorXd;

/// Axis-aligned search box in physical parameter units.
struct SearchDomain {
    Vector lower;
    Vector upper;

    SearchDomain() = default;
    SearchDomain(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

    static SearchDomain unit(Eigen::Index dim) { return {Vector::Zero(dim), Vector::Ones(dim)}; }

    Eigen::Index dim() const { return lower.size(); }

    void validate() const
    {
        if (lower.size() < 1 || lower.size() != upper.size())
            throw ConfigurationError("search domain: bounds must be non-empty and of equal length");
        for (Eigen::Index i = 0; i < lower.size(); ++i)
            if (!(lower(i) < upper(i)))
                throw ConfigurationError("search domain: lower bound not below upper bound in dimension " +
                                         std::to_string(i));
    }

    bool contains(const Vector& theta) const
    {
        if (theta.size() != dim()) return false;
        return ((theta.array() >= lower.array()) && (theta.array() <= upper.array())).all();
    }

    Vector normalize(const Vector& theta) const
    {
        return ((theta - lower).array() / (upper - lower).array()).matrix();
    }

    Vector denormalize(const Vector& unit) const
    {
        Vector theta = lower + (unit.array() * (upper - lower).array()).matrix();
        return theta.cwiseMax(lower).cwiseMin(upper);
    }
};

} // namespace anpbbo::bbo
