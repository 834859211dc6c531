#pragma once

#include <cmath>
#include <vector>

#include "anpbbo/anp/model.hpp"
#include "anpbbo/bbo/domain.hpp"

namespace anpbbo::bbo {

/// Affine map between the maximization-form objective f = -J and the
/// standardized values the surrogate is trained on.
struct Standardization {
    double mean = 0.0;
    double scale = 1.0;

    double to_standard(double cost) const { return (-cost - mean) / scale; }
    /// Standardized f back to minimization cost.
    double to_cost(double standard) const { return -(standard * scale + mean); }
};

/// Append-only record of evaluated (theta, cost) pairs.
class EvaluationDataset {
public:
    struct Record {
        Vector theta;
        double cost;
    };

    explicit EvaluationDataset(SearchDomain domain) : domain_(std::move(domain)) { domain_.validate(); }

    void append(const Vector& theta, double cost)
    {
        if (!domain_.contains(theta)) throw PreconditionError("dataset: theta outside the search domain");
        if (!std::isfinite(cost)) throw PreconditionError("dataset: cost must be finite");
        records_.push_back({theta, cost});
    }

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }
    const std::vector<Record>& records() const noexcept { return records_; }
    const SearchDomain& domain() const noexcept { return domain_; }

    /// Mean and population standard deviation of -J. A degenerate spread
    /// falls back to scale 1.
    Standardization standardization() const
    {
        Standardization s;
        if (records_.empty()) return s;
        double sum = 0.0;
        for (const auto& r : records_) sum += -r.cost;
        s.mean = sum / static_cast<double>(records_.size());
        double var = 0.0;
        for (const auto& r : records_) var += (-r.cost - s.mean) * (-r.cost - s.mean);
        var /= static_cast<double>(records_.size());
        s.scale = var > 1e-24 ? std::sqrt(var) : 1.0;
        return s;
    }

    /// Whole dataset as a surrogate context: normalized theta, standardized f.
    anp::ContextSet context_set() const
    {
        const auto s = standardization();
        anp::ContextSet ctx;
        ctx.theta.resize(static_cast<Eigen::Index>(records_.size()), domain_.dim());
        ctx.values.resize(static_cast<Eigen::Index>(records_.size()));
        for (std::size_t i = 0; i < records_.size(); ++i) {
            const auto row = static_cast<Eigen::Index>(i);
            ctx.theta.row(row) = domain_.normalize(records_[i].theta).cwiseMax(0.0).cwiseMin(1.0).transpose();
            ctx.values(row) = s.to_standard(records_[i].cost);
        }
        return ctx;
    }

private:
    SearchDomain domain_;
    std::vector<Record> records_;
};

} // namespace anpbbo::bbo
