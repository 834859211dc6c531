#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include <boost/random/sobol.hpp>

#include "anpbbo/bbo/domain.hpp"

namespace anpbbo::bbo {

/// Largest dimension covered by the bundled direction numbers.
inline std::size_t sobol_max_dimension()
{
    return boost::random::default_sobol_table::max_dimension;
}

/// Unit-cube Sobol points (the all-zero point is skipped). With a scramble
/// seed, every coordinate is XOR-ed with a per-dimension random digital
/// shift, which keeps the net structure of the sequence.
inline std::vector<Vector> sobol_unit_points(std::size_t dim, std::size_t n,
                                             std::optional<std::uint64_t> scramble_seed = std::nullopt)
{
    if (n < 1) throw PreconditionError("sobol: need at least one point");
    if (dim < 1 || dim > sobol_max_dimension())
        throw ConfigurationError("sobol: dimension " + std::to_string(dim) + " outside [1, " +
                                 std::to_string(sobol_max_dimension()) + "]");
    std::vector<std::uint64_t> shift(dim, 0);
    if (scramble_seed) {
        std::mt19937_64 rng(*scramble_seed);
        for (auto& s : shift) s = rng();
    }
    boost::random::sobol engine(dim);
    std::vector<Vector> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Vector p(static_cast<Eigen::Index>(dim));
        for (std::size_t d = 0; d < dim; ++d) {
            const std::uint64_t bits = static_cast<std::uint64_t>(engine()) ^ shift[d];
            p(static_cast<Eigen::Index>(d)) = static_cast<double>(bits >> 11) * 0x1p-53;
        }
        out.push_back(std::move(p));
    }
    return out;
}

/// First n Sobol points mapped into the domain box.
inline std::vector<Vector> sobol_init(const SearchDomain& domain, std::size_t n,
                                      std::optional<std::uint64_t> scramble_seed = std::nullopt)
{
    domain.validate();
    auto points = sobol_unit_points(static_cast<std::size_t>(domain.dim()), n, scramble_seed);
    for (auto& p : points) p = domain.denormalize(p);
    return points;
}

} // namespace anpbbo::bbo
