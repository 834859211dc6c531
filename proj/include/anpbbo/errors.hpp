#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anpbbo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes, dimensions or settings that cannot work together.
class ConfigurationError : public Error {
public:
    using Error::Error;
};

/// An operation was called outside of its documented domain.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// A learned quantity broke one of its structural guarantees (e.g. a
/// standard deviation that is not strictly positive).
class ModelInvariantError : public Error {
public:
    using Error::Error;
};

/// Raised while fitting the surrogate. Carries the name of the offending
/// tensor when the failure comes from a gradient, and the step index when
/// it comes from a training loop.
class TrainingError : public Error {
public:
    TrainingError(const std::string& what, std::string tensor = {}, std::size_t step = npos)
        : Error(what), tensor_(std::move(tensor)), step_(step) {}

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    const std::string& tensor() const noexcept { return tensor_; }
    std::size_t step() const noexcept { return step_; }

private:
    std::string tensor_;
    std::size_t step_;
};

/// Non-finite state while integrating the thermal twin.
class SimulationError : public Error {
public:
    SimulationError(const std::string& what, double time_hours)
        : Error(what), time_hours_(time_hours) {}

    double time_hours() const noexcept { return time_hours_; }

private:
    double time_hours_;
};

/// Rejection sampling could not find enough points outside the exclusion
/// balls: the balls cover (almost) the whole search box.
class DomainCoveredError : public Error {
public:
    using Error::Error;
};

} // namespace anpbbo
