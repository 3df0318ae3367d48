#pragma once

#include <stdexcept>
#include <string>

namespace wdro {

/// Caller passed an argument outside the operation's domain.
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Model parameters produce an invalid object (e.g. a non-PSD covariance).
struct model_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical data became unusable (non-finite integrand values).
struct data_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Configuration is inconsistent (bad config file, CFL violation, ...).
struct config_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool cond, const std::string& what)
{
    if (!cond) {
        throw input_error(what);
    }
}

} // namespace detail

} // namespace wdro
