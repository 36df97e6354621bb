#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace kdvist {

// Scattering and kernel work runs in extended precision; x87 long double
// buys three extra digits over double at a modest cost.
using Real = long double;
using Complex = std::complex<Real>;

inline constexpr Real kPi = 3.141592653589793238462643383279502884L;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, invalid parameters. Maps to exit code 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Anything that went wrong while computing. Maps to exit code 1.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace kdvist
