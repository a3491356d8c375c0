#pragma once

#include <stdexcept>
#include <string>

namespace pam {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDimension : Error {
    using Error::Error;
};
struct InvalidKernel : Error {
    using Error::Error;
};
struct RecurrentKernel : Error {
    using Error::Error;
};
struct NotStronglyTransient : Error {
    using Error::Error;
};
struct NonConvergedQuadrature : Error {
    using Error::Error;
};
struct EmptyBox : Error {
    using Error::Error;
};
struct NonConvergent : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct DimensionTooLow : Error {
    using Error::Error;
};
struct NonPositiveResult : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};
struct ReproducibilityError : Error {
    using Error::Error;
};
// Finite-t exact statements (moment sandwich, Hoelder monotonicity) fail hard.
struct PredicateHardFailure : Error {
    using Error::Error;
};

}  // namespace pam
