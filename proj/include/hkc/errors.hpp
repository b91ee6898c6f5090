#pragma once

#include <stdexcept>
#include <string>

namespace hkc {

// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

// A multivalued quantity was requested off its declared sheet or sub-patch.
struct BranchError : std::domain_error {
    using std::domain_error::domain_error;
};

// A finite-difference stencil would leave the sampler's patch.
struct PatchError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Curvature formulas need a harmonic potential; raised when the Laplacian is too large.
struct HarmonicityError : std::domain_error {
    using std::domain_error::domain_error;
};

// Positivity of the potential or of a glued form failed; the message names where.
struct PositivityError : std::domain_error {
    using std::domain_error::domain_error;
};

// A two-form expected to be of type (1,1) carries a (2,0) part.
struct TypeMismatchError : std::domain_error {
    using std::domain_error::domain_error;
};

// Cohomological condition required by the potential solve fails.
struct ObstructionError : std::domain_error {
    using std::domain_error::domain_error;
};

// Gibbons-Hawking data expected to be periodic in u3 is not.
struct PeriodicityError : std::domain_error {
    using std::domain_error::domain_error;
};

// Invalid user configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace hkc
