#pragma once

#include <stdexcept>
#include <string>

namespace mdr {

// Invalid chart, ring or run configuration.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An operation was called outside its domain.
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A coefficient that had to be divisible by p was not. Checks catch this and
// turn it into a failed outcome with a witness.
struct DivisibilityViolation : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A map that should be a chain map, or a sequence that should be exact, is not.
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A form left the degree window in which Frobenius can be applied safely.
struct WindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mdr
