#ifndef ISPEC_ERRORS_HPP
#define ISPEC_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ispec {

// Malformed arguments: unknown vertices, overlapping sets, bad files.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Singular covariance, constant columns, and similar data problems.
struct DegenerateDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A conditional was requested where the conditioning event has probability 0.
struct UndefinedConditionalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raised inside the identification routines; caught at the cidp boundary.
struct NotIdentifiableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Orientation rules tried to overwrite a settled endpoint mark.
struct FciInstabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The search space is larger than the configured budget. `found` counts the
// stable candidates collected before giving up.
struct BudgetExceededError : std::runtime_error {
    BudgetExceededError(const std::string& what, std::size_t found_) : std::runtime_error(what), found(found_) {}
    std::size_t found;
};

struct InternalError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace ispec

#endif  // ISPEC_ERRORS_HPP
