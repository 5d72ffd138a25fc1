#pragma once

#include <stdexcept>
#include <string>

namespace mvdrag {

/// Malformed file layout (missing PLY columns, bad OBJ records, bad JSON shape).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input carrying invalid values (NaN fields, out-of-range indices).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Violated precondition on an argument or configuration.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite value produced during an iterative computation.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, int step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    int step() const noexcept { return step_; }

private:
    int step_;
};

} // namespace mvdrag
