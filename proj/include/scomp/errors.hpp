#pragma once

#include <stdexcept>
#include <string>

namespace scomp {

// Bad configuration: invalid dimensions, schedules, key files. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad input data: parse failures, corrupt containers, shape mismatches. CLI exit code 3.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite values produced at runtime. CLI exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace scomp
