#pragma once

#include <stdexcept>
#include <string>

namespace fairpred {

// Bad configuration: unknown keys, out-of-range values, names that do not
// exist in the data. Maps to CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data: broken XML/CSV, bad timestamps,
// schema violations. Maps to CLI exit code 2.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Optimization failure: non-finite loss or gradients. Maps to CLI exit code 3.
class TrainingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fairpred
