#pragma once

#include <stdexcept>
#include <string>

namespace peakshift {

// Input does not match the expected file layout (missing header, unknown column).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Configuration is malformed or internally inconsistent.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Well-formed input that cannot support the requested computation.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A fit or resampling procedure could not produce a usable result.
class FitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace peakshift
