#pragma once

#include <stdexcept>
#include <string>

namespace ftf {

// Shape/dimension disagreement between tensors or configured sizes.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid parameter value (non-positive temperature, unknown family, ...).
struct ParamError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Vector too close to zero for a normalized operation.
struct DegenerateVectorError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// API contract violation (non-scalar loss, missing gradients, ...).
struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Inconsistent configuration (adapter count vs stages, overlapping seed ranges, ...).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Dataset or oracle precondition failure. CLI exit code 2.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Numerical failure during training or gradient checking. CLI exit code 3.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Corrupt or unreadable file (bad magic, version, CRC, truncation).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace ftf
