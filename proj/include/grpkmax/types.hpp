#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace grpkmax {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Shape mismatch between coefficients, designs, or files.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed input file (CSV or group config).
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values produced by an iterative solve.
struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace grpkmax
