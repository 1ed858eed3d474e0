#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qtraj {

using Cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// Structural problems with inputs: dimension mismatches, bad parameters,
// malformed serialized data.
struct StructuralError : std::runtime_error {
  explicit StructuralError(const std::string& what) : std::runtime_error(what) {}
};

// A branch weight fell below the representable floor. The event has
// probability zero under a valid family; we refuse rather than extend.
struct ZeroBranchError : std::runtime_error {
  explicit ZeroBranchError(const std::string& what) : std::runtime_error(what) {}
};

struct NonUniqueFixedPointError : std::runtime_error {
  explicit NonUniqueFixedPointError(const std::string& what) : std::runtime_error(what) {}
};

struct PreconditionError : std::logic_error {
  explicit PreconditionError(const std::string& what) : std::logic_error(what) {}
};

struct NoConvergenceError : std::runtime_error {
  explicit NoConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct SizeLimitError : std::runtime_error {
  explicit SizeLimitError(const std::string& what) : std::runtime_error(what) {}
};

// Largest singular value.
double operator_norm(const Matrix& m);

// Sum of singular values (trace norm).
double trace_norm(const Matrix& m);

// Largest absolute entry.
double sup_norm(const Matrix& m);

}  // namespace qtraj
