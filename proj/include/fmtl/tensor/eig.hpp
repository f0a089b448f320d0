#pragma once

#include <functional>
#include <vector>

#include "fmtl/tensor/matrix.hpp"

namespace fmtl {

struct SymEig {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
};

struct JacobiOptions {
  double symmetry_tol = 1e-10;
  // Off-diagonal Frobenius norm threshold, scaled by max(1, ||a||_F).
  double off_tol = 1e-12;
  int max_sweeps = 100;
};

// Cyclic Jacobi eigen-decomposition of a symmetric matrix. Eigenvector signs
// are fixed so the first component with magnitude > 1e-12 is positive.
// Throws ValidationError for non-symmetric input, NumericError when the sweep
// budget runs out.
SymEig sym_eig(const Matrix& a, const JacobiOptions& opts = {});

// V * diag(f(lambda)) * V^T.
Matrix spectral_apply(const SymEig& eig, const std::function<double(double)>& f);

}  // namespace fmtl
