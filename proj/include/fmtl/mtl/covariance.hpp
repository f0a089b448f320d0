#pragma once

#include <cstddef>
#include <vector>

#include "fmtl/tensor/matrix.hpp"

namespace fmtl {

// Task covariance over an ordered list of global task ids. Row/column i of
// omega refers to task_index_map[i].
struct TaskCovariance {
  Matrix omega;
  std::vector<std::size_t> task_index_map;

  // I / S over the given tasks.
  static TaskCovariance uniform(std::vector<std::size_t> tasks);
};

// Symmetric within 1e-10, min eigenvalue >= -1e-10, unit trace within 1e-10
// and a distinct task map of matching size; throws ValidationError.
void validate_covariance(const TaskCovariance& c);

// Principal square root V max(lambda,0)^{1/2} V^T of a symmetric PSD matrix.
Matrix psd_sqrt(const Matrix& a);

// (Phi^T Phi)^{1/2} / Tr((Phi^T Phi)^{1/2}). Columns of phi correspond to
// `tasks`. Throws DegenerateInputError when phi is (numerically) zero.
TaskCovariance omega_closed_form(const Matrix& phi, const std::vector<std::size_t>& tasks);

// Embeds a covariance into S_global x S_global at its global positions.
Matrix f_align(const TaskCovariance& local, std::size_t global_task_count);
// Inverse of f_align: the submatrix of an aligned matrix over `tasks`.
Matrix f_extract(const Matrix& aligned, const std::vector<std::size_t>& tasks);

// (omega + eps I)^{-1} for a symmetric PSD omega.
Matrix regularized_inverse(const Matrix& omega, double eps);

// Inverse of `c` re-expressed over `tasks`: entries for tasks that `c` does
// not cover are zero. Throws AlignmentError when the two maps share no task.
Matrix aligned_inverse(const TaskCovariance& c, const std::vector<std::size_t>& tasks, double eps);

// Symmetrize, clamp eigenvalues at eps, renormalize to unit trace.
Matrix project_covariance(const Matrix& a, double eps);

}  // namespace fmtl
