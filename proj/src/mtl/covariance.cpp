#include "fmtl/mtl/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fmtl/core/errors.hpp"
#include "fmtl/tensor/eig.hpp"

namespace fmtl {

namespace {

void require_distinct(const std::vector<std::size_t>& tasks, const char* who) {
  std::set<std::size_t> seen(tasks.begin(), tasks.end());
  if (seen.size() != tasks.size()) throw ValidationError(std::string(who) + ": duplicate task id in task map");
}

}  // namespace

TaskCovariance TaskCovariance::uniform(std::vector<std::size_t> tasks) {
  const std::size_t s = tasks.size();
  if (s == 0) throw ValidationError("TaskCovariance: empty task set");
  Matrix om = Matrix::identity(s);
  om *= 1.0 / static_cast<double>(s);
  return TaskCovariance{std::move(om), std::move(tasks)};
}

void validate_covariance(const TaskCovariance& c) {
  const std::size_t s = c.task_index_map.size();
  if (c.omega.rows() != s || c.omega.cols() != s) {
    throw ValidationError("covariance: omega " + c.omega.shape_string() + " does not match " + std::to_string(s) +
                          " tasks");
  }
  require_distinct(c.task_index_map, "covariance");
  if (!all_finite(c.omega)) throw ValidationError("covariance: non-finite entry");
  if (!is_symmetric(c.omega, 1e-10)) throw ValidationError("covariance: not symmetric");
  if (std::abs(trace(c.omega) - 1.0) > 1e-10) throw ValidationError("covariance: trace is not 1");
  const SymEig e = sym_eig(c.omega);
  if (e.values.back() < -1e-10) throw ValidationError("covariance: not positive semidefinite");
}

Matrix psd_sqrt(const Matrix& a) {
  const SymEig e = sym_eig(a);
  const double scale = std::max(1.0, std::abs(e.values.front()));
  if (e.values.back() < -1e-8 * scale) throw ValidationError("psd_sqrt: matrix is not positive semidefinite");
  Matrix r = spectral_apply(e, [](double l) { return std::sqrt(std::max(l, 0.0)); });
  return symmetrize(r);
}

TaskCovariance omega_closed_form(const Matrix& phi, const std::vector<std::size_t>& tasks) {
  if (phi.cols() != tasks.size()) {
    throw ShapeError("omega_closed_form: " + std::to_string(phi.cols()) + " columns vs " +
                     std::to_string(tasks.size()) + " tasks");
  }
  require_distinct(tasks, "omega_closed_form");
  if (!all_finite(phi)) throw NumericError("omega_closed_form: non-finite task head");
  Matrix s = psd_sqrt(symmetrize(matmul(transpose(phi), phi)));
  const double tr = trace(s);
  if (!(tr > 1e-300)) throw DegenerateInputError("omega_closed_form: task head is zero");
  s *= 1.0 / tr;
  s *= 1.0 / trace(s);
  return TaskCovariance{std::move(s), tasks};
}

Matrix f_align(const TaskCovariance& local, std::size_t global_task_count) {
  const auto& map = local.task_index_map;
  require_distinct(map, "f_align");
  if (local.omega.rows() != map.size() || local.omega.cols() != map.size()) {
    throw ShapeError("f_align: omega " + local.omega.shape_string() + " vs " + std::to_string(map.size()) + " tasks");
  }
  Matrix g(global_task_count, global_task_count);
  for (std::size_t i = 0; i < map.size(); ++i) {
    if (map[i] >= global_task_count) throw ValidationError("f_align: task id out of range");
    for (std::size_t j = 0; j < map.size(); ++j) g(map[i], map[j]) = local.omega(i, j);
  }
  return g;
}

Matrix f_extract(const Matrix& aligned, const std::vector<std::size_t>& tasks) {
  require_distinct(tasks, "f_extract");
  Matrix out(tasks.size(), tasks.size());
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (tasks[i] >= aligned.rows() || tasks[i] >= aligned.cols()) {
      throw ValidationError("f_extract: task id out of range");
    }
    for (std::size_t j = 0; j < tasks.size(); ++j) out(i, j) = aligned(tasks[i], tasks[j]);
  }
  return out;
}

Matrix regularized_inverse(const Matrix& omega, double eps) {
  const SymEig e = sym_eig(omega);
  if (e.values.back() + eps <= 0.0) throw ValidationError("regularized_inverse: matrix is not positive definite");
  return symmetrize(spectral_apply(e, [eps](double l) { return 1.0 / (l + eps); }));
}

Matrix aligned_inverse(const TaskCovariance& c, const std::vector<std::size_t>& tasks, double eps) {
  require_distinct(tasks, "aligned_inverse");
  const auto& map = c.task_index_map;
  if (c.omega.rows() != map.size() || c.omega.cols() != map.size()) {
    throw AlignmentError("aligned_inverse: omega " + c.omega.shape_string() + " does not match its task map");
  }
  // Positions shared by both maps: (index into tasks, index into map).
  std::vector<std::pair<std::size_t, std::size_t>> shared;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    const auto it = std::find(map.begin(), map.end(), tasks[i]);
    if (it != map.end()) shared.emplace_back(i, static_cast<std::size_t>(it - map.begin()));
  }
  if (shared.empty()) throw AlignmentError("aligned_inverse: covariance shares no task with the head");
  Matrix sub(shared.size(), shared.size());
  for (std::size_t a = 0; a < shared.size(); ++a) {
    for (std::size_t b = 0; b < shared.size(); ++b) sub(a, b) = c.omega(shared[a].second, shared[b].second);
  }
  const Matrix inv = regularized_inverse(symmetrize(sub), eps);
  Matrix out(tasks.size(), tasks.size());
  for (std::size_t a = 0; a < shared.size(); ++a) {
    for (std::size_t b = 0; b < shared.size(); ++b) out(shared[a].first, shared[b].first) = inv(a, b);
  }
  return out;
}

Matrix project_covariance(const Matrix& a, double eps) {
  if (a.rows() != a.cols() || a.rows() == 0) throw ShapeError("project_covariance: need a square matrix");
  if (!all_finite(a)) throw NumericError("project_covariance: non-finite entry");
  const SymEig e = sym_eig(symmetrize(a));
  Matrix p = symmetrize(spectral_apply(e, [eps](double l) { return std::max(l, eps); }));
  const double tr = trace(p);
  if (!(tr > 0.0)) throw NumericError("project_covariance: zero trace after clamping");
  p *= 1.0 / tr;
  return p;
}

}  // namespace fmtl
