#include "fmtl/mtl/regularizer.hpp"

#include <cmath>

#include "fmtl/core/errors.hpp"

namespace fmtl {

double GroupWeights::operator[](ParamGroup g) const {
  switch (g) {
    case ParamGroup::theta: return theta;
    case ParamGroup::psi: return psi;
    case ParamGroup::phi_pool: return phi_pool;
    case ParamGroup::phi_task: return phi_task;
  }
  return 0.0;
}

void validate_mtl_config(const MtlConfig& cfg) {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0) throw ConfigError(std::string("mtl.") + name + " must be finite and >= 0");
  };
  check(cfg.lambda1, "lambda1");
  check(cfg.lambda_chi.theta, "lambda_theta");
  check(cfg.lambda_chi.psi, "lambda_psi");
  check(cfg.lambda_chi.phi_pool, "lambda_pool");
  check(cfg.lambda_chi.phi_task, "lambda_task");
  if (!std::isfinite(cfg.omega_lr) || cfg.omega_lr <= 0.0) throw ConfigError("mtl.omega_lr must be > 0");
  if (!std::isfinite(cfg.epsilon_psd) || cfg.epsilon_psd <= 0.0) throw ConfigError("mtl.epsilon_psd must be > 0");
}

std::vector<double> neighborhood_weights(const std::vector<std::size_t>& n_samples, const MtlConfig& cfg) {
  if (n_samples.empty()) throw TopologyError("empty neighborhood");
  std::vector<double> w(n_samples.size());
  double total = 0.0;
  for (std::size_t i = 0; i < n_samples.size(); ++i) {
    if (n_samples[i] == 0) throw ValidationError("neighborhood member with no training samples");
    w[i] = 1.0 / static_cast<double>(n_samples[i]);
    total += w[i];
  }
  if (!cfg.literal_eq11) {
    for (double& x : w) x /= total;
  }
  return w;
}

namespace {

Var frobenius_terms(const ModelVars& vars, const ModelParams& params, const MtlConfig& cfg, Var acc) {
  for (const Param& p : params.params) {
    const double lam = cfg.lambda_chi[p.group];
    if (lam == 0.0) continue;
    acc = ad::add(acc, ad::scale(ad::frobenius_sq(vars.at(p.name)), 0.5 * lam));
  }
  return acc;
}

}  // namespace

Var regularizer_value(const ModelVars& vars, const ModelParams& params, const TaskCovariance& omega,
                      const MtlConfig& cfg) {
  validate_covariance(omega);
  const Var phi = vars.at(ModelParams::kTaskHead);
  Tape& tape = *phi.tape();
  Var acc = tape.constant(Matrix(1, 1));
  if (cfg.lambda1 != 0.0) {
    const Matrix c = aligned_inverse(omega, params.task_columns, cfg.epsilon_psd);
    acc = ad::add(acc, ad::scale(ad::trace_quadratic(phi, c), 0.5 * cfg.lambda1));
  }
  return frobenius_terms(vars, params, cfg, acc);
}

Var neighborhood_regularizer(const ModelVars& vars, const ModelParams& params,
                             const std::vector<NeighborOmega>& neighborhood, const MtlConfig& cfg) {
  const Var phi = vars.at(ModelParams::kTaskHead);
  Tape& tape = *phi.tape();
  Var acc = tape.constant(Matrix(1, 1));
  if (cfg.lambda1 != 0.0) {
    std::vector<std::size_t> ns;
    for (const auto& n : neighborhood) ns.push_back(n.n_samples);
    const std::vector<double> w = neighborhood_weights(ns, cfg);
    for (std::size_t i = 0; i < neighborhood.size(); ++i) {
      const Matrix c = aligned_inverse(neighborhood[i].omega, params.task_columns, cfg.epsilon_psd);
      acc = ad::add(acc, ad::scale(ad::trace_quadratic(phi, c), 0.5 * cfg.lambda1 * w[i]));
    }
  }
  return frobenius_terms(vars, params, cfg, acc);
}

Matrix grad_task_head(const Matrix& dl_dphi, const Matrix& phi, const std::vector<std::size_t>& columns,
                      const std::vector<NeighborOmega>& neighborhood, const MtlConfig& cfg) {
  require_same_shape(dl_dphi, phi, "grad_task_head");
  if (phi.cols() != columns.size()) throw AlignmentError("grad_task_head: head columns do not match task map");
  Matrix g = dl_dphi;
  if (cfg.lambda1 != 0.0) {
    std::vector<std::size_t> ns;
    for (const auto& n : neighborhood) ns.push_back(n.n_samples);
    const std::vector<double> w = neighborhood_weights(ns, cfg);
    Matrix cw(columns.size(), columns.size());
    for (std::size_t i = 0; i < neighborhood.size(); ++i) {
      Matrix c = aligned_inverse(neighborhood[i].omega, columns, cfg.epsilon_psd);
      c *= w[i];
      cw += c;
    }
    Matrix reg = matmul(phi, cw);
    reg *= cfg.lambda1;
    g += reg;
  }
  if (cfg.lambda_chi.phi_task != 0.0) {
    Matrix reg = phi;
    reg *= cfg.lambda_chi.phi_task;
    g += reg;
  }
  return g;
}

TaskCovariance omega_decentralized_update(const TaskCovariance& own, std::size_t own_samples,
                                          const std::vector<NeighborOmega>& neighbors, const Matrix& phi_union,
                                          std::size_t global_task_count, const MtlConfig& cfg) {
  const std::vector<std::size_t>& tasks = own.task_index_map;
  if (tasks.empty()) throw TopologyError("omega update: empty neighborhood task set");
  const TaskCovariance cf = omega_closed_form(phi_union, tasks);

  std::vector<std::size_t> ns;
  for (const auto& n : neighbors) ns.push_back(n.n_samples);
  ns.push_back(own_samples);
  const std::vector<double> w = neighborhood_weights(ns, cfg);

  Matrix acc(global_task_count, global_task_count);
  for (std::size_t i = 0; i < neighbors.size(); ++i) {
    Matrix a = f_align(neighbors[i].omega, global_task_count);
    a *= w[i];
    acc += a;
  }
  Matrix self = f_align(cf, global_task_count);
  self *= cfg.literal_eq11 ? 1.0 : w.back();
  acc += self;

  double scale = cfg.omega_lr;
  if (cfg.literal_eq11) scale /= static_cast<double>(neighbors.size() + 1);
  acc *= scale;
  return TaskCovariance{project_covariance(f_extract(acc, tasks), cfg.epsilon_psd), tasks};
}

}  // namespace fmtl
