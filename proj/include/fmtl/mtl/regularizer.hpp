#pragma once

#include <cstddef>
#include <vector>

#include "fmtl/gnn/layers.hpp"
#include "fmtl/mtl/covariance.hpp"

namespace fmtl {

struct GroupWeights {
  double theta = 0.0;
  double psi = 0.0;
  double phi_pool = 0.0;
  double phi_task = 0.0;

  double operator[](ParamGroup g) const;
};

struct MtlConfig {
  double lambda1 = 0.001;
  GroupWeights lambda_chi;
  double omega_lr = 1.0;
  double epsilon_psd = 1e-6;
  // Use the raw 1/N_i weights and eta/|M_k| scaling instead of weights
  // normalized over the neighborhood.
  bool literal_eq11 = false;
};

// Throws ConfigError on negative or non-finite weights or omega_lr <= 0.
void validate_mtl_config(const MtlConfig& cfg);

// A neighbor's covariance together with its training-set size N_i.
struct NeighborOmega {
  TaskCovariance omega;
  std::size_t n_samples = 0;
};

// Weight of each neighborhood member: 1/N_i, or 1/N_i normalized to sum to
// one unless cfg.literal_eq11.
std::vector<double> neighborhood_weights(const std::vector<std::size_t>& n_samples, const MtlConfig& cfg);

// 1/2 lambda1 Tr(Phi_task Omega^-1 Phi_task^T) + 1/2 sum_chi lambda_chi |chi|_F^2
// recorded on the tape, with Omega re-expressed over the head's columns.
Var regularizer_value(const ModelVars& vars, const ModelParams& params, const TaskCovariance& omega,
                      const MtlConfig& cfg);

// Neighborhood form used by the local objective:
// 1/2 lambda1 sum_i c_i Tr(Phi Omega_i^-1 Phi^T) + 1/2 sum_chi lambda_chi |chi|_F^2.
Var neighborhood_regularizer(const ModelVars& vars, const ModelParams& params,
                             const std::vector<NeighborOmega>& neighborhood, const MtlConfig& cfg);

// dL/dPhi + lambda1 sum_i c_i Phi Omega_i^-1 + lambda2 Phi, where columns of
// phi are `columns` and each Omega_i is aligned onto them.
Matrix grad_task_head(const Matrix& dl_dphi, const Matrix& phi, const std::vector<std::size_t>& columns,
                      const std::vector<NeighborOmega>& neighborhood, const MtlConfig& cfg);

// One decentralized covariance step for a client: weighted aligned-space
// combination of the neighbors' covariances and the client's own closed-form
// term, scaled by omega_lr and projected back onto the constraint set.
// `neighbors` excludes the client itself.
TaskCovariance omega_decentralized_update(const TaskCovariance& own, std::size_t own_samples,
                                          const std::vector<NeighborOmega>& neighbors, const Matrix& phi_union,
                                          std::size_t global_task_count, const MtlConfig& cfg);

}  // namespace fmtl
