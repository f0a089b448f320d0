#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fmtl/fedsim/simulator.hpp"

namespace fmtl {

struct BoundInputs {
  double eta = 0.0;
  double L = 1.0;
  double tau = 1.0;
  double zeta = 0.0;
  double sigma_sq = 1.0;
  double K = 1.0;
  double T = 1.0;
  double F_init = 0.0;
  double F_inf = 0.0;
  double beta = 0.0;  // variance slope; carried, not used by the bound
};

// Throws InputError on violated ranges (eta, L, T, K > 0, sigma_sq >= 0,
// 0 <= zeta <= 1, tau >= 1, F_init >= F_inf).
void validate_bound_inputs(const BoundInputs& in);

struct LrCondition {
  bool feasible = false;
  double lhs = 0.0;    // NaN when undefined
  std::string reason;  // empty when the condition is well defined
};

// eta L + eta^2 L^2 tau^2 / (1 - zeta) * (2 zeta^2/(1+zeta) + 2 zeta/(1-zeta) + (tau-1)/tau) <= 1.
LrCondition lr_condition(const BoundInputs& in);

struct BoundValue {
  bool defined = false;
  double value = 0.0;
  double optimization_term = 0.0;  // 2 (F_init - F_inf) / (eta T)
  double noise_term = 0.0;         // eta L sigma^2 / K
  double network_term = 0.0;       // eta^2 L^2 sigma^2 ((1+zeta^2)/(1-zeta^2) tau - 1)
  std::string reason;
};

// Upper bound on the average squared gradient norm of the averaged model.
// Evaluated even when the learning-rate condition fails (with a warning).
BoundValue convergence_bound(const BoundInputs& in);

struct TraceReport {
  double empirical_mean = 0.0;
  std::size_t rounds = 0;
  BoundValue bound;
  LrCondition condition;
  bool violated = false;  // empirical mean above a defined bound
};

// Compares the mean of a gradient-norm trace with the bound. Throws
// InputError when the trace is empty or contains non-finite entries.
TraceReport compare_trace(const std::vector<double>& grad_norm_sq, const BoundInputs& in);
TraceReport compare_trace(const std::vector<MetricsRecord>& records, const BoundInputs& in);

// Heuristic smoothness estimate: the largest |grad f(a) - grad f(b)| / |a - b|
// over random perturbation pairs around the clients' current models.
double estimate_lipschitz(const Simulator& sim, std::size_t pairs, double radius, std::uint64_t seed);

// Heuristic variance estimate: mean over clients of the variance of
// single-sample gradients around their full-data gradient.
double estimate_gradient_variance(const Simulator& sim);

}  // namespace fmtl
