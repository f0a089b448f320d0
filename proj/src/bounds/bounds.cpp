#include "fmtl/bounds/bounds.hpp"

#include <cmath>
#include <limits>

#include "fmtl/core/errors.hpp"
#include "fmtl/core/log.hpp"

namespace fmtl {

void validate_bound_inputs(const BoundInputs& in) {
  auto pos = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("bounds: ") + name + " must be > 0");
  };
  pos(in.eta, "eta");
  pos(in.L, "L");
  pos(in.T, "T");
  pos(in.K, "K");
  if (!(in.sigma_sq >= 0.0) || !std::isfinite(in.sigma_sq)) throw InputError("bounds: sigma_sq must be >= 0");
  if (!(in.zeta >= 0.0 && in.zeta <= 1.0)) throw InputError("bounds: zeta must lie in [0, 1]");
  if (!(in.tau >= 1.0) || !std::isfinite(in.tau)) throw InputError("bounds: tau must be >= 1");
  if (!std::isfinite(in.F_init) || !std::isfinite(in.F_inf) || in.F_init < in.F_inf) {
    throw InputError("bounds: need finite F_init >= F_inf");
  }
}

LrCondition lr_condition(const BoundInputs& in) {
  validate_bound_inputs(in);
  LrCondition out;
  if (in.zeta >= 1.0) {
    out.lhs = std::numeric_limits<double>::quiet_NaN();
    out.reason = "zeta = 1: the topology does not mix, the condition is undefined";
    return out;
  }
  const double z = in.zeta;
  const double el = in.eta * in.L;
  const double bracket = 2.0 * z * z / (1.0 + z) + 2.0 * z / (1.0 - z) + (in.tau - 1.0) / in.tau;
  out.lhs = el + el * el * in.tau * in.tau / (1.0 - z) * bracket;
  out.feasible = out.lhs <= 1.0;
  return out;
}

BoundValue convergence_bound(const BoundInputs& in) {
  validate_bound_inputs(in);
  BoundValue out;
  if (in.zeta >= 1.0) {
    out.value = std::numeric_limits<double>::quiet_NaN();
    out.reason = "zeta = 1: the bound is undefined without mixing";
    return out;
  }
  const LrCondition cond = lr_condition(in);
  if (!cond.feasible) {
    log::warn("bounds: learning-rate condition fails (lhs = " + std::to_string(cond.lhs) + "), bound may not hold");
  }
  const double z2 = in.zeta * in.zeta;
  const double el = in.eta * in.L;
  out.optimization_term = 2.0 * (in.F_init - in.F_inf) / (in.eta * in.T);
  out.noise_term = el * in.sigma_sq / in.K;
  out.network_term = el * el * in.sigma_sq * ((1.0 + z2) / (1.0 - z2) * in.tau - 1.0);
  out.value = out.optimization_term + out.noise_term + out.network_term;
  out.defined = true;
  return out;
}

TraceReport compare_trace(const std::vector<double>& trace, const BoundInputs& in) {
  if (trace.empty()) throw InputError("compare_trace: empty gradient-norm trace");
  TraceReport r;
  double sum = 0.0;
  for (double v : trace) {
    if (!std::isfinite(v)) throw InputError("compare_trace: non-finite gradient norm in trace");
    sum += v;
  }
  r.rounds = trace.size();
  r.empirical_mean = sum / static_cast<double>(trace.size());
  r.condition = lr_condition(in);
  r.bound = convergence_bound(in);
  r.violated = r.bound.defined && r.empirical_mean > r.bound.value;
  return r;
}

TraceReport compare_trace(const std::vector<MetricsRecord>& records, const BoundInputs& in) {
  // The bound averages over t = 1..T, so the initialization record is skipped.
  std::vector<double> trace;
  for (const auto& r : records) {
    if (r.round >= 1) trace.push_back(r.grad_norm_sq);
  }
  return compare_trace(trace, in);
}

namespace {

using Flat = std::vector<double>;

// Full-data gradient of client k's data loss over the shared groups, with
// the shared parameters replaced by `shared`.
Flat shared_gradient(const ClientState& st, const Flat& shared, TaskType tt, const std::vector<const GraphSample*>& batch) {
  ModelParams p = st.params;
  std::size_t pos = 0;
  for (Param& q : p.params) {
    if (!is_shared(q.group)) continue;
    for (double& x : q.value.data()) x = shared[pos++];
  }
  MtlConfig none;
  none.lambda1 = 0.0;
  none.lambda_chi = GroupWeights{};
  const auto g = objective_gradient(p, batch, st.dataset.task_set, tt, {}, none, nullptr).grads;
  Flat out;
  for (const Param& q : p.params) {
    if (!is_shared(q.group)) continue;
    const Matrix& m = g.at(q.name);
    out.insert(out.end(), m.data().begin(), m.data().end());
  }
  return out;
}

Flat flatten_shared(const ModelParams& p) {
  Flat out;
  for (const Param& q : p.params) {
    if (is_shared(q.group)) out.insert(out.end(), q.value.data().begin(), q.value.data().end());
  }
  return out;
}

double dist_sq(const Flat& a, const Flat& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::vector<const GraphSample*> labeled(const ClientState& st) {
  std::vector<const GraphSample*> out;
  for (const auto& s : st.dataset.samples) {
    if (gather_targets(s, st.params.task_columns, st.dataset.task_set).any()) out.push_back(&s);
  }
  return out;
}

}  // namespace

double estimate_lipschitz(const Simulator& sim, std::size_t pairs, double radius, std::uint64_t seed) {
  const auto& states = sim.clients();
  const TaskType tt = sim.manifest().task_type;
  double best = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    const auto batch = labeled(states[k]);
    const Flat base = flatten_shared(states[k].params);
    for (std::size_t p = 0; p < pairs; ++p) {
      Rng rng(seed, k, p, Purpose::estimate);
      Flat a = base, b = base;
      for (std::size_t i = 0; i < base.size(); ++i) {
        a[i] += radius * rng.normal();
        b[i] += radius * rng.normal();
      }
      const double dx = dist_sq(a, b);
      if (dx == 0.0) continue;
      const double dg = dist_sq(shared_gradient(states[k], a, tt, batch), shared_gradient(states[k], b, tt, batch));
      best = std::max(best, std::sqrt(dg / dx));
    }
  }
  return best;
}

double estimate_gradient_variance(const Simulator& sim) {
  const auto& states = sim.clients();
  const TaskType tt = sim.manifest().task_type;
  double total = 0.0;
  for (const auto& st : states) {
    const auto batch = labeled(st);
    const Flat base = flatten_shared(st.params);
    const Flat full = shared_gradient(st, base, tt, batch);
    double var = 0.0;
    for (const GraphSample* s : batch) var += dist_sq(shared_gradient(st, base, tt, {s}), full);
    total += var / static_cast<double>(batch.size());
  }
  return total / static_cast<double>(states.size());
}

}  // namespace fmtl
