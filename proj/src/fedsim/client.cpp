#include "fmtl/fedsim/client.hpp"

#include <cmath>
#include <numeric>

#include "fmtl/core/errors.hpp"

namespace fmtl {

void optimizer_step(ModelParams& params, OptimizerState& state, const std::map<std::string, Matrix>& grads,
                    const OptimizerConfig& cfg, double lr) {
  if (cfg.kind == OptimizerKind::sgd) {
    for (Param& p : params.params) {
      const Matrix& g = grads.at(p.name);
      require_same_shape(p.value, g, "optimizer_step");
      auto w = p.value.data();
      auto gd = g.data();
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gd[i];
    }
    ++state.step;
    return;
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (Param& p : params.params) {
    const Matrix& g = grads.at(p.name);
    require_same_shape(p.value, g, "optimizer_step");
    auto [mit, m_new] = state.m.try_emplace(p.name, g.rows(), g.cols());
    auto [vit, v_new] = state.v.try_emplace(p.name, g.rows(), g.cols());
    (void)m_new;
    (void)v_new;
    auto m = mit->second.data();
    auto v = vit->second.data();
    auto w = p.value.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gd[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gd[i] * gd[i];
      w[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.eps);
    }
  }
}

namespace {

MtlConfig without_head_terms(MtlConfig mtl) {
  mtl.lambda1 = 0.0;
  mtl.lambda_chi.phi_task = 0.0;
  return mtl;
}

// Mean masked loss over the batch, recorded on the tape.
Var batch_data_loss(Tape& tape, const ModelVars& vars, const ModelParams& params,
                    const std::vector<const GraphSample*>& batch, const std::set<std::size_t>& observed,
                    TaskType task_type, DropoutStream* dropout) {
  Var total = tape.constant(Matrix(1, 1));
  std::size_t counted = 0;
  for (const GraphSample* s : batch) {
    const Targets t = gather_targets(*s, params.task_columns, observed);
    if (!t.any()) continue;
    const Var pred = classifier_forward(tape, vars, params, *s, dropout);
    total = ad::add(total, masked_loss(pred, t, task_type));
    ++counted;
  }
  if (counted == 0) throw TrainingStepError("batch has no observed label");
  return ad::scale(total, 1.0 / static_cast<double>(counted));
}

double head_regularizer_value(const ModelParams& params, const std::vector<NeighborOmega>& omegas,
                              const MtlConfig& mtl) {
  const Matrix& phi = params.task_head();
  double v = 0.0;
  if (mtl.lambda1 != 0.0) {
    std::vector<std::size_t> ns;
    for (const auto& o : omegas) ns.push_back(o.n_samples);
    const std::vector<double> w = neighborhood_weights(ns, mtl);
    for (std::size_t i = 0; i < omegas.size(); ++i) {
      const Matrix c = aligned_inverse(omegas[i].omega, params.task_columns, mtl.epsilon_psd);
      v += 0.5 * mtl.lambda1 * w[i] * trace(matmul(matmul(phi, c), transpose(phi)));
    }
  }
  v += 0.5 * mtl.lambda_chi.phi_task * frobenius_sq(phi);
  return v;
}

}  // namespace

ObjectiveGradient objective_gradient(const ModelParams& params, const std::vector<const GraphSample*>& batch,
                                     const std::set<std::size_t>& observed, TaskType task_type,
                                     const std::vector<NeighborOmega>& omegas, const MtlConfig& mtl,
                                     DropoutStream* dropout) {
  Tape tape;
  const ModelVars vars = register_params(tape, params);
  const Var data = batch_data_loss(tape, vars, params, batch, observed, task_type, dropout);
  const Var obj = ad::add(data, neighborhood_regularizer(vars, params, {}, without_head_terms(mtl)));
  Gradients g = backward(tape, obj);
  ObjectiveGradient out;
  out.data_loss = data.value()(0, 0);
  out.grads = g.all();
  Matrix& head = out.grads.at(ModelParams::kTaskHead);
  head = grad_task_head(head, params.task_head(), params.task_columns, omegas, mtl);
  out.objective = obj.value()(0, 0) + head_regularizer_value(params, omegas, mtl);
  return out;
}

ObjectiveGradient objective_gradient_on_tape(const ModelParams& params, const std::vector<const GraphSample*>& batch,
                                             const std::set<std::size_t>& observed, TaskType task_type,
                                             const std::vector<NeighborOmega>& omegas, const MtlConfig& mtl) {
  Tape tape;
  const ModelVars vars = register_params(tape, params);
  const Var data = batch_data_loss(tape, vars, params, batch, observed, task_type, nullptr);
  const Var obj = ad::add(data, neighborhood_regularizer(vars, params, omegas, mtl));
  Gradients g = backward(tape, obj);
  ObjectiveGradient out;
  out.data_loss = data.value()(0, 0);
  out.objective = obj.value()(0, 0);
  out.grads = g.all();
  return out;
}

namespace {

std::vector<const GraphSample*> labeled_samples(const ClientState& state) {
  std::vector<const GraphSample*> out;
  for (const auto& s : state.dataset.samples) {
    if (gather_targets(s, state.params.task_columns, state.dataset.task_set).any()) out.push_back(&s);
  }
  return out;
}

}  // namespace

double local_train(ClientState& state, const std::vector<NeighborOmega>& others, const SimConfig& cfg,
                   TaskType task_type, std::size_t round, bool mtl_enabled) {
  MtlConfig mtl = cfg.mtl;
  if (!mtl_enabled) mtl.lambda1 = 0.0;
  const std::vector<const GraphSample*> pool = labeled_samples(state);
  if (pool.empty()) {
    throw TrainingStepError("client " + std::to_string(state.client_id) + " has no labeled training sample");
  }
  const std::size_t n_own = state.dataset.samples.size();
  double last_epoch_loss = 0.0;
  for (std::size_t epoch = 0; epoch < cfg.local_epochs; ++epoch) {
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(cfg.seed, state.client_id, round, Purpose::shuffle, epoch);
    shuffle_rng.shuffle(order);
    Rng drop_rng(cfg.seed, state.client_id, round, Purpose::dropout, epoch);
    DropoutStream drop{&drop_rng, cfg.model.dropout};
    DropoutStream* dropout = cfg.model.dropout > 0.0 ? &drop : nullptr;

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      std::vector<const GraphSample*> batch;
      for (std::size_t i = start; i < stop; ++i) batch.push_back(pool[order[i]]);
      std::vector<NeighborOmega> omegas = others;
      omegas.push_back(NeighborOmega{state.omega, n_own});
      const ObjectiveGradient g =
          objective_gradient(state.params, batch, state.dataset.task_set, task_type, omegas, mtl, dropout);
      if (!std::isfinite(g.objective) || g.objective > 1e6) {
        throw DivergedError(round, "client " + std::to_string(state.client_id) + " objective " +
                                       std::to_string(g.objective));
      }
      optimizer_step(state.params, state.opt, g.grads, cfg.optimizer, cfg.lr);
      loss_sum += g.data_loss;
      ++batches;
    }
    for (const Param& p : state.params.params) {
      if (!all_finite(p.value)) {
        throw DivergedError(round, "client " + std::to_string(state.client_id) + " parameter " + p.name +
                                       " is not finite");
      }
    }
    if (mtl_enabled) state.omega = omega_closed_form(state.params.task_head(), state.params.task_columns);
    last_epoch_loss = loss_sum / static_cast<double>(batches);
  }
  return last_epoch_loss;
}

double training_loss(const ClientState& state, TaskType task_type) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& s : state.dataset.samples) {
    const Targets t = gather_targets(s, state.params.task_columns, state.dataset.task_set);
    if (!t.any()) continue;
    sum += masked_loss_value(predict(state.params, s), t, task_type);
    ++n;
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

}  // namespace fmtl
