#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "fmtl/fedsim/config.hpp"
#include "fmtl/gnn/layers.hpp"
#include "fmtl/mtl/loss.hpp"

namespace fmtl {

// Per-parameter optimizer moments, local to a client and never exchanged.
struct OptimizerState {
  std::map<std::string, Matrix> m;
  std::map<std::string, Matrix> v;
  std::size_t step = 0;
};

struct ClientState {
  std::size_t client_id = 0;
  ClientDataset dataset;  // training samples, already masked
  ModelParams params;     // task head spans the neighborhood task union
  TaskCovariance omega;   // over params.task_columns
  OptimizerState opt;
  std::vector<std::size_t> neighborhood;  // client ids including self, ascending
};

// Applies one optimizer step in place; gradients are keyed by parameter name.
void optimizer_step(ModelParams& params, OptimizerState& state, const std::map<std::string, Matrix>& grads,
                    const OptimizerConfig& cfg, double lr);

struct ObjectiveGradient {
  double data_loss = 0.0;  // mean masked loss over the batch
  double objective = 0.0;  // data loss plus regularizer
  std::map<std::string, Matrix> grads;
};

// Gradient of the local objective on a batch: mean masked loss plus the
// Frobenius terms on the tape, with the task-head gradient completed by
// grad_task_head over `omegas` (the client's neighborhood, self included).
// Throws TrainingStepError when no sample in the batch carries an observed
// label.
ObjectiveGradient objective_gradient(const ModelParams& params, const std::vector<const GraphSample*>& batch,
                                     const std::set<std::size_t>& observed, TaskType task_type,
                                     const std::vector<NeighborOmega>& omegas, const MtlConfig& mtl,
                                     DropoutStream* dropout);

// Same objective evaluated entirely on the tape (trace term included), for
// gradient checks.
ObjectiveGradient objective_gradient_on_tape(const ModelParams& params, const std::vector<const GraphSample*>& batch,
                                             const std::set<std::size_t>& observed, TaskType task_type,
                                             const std::vector<NeighborOmega>& omegas, const MtlConfig& mtl);

// E local passes over the client's data with minibatches drawn in a seeded
// order. `others` are the neighbors' covariances snapshotted at the start of
// the round; the client's own covariance is refreshed to the closed form of
// its head after every epoch when `mtl_enabled`. Returns the mean batch data
// loss of the last epoch. Throws DivergedError on a non-finite or exploding
// objective.
double local_train(ClientState& state, const std::vector<NeighborOmega>& others, const SimConfig& cfg,
                   TaskType task_type, std::size_t round, bool mtl_enabled);

// Mean masked loss over the client's full training set with no dropout.
double training_loss(const ClientState& state, TaskType task_type);

}  // namespace fmtl
