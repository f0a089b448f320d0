#pragma once

#include <map>
#include <string>

#include "fmtl/core/rng.hpp"
#include "fmtl/gnn/model.hpp"
#include "fmtl/graph/graph_data.hpp"
#include "fmtl/tensor/ops.hpp"

namespace fmtl {

// Dense operators derived from a graph's (undirected) edge list.
struct GraphOperators {
  Matrix mean_adjacency;  // row i averages the neighbors of i; zero row when isolated
  Matrix attention_mask;  // adjacency plus self loops, 0/1
};

GraphOperators graph_operators(const GraphSample& g);

// Inverted dropout on hidden node states; a null stream disables it.
struct DropoutStream {
  Rng* rng = nullptr;
  double rate = 0.0;
};

// Tape handles of every parameter of a ModelParams, by name.
using ModelVars = std::map<std::string, Var>;

ModelVars register_params(Tape& tape, const ModelParams& params);

struct SageLayerVars {
  Var self_weight;   // psi: d_in x d_out
  Var neigh_weight;  // theta: d_in x d_out
};

// h' = ReLU(h W_self + mean_{j in N(i)} h_j W_neigh), i.e. ReLU(U [h || AGG]).
Var sage_layer_forward(Var node_states, const GraphOperators& ops, const SageLayerVars& layer);

struct GatHeadVars {
  Var weight;  // d_in x d_head
  Var a_src;   // d_head x 1
  Var a_dst;   // d_head x 1
};

// alpha_ij = softmax_{j in N(i) u {i}} LeakyReLU(a_src.Wh_i + a_dst.Wh_j);
// h'_i = ReLU(sum_j alpha_ij W h_j), heads concatenated.
Var gat_layer_forward(Var node_states, const GraphOperators& ops, const std::vector<GatHeadVars>& heads,
                      double leaky_slope);

struct ReadoutVars {
  Var pool;  // (d_input + d_node) x d_pool
  Var task;  // d_pool x S
};

// MEAN over nodes of Phi_task^T ReLU(Phi_pool^T [x_v || h_v]), optionally with
// a final ReLU. Output is 1 x S.
Var readout(Var node_states, Var node_features, const ReadoutVars& vars, bool final_relu);

// Full L-layer propagation plus readout for one graph.
Var classifier_forward(Tape& tape, const ModelVars& vars, const ModelParams& params, const GraphSample& sample,
                       DropoutStream* dropout = nullptr);

// Convenience: prediction values without keeping a tape around.
std::vector<double> predict(const ModelParams& params, const GraphSample& sample);

}  // namespace fmtl
