#include "fmtl/gnn/layers.hpp"

#include "fmtl/core/errors.hpp"

namespace fmtl {

GraphOperators graph_operators(const GraphSample& g) {
  const std::size_t n = g.num_nodes();
  GraphOperators ops{Matrix(n, n), Matrix::identity(n)};
  std::vector<std::size_t> degree(n, 0);
  for (const auto& [a, b] : g.edges) {
    ++degree[a];
    ++degree[b];
  }
  for (const auto& [a, b] : g.edges) {
    ops.mean_adjacency(a, b) += 1.0 / static_cast<double>(degree[a]);
    ops.mean_adjacency(b, a) += 1.0 / static_cast<double>(degree[b]);
    ops.attention_mask(a, b) = 1.0;
    ops.attention_mask(b, a) = 1.0;
  }
  return ops;
}

ModelVars register_params(Tape& tape, const ModelParams& params) {
  ModelVars vars;
  for (const auto& p : params.params) vars.emplace(p.name, tape.parameter(p.name, p.value));
  return vars;
}

Var sage_layer_forward(Var node_states, const GraphOperators& ops, const SageLayerVars& layer) {
  Tape& tape = *node_states.tape();
  if (node_states.rows() != ops.mean_adjacency.rows()) {
    throw ShapeError("sage_layer_forward: node count mismatch");
  }
  Var adj = tape.constant(ops.mean_adjacency);
  Var agg = ad::matmul(adj, node_states);
  Var out = ad::add(ad::matmul(node_states, layer.self_weight), ad::matmul(agg, layer.neigh_weight));
  return ad::relu(out);
}

Var gat_layer_forward(Var node_states, const GraphOperators& ops, const std::vector<GatHeadVars>& heads,
                      double leaky_slope) {
  if (heads.empty()) throw ShapeError("gat_layer_forward: no heads");
  if (node_states.rows() != ops.attention_mask.rows()) {
    throw ShapeError("gat_layer_forward: node count mismatch");
  }
  Var concat;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    Var wh = ad::matmul(node_states, heads[h].weight);
    Var s_src = ad::matmul(wh, heads[h].a_src);
    Var s_dst = ad::matmul(wh, heads[h].a_dst);
    Var scores = ad::leaky_relu(ad::broadcast_add(s_src, ad::transpose(s_dst)), leaky_slope);
    Var alpha = ad::masked_row_softmax(scores, ops.attention_mask);
    Var out = ad::matmul(alpha, wh);
    concat = h == 0 ? out : ad::hstack(concat, out);
  }
  return ad::relu(concat);
}

Var readout(Var node_states, Var node_features, const ReadoutVars& vars, bool final_relu) {
  if (node_states.rows() != node_features.rows()) throw ShapeError("readout: node count mismatch");
  Var z = ad::hstack(node_features, node_states);
  Var pooled = ad::relu(ad::matmul(z, vars.pool));
  Var per_node = ad::matmul(pooled, vars.task);
  if (final_relu) per_node = ad::relu(per_node);
  return ad::mean_rows(per_node);
}

namespace {

Var apply_dropout(Var h, DropoutStream* dropout) {
  if (dropout == nullptr || dropout->rng == nullptr || dropout->rate <= 0.0) return h;
  Matrix mask(h.rows(), h.cols());
  const double keep = 1.0 - dropout->rate;
  for (double& m : mask.data()) m = dropout->rng->uniform() < keep ? 1.0 / keep : 0.0;
  return ad::hadamard(h, h.tape()->constant(std::move(mask)));
}

}  // namespace

Var classifier_forward(Tape& tape, const ModelVars& vars, const ModelParams& params, const GraphSample& sample,
                       DropoutStream* dropout) {
  if (sample.node_features.cols() != params.d_input) {
    throw ShapeError("classifier_forward: sample feature width " + std::to_string(sample.node_features.cols()) +
                     " != model d_input " + std::to_string(params.d_input));
  }
  const GraphOperators ops = graph_operators(sample);
  const auto& cfg = params.config;
  Var x = tape.constant(sample.node_features);
  Var h = x;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    if (cfg.variant == GnnVariant::sage) {
      h = sage_layer_forward(h, ops, {vars.at(sage_self_name(l)), vars.at(sage_neigh_name(l))});
    } else {
      std::vector<GatHeadVars> heads;
      for (std::size_t k = 0; k < cfg.heads; ++k) {
        heads.push_back({vars.at(gat_weight_name(l, k)), vars.at(gat_src_name(l, k)), vars.at(gat_dst_name(l, k))});
      }
      h = gat_layer_forward(h, ops, heads, cfg.leaky_slope);
    }
    h = apply_dropout(h, dropout);
  }
  return readout(h, x, {vars.at(ModelParams::kPool), vars.at(ModelParams::kTaskHead)}, cfg.readout_final_relu);
}

std::vector<double> predict(const ModelParams& params, const GraphSample& sample) {
  Tape tape;
  const ModelVars vars = register_params(tape, params);
  const Var out = classifier_forward(tape, vars, params, sample, nullptr);
  auto d = out.value().data();
  return {d.begin(), d.end()};
}

}  // namespace fmtl
