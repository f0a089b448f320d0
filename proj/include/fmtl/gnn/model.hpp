#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fmtl/tensor/matrix.hpp"

namespace fmtl {

enum class GnnVariant { sage, gat };

// Learnable groups of the graph classifier. theta = message weights,
// psi = update weights, phi_pool / phi_task = readout. The first three are
// shared across clients; phi_task is client specific.
enum class ParamGroup { theta, psi, phi_pool, phi_task };

std::string to_string(GnnVariant v);
std::string to_string(ParamGroup g);
GnnVariant parse_variant(const std::string& s);

struct ModelConfig {
  GnnVariant variant = GnnVariant::sage;
  std::size_t hidden = 64;    // width of inner GNN layers
  std::size_t node_dim = 64;  // width of the last GNN layer
  std::size_t pool_dim = 64;
  std::size_t layers = 2;
  std::size_t heads = 2;      // GAT only
  double leaky_slope = 0.2;   // GAT attention LeakyReLU
  double dropout = 0.3;
  // Apply ReLU after the task map in the readout (logits then cannot go
  // negative). Off by default: the loss consumes the last affine output.
  bool readout_final_relu = false;
};

struct Param {
  std::string name;
  ParamGroup group;
  Matrix value;
};

// All weights of one client's graph classifier. Parameters are kept in a
// fixed order so flattening, averaging and optimizer state line up across
// clients. The task head has one column per entry of task_columns (global
// task ids, ascending).
class ModelParams {
 public:
  ModelConfig config;
  std::size_t d_input = 0;
  std::vector<Param> params;
  std::vector<std::size_t> task_columns;

  const Param& get(const std::string& name) const;
  Param& get(const std::string& name);
  bool contains(const std::string& name) const;

  const Matrix& task_head() const { return get(kTaskHead).value; }
  Matrix& task_head() { return get(kTaskHead).value; }
  // Column index of a global task id in the head, or -1 when absent.
  long column_of(std::size_t global_task) const;

  static constexpr const char* kTaskHead = "readout.task";
  static constexpr const char* kPool = "readout.pool";
};

std::string sage_self_name(std::size_t layer);
std::string sage_neigh_name(std::size_t layer);
std::string gat_weight_name(std::size_t layer, std::size_t head);
std::string gat_src_name(std::size_t layer, std::size_t head);
std::string gat_dst_name(std::size_t layer, std::size_t head);

// Validates the configuration (layers >= 1, positive widths, node_dim and
// hidden divisible by heads for GAT); throws ConfigError.
void validate_model_config(const ModelConfig& cfg);

// Glorot-uniform initialization. Shared groups are drawn from a single
// stream keyed by seed; each task-head column is drawn from a stream keyed
// by its global task id, so every client starts from the same point.
ModelParams init_model(const ModelConfig& cfg, std::size_t d_input, std::vector<std::size_t> task_columns,
                       std::uint64_t seed);

}  // namespace fmtl
