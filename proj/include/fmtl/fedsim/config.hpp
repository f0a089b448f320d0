#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "fmtl/gnn/model.hpp"
#include "fmtl/mtl/regularizer.hpp"
#include "fmtl/partition/partition.hpp"
#include "fmtl/topology/topology.hpp"

namespace fmtl {

enum class Algorithm { spreadgnn, fedgmtl, fedavg, isolated };
enum class OptimizerKind { adam, sgd };

std::string to_string(Algorithm a);
std::string to_string(OptimizerKind k);
Algorithm parse_algorithm(const std::string& s);
OptimizerKind parse_optimizer(const std::string& s);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct SimConfig {
  Algorithm algorithm = Algorithm::spreadgnn;
  std::size_t rounds = 150;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 1;
  std::size_t tau = 1;  // communicate every tau rounds
  double lr = 0.0015;
  OptimizerConfig optimizer;
  ModelConfig model;
  MtlConfig mtl;
  PartitionConfig partition;
  TopologySpec topology;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  // Raw 1/N_j weights divided by |M_k| when averaging shared parameters.
  bool literal_avg = false;
  std::size_t threads = 1;
  bool standardize_labels = true;  // regression only
  bool track_grad_norm = true;
};

// Throws ConfigError on any invariant violation.
void validate_sim_config(const SimConfig& cfg);

// True for algorithms that keep and exchange task covariances.
bool uses_omega(Algorithm a);

}  // namespace fmtl
