#pragma once

#include <cstdint>

#include "fmtl/graph/graph_data.hpp"

namespace fmtl {

// Generator for molecule-like toy datasets with related tasks. Labels come
// from a fixed teacher over graph descriptors (node-type fractions and
// type-homophily along bonds); task weight vectors share a common component
// so tasks are correlated.
struct SyntheticSpec {
  std::size_t num_graphs = 200;
  std::size_t num_tasks = 4;
  std::size_t d_input = 8;
  std::size_t min_nodes = 4;
  std::size_t max_nodes = 12;
  TaskType task_type = TaskType::classification;
  double task_specificity = 0.5;  // weight of the per-task component
  double label_flip = 0.05;       // classification label noise
  double regression_noise = 0.1;
  double missing_rate = 0.0;      // fraction of labels marked missing
  std::uint64_t seed = 0;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace fmtl
