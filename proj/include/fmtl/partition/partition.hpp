#pragma once

#include <cstddef>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "fmtl/graph/graph_data.hpp"

namespace fmtl {

// exclusive: disjoint task sets covering every task. custom: explicit sets,
// overlap allowed. all: every client observes every task.
enum class MaskMode { exclusive, custom, all };

std::string to_string(MaskMode m);
MaskMode parse_mask_mode(const std::string& s);

struct PartitionConfig {
  double alpha = 0.5;
  std::size_t clients = 4;
  MaskMode mask_mode = MaskMode::exclusive;
  std::vector<std::set<std::size_t>> custom_masks;
  std::uint64_t seed = 0;
};

// Throws ConfigError (alpha <= 0, no clients, custom mask count mismatch).
void validate_partition_config(const PartitionConfig& cfg);

// Client sample counts from a seeded Dirichlet(alpha 1_K) draw, rounded by
// largest remainder so they sum to n, with every client >= 1.
std::vector<std::size_t> dirichlet_counts(std::size_t n, const PartitionConfig& cfg);

// Deals the samples (after a seeded shuffle) into K client datasets whose
// sizes follow dirichlet_counts. Task sets are left empty.
std::vector<ClientDataset> dirichlet_quantity_split(const std::vector<GraphSample>& samples,
                                                    const PartitionConfig& cfg);

std::vector<std::set<std::size_t>> assign_task_masks(const PartitionConfig& cfg, std::size_t global_tasks);

// ANDs every label mask with membership in task_set and records the set. A
// dataset left without any observed label is flagged degenerate.
ClientDataset apply_mask(ClientDataset dataset, const std::set<std::size_t>& task_set);

}  // namespace fmtl
