#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "fmtl/tensor/matrix.hpp"

namespace fmtl {

enum class TaskType { classification, regression };
enum class Metric { roc_auc, mae };

std::string to_string(TaskType t);
std::string to_string(Metric m);

// One molecule-style graph. Undirected edges are stored once; models expand
// them to both directions.
struct GraphSample {
  Matrix node_features;                               // |V| x d_input
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  Matrix edge_features;                               // |E| x d_edge (d_edge may be 0)
  std::vector<double> label;                          // S_global
  std::vector<bool> label_mask;                       // S_global, true = present

  std::size_t num_nodes() const { return node_features.rows(); }
  std::size_t num_edges() const { return edges.size(); }
  bool has_any_label() const;
};

struct DatasetManifest {
  std::string name;
  TaskType task_type = TaskType::classification;
  std::size_t num_tasks = 0;
  std::size_t d_input = 0;
  std::size_t d_edge = 0;
  Metric metric = Metric::roc_auc;
  std::size_t sample_count = 0;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<GraphSample> samples;
};

struct ClientDataset {
  std::size_t client_id = 0;
  std::vector<GraphSample> samples;
  std::set<std::size_t> task_set;  // global task ids this client observes
  bool degenerate = false;         // no sample carries any observed label
};

// Throws ValidationError naming the offending sample.
void validate_sample(const GraphSample& s, const DatasetManifest& m, std::size_t index);
void validate_manifest(const DatasetManifest& m);

// Parses the graph JSON format. Malformed JSON -> ParseError with line and
// column; invariant violations -> ValidationError naming the sample index.
Dataset parse_dataset(const std::string& text);
Dataset load_dataset(const std::filesystem::path& path);
std::string serialize_dataset(const Dataset& ds, int indent = -1);
void save_dataset(const Dataset& ds, const std::filesystem::path& path);

struct Split {
  std::vector<GraphSample> train;
  std::vector<GraphSample> test;
};

// Uniform random permutation split, deterministic in seed. The test side
// holds round(test_fraction * N) samples, clamped to [1, N-1] when N >= 2.
// test_fraction outside (0, 1) -> ConfigError.
Split train_test_split(const std::vector<GraphSample>& samples, double test_fraction,
                       std::uint64_t seed);

// Per-task label standardization fitted on the training split only.
struct LabelStandardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  static LabelStandardizer fit(const std::vector<GraphSample>& train, std::size_t num_tasks);
  void apply(std::vector<GraphSample>& samples) const;
  double invert(std::size_t task, double value) const { return value * stddev[task] + mean[task]; }
};

}  // namespace fmtl
