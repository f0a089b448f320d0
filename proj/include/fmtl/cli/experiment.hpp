#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "fmtl/bounds/bounds.hpp"
#include "fmtl/fedsim/config.hpp"

namespace fmtl {

struct BoundsSpec {
  double L = 1.0;
  double sigma_sq = 1.0;
  double F_inf = 0.0;
  double beta = 0.0;
  bool estimate = false;  // replace L and sigma_sq by the heuristic estimators
};

// Each non-empty axis multiplies the number of runs.
struct SweepSpec {
  std::vector<std::size_t> tau;
  std::vector<double> lambda1;
  std::vector<TopologyKind> topology;
  std::vector<std::size_t> n_neighbors;
  std::vector<std::uint64_t> seed;
};

struct ExperimentSpec {
  SimConfig sim;
  std::string dataset;
  std::string output_dir = "out";
  SweepSpec sweep;
  std::vector<Algorithm> baselines;  // run in addition to sim.algorithm
  std::size_t max_runs = 512;
  std::size_t jobs = 1;  // sweep points run concurrently
  BoundsSpec bounds;
  // Sub-seeds that follow the top-level seed unless set explicitly.
  bool partition_seed_set = false;
  bool topology_seed_set = false;
};

// Builds a spec from a JSON object over the defaults. Unknown keys, wrong
// types and invariant violations throw ConfigError.
ExperimentSpec parse_config(const nlohmann::json& j);
ExperimentSpec parse_config_text(const std::string& text);
ExperimentSpec parse_config_file(const std::filesystem::path& path);

// Resolves derived fields (sub-seeds) and checks every invariant.
void finalize_spec(ExperimentSpec& spec);

// Full configuration echo; parse_config(config_to_json(s)) reproduces s.
nlohmann::json config_to_json(const ExperimentSpec& spec);

struct RunPoint {
  std::size_t index = 0;
  std::string label;
  SimConfig sim;
};

// Cross product of algorithms (main plus baselines) and sweep axes.
// Throws ConfigError when it exceeds spec.max_runs.
std::vector<RunPoint> expand_runs(const ExperimentSpec& spec);

// Runs every point and writes metrics_NNN.csv, summary.json and plot.tsv
// into spec.output_dir. Returns 0 on success; on any run failure returns 1
// and leaves the affected outputs with a .partial suffix.
int run_experiment(const ExperimentSpec& spec, std::ostream& log);

}  // namespace fmtl
