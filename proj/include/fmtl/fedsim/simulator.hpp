#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "fmtl/fedsim/client.hpp"
#include "fmtl/fedsim/communication.hpp"
#include "fmtl/fedsim/evaluate.hpp"

namespace fmtl {

struct MetricsRecord {
  std::size_t round = 0;  // 0 = at initialization
  std::vector<double> client_metric;
  std::vector<double> client_loss;
  double mean_metric = 0.0;
  double mean_loss = 0.0;
  double grad_norm_sq = 0.0;  // |grad F(u_t)|^2 at the averaged shared model; NaN when not tracked
  double consensus = 0.0;
};

using RoundCallback = std::function<void(const MetricsRecord&)>;

// Runs fn(0..n-1) on up to `threads` workers. Exceptions are rethrown after
// all workers finish, lowest index first.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

// One federated training run. Construction performs the train/test split,
// partitioning, masking, topology and model initialization; step() executes
// one round (local training, then communication every tau rounds, then
// evaluation).
class Simulator {
 public:
  Simulator(SimConfig cfg, const Dataset& data);

  MetricsRecord initial_record();
  MetricsRecord step();
  // initial_record() followed by all remaining rounds.
  std::vector<MetricsRecord> run(const RoundCallback& on_round = {});

  const SimConfig& config() const { return cfg_; }
  const DatasetManifest& manifest() const { return manifest_; }
  std::vector<ClientState>& clients() { return states_; }
  const std::vector<ClientState>& clients() const { return states_; }
  const ConnectionMatrix& connection() const { return conn_; }
  const std::optional<MixingMatrix>& mixing() const { return mix_; }
  // Spectral gap of the effective communication graph (0 for server-based
  // averaging, 1 without communication); NaN when the mixing matrix is not
  // symmetric.
  double zeta() const { return zeta_; }
  std::size_t round() const { return round_; }
  const std::vector<GraphSample>& test_set() const { return test_; }
  // Sample-weighted mean training loss of the clients' models at
  // initialization.
  double initial_loss() const { return initial_loss_; }

  // Squared norm of sum_k (N_k/N) grad f_k evaluated at the client-averaged
  // shared parameters, over the shared groups.
  double averaged_gradient_norm_sq() const;

 private:
  MetricsRecord make_record(std::vector<double> losses);

  SimConfig cfg_;
  DatasetManifest manifest_;
  std::vector<GraphSample> test_;
  std::optional<LabelStandardizer> standardizer_;
  std::vector<ClientState> states_;
  ConnectionMatrix conn_;
  std::optional<MixingMatrix> mix_;
  double zeta_ = 0.0;
  std::size_t round_ = 0;
  double initial_loss_ = 0.0;
};

}  // namespace fmtl
