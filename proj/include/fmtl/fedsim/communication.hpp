#pragma once

#include <vector>

#include "fmtl/fedsim/client.hpp"
#include "fmtl/topology/topology.hpp"

namespace fmtl {

bool is_shared(ParamGroup g);

// Synchronous neighbor averaging. Shared groups become the mixing-weighted
// combination over neighbors; each task-head column is combined only over
// neighbors whose head has that global task, with the mixing weights
// renormalized among them. With `literal` the shared-group weights are
// (1/N_j)/|M_k| over the neighborhood instead of the mixing matrix.
void periodic_average(std::vector<ClientState>& states, const MixingMatrix& mix, bool literal = false);

// Every client runs omega_decentralized_update against the covariances its
// neighbors held before the exchange.
void omega_exchange(std::vector<ClientState>& states, const ConnectionMatrix& conn, const MtlConfig& cfg,
                    std::size_t global_task_count);

// Server-side aggregation: uniform mean of shared groups across all clients
// and of every head column across the clients that hold it.
void server_average(std::vector<ClientState>& states);

// Single global covariance from the clients' closed forms, weighted by
// 1/N_k (normalized), projected, and handed to every client.
void server_omega(std::vector<ClientState>& states, const MtlConfig& cfg, std::size_t global_task_count);

// Uniform average of the shared groups across clients, by parameter name.
std::map<std::string, Matrix> shared_mean(const std::vector<ClientState>& states);

// sum_i |mean - W_i|_F^2 over the shared groups.
double consensus_distance(const std::vector<ClientState>& states);

}  // namespace fmtl
