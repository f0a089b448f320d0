#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fmtl/tensor/matrix.hpp"

namespace fmtl {

// `none` has only self connections (every client trains alone).
enum class TopologyKind { complete, ring, random, none };
enum class MixingRule { metropolis, uniform };

std::string to_string(TopologyKind k);
std::string to_string(MixingRule r);
TopologyKind parse_topology_kind(const std::string& s);
MixingRule parse_mixing_rule(const std::string& s);

struct TopologySpec {
  TopologyKind kind = TopologyKind::ring;
  std::size_t n_neighbors = 2;
  std::uint64_t seed = 0;
  MixingRule mixing = MixingRule::metropolis;
};

// Symmetric client adjacency with self connections on the diagonal.
class ConnectionMatrix {
 public:
  ConnectionMatrix(std::vector<std::vector<bool>> adjacency, TopologyKind kind);

  std::size_t size() const { return adj_.size(); }
  bool connected(std::size_t i, std::size_t j) const { return adj_[i][j]; }
  TopologyKind kind() const { return kind_; }
  // Neighbor set including the client itself, ascending.
  std::vector<std::size_t> neighborhood(std::size_t i) const;
  // Neighbor count excluding self.
  std::size_t degree(std::size_t i) const;
  bool is_connected_graph() const { return graph_connected_; }

 private:
  std::vector<std::vector<bool>> adj_;
  TopologyKind kind_;
  bool graph_connected_ = false;
};

// Throws ConfigError when the requested shape is unsatisfiable.
ConnectionMatrix build_topology(TopologyKind kind, std::size_t k, std::size_t n_neighbors, std::uint64_t seed);
ConnectionMatrix build_topology(const TopologySpec& spec, std::size_t k);

struct MixingMatrix {
  Matrix weights;
  bool connected = false;
};

// Metropolis-Hastings: w_ij = 1/max(|M_i|, |M_j|) for linked i != j, the
// diagonal takes the remainder. `uniform` uses 1/|M_i| on each row, which is
// symmetric only for regular graphs.
MixingMatrix mixing_matrix(const ConnectionMatrix& conn, MixingRule rule = MixingRule::metropolis);

// Largest |lambda| over the non-principal eigenvalues. Throws TopologyError
// when the top eigenvalue is not 1 or the matrix is not symmetric.
double spectral_gap(const MixingMatrix& mix);

}  // namespace fmtl
