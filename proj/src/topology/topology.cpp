#include "fmtl/topology/topology.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

#include "fmtl/core/errors.hpp"
#include "fmtl/core/log.hpp"
#include "fmtl/core/rng.hpp"
#include "fmtl/tensor/eig.hpp"

namespace fmtl {

std::string to_string(TopologyKind k) {
  switch (k) {
    case TopologyKind::complete: return "complete";
    case TopologyKind::ring: return "ring";
    case TopologyKind::random: return "random";
    case TopologyKind::none: return "none";
  }
  return "?";
}

std::string to_string(MixingRule r) { return r == MixingRule::metropolis ? "metropolis" : "uniform"; }

TopologyKind parse_topology_kind(const std::string& s) {
  if (s == "complete") return TopologyKind::complete;
  if (s == "ring") return TopologyKind::ring;
  if (s == "random") return TopologyKind::random;
  if (s == "none" || s == "isolated") return TopologyKind::none;
  throw ConfigError("unknown topology kind '" + s + "' (expected complete, ring, random or none)");
}

MixingRule parse_mixing_rule(const std::string& s) {
  if (s == "metropolis") return MixingRule::metropolis;
  if (s == "uniform") return MixingRule::uniform;
  throw ConfigError("unknown mixing rule '" + s + "' (expected metropolis or uniform)");
}

ConnectionMatrix::ConnectionMatrix(std::vector<std::vector<bool>> adjacency, TopologyKind kind)
    : adj_(std::move(adjacency)), kind_(kind) {
  const std::size_t k = adj_.size();
  if (k == 0) throw TopologyError("connection matrix is empty");
  for (std::size_t i = 0; i < k; ++i) {
    if (adj_[i].size() != k) throw TopologyError("connection matrix is not square");
    if (!adj_[i][i]) throw TopologyError("client " + std::to_string(i) + " is missing its self connection");
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (adj_[i][j] != adj_[j][i]) throw TopologyError("connection matrix is not symmetric");
    }
  }
  std::vector<bool> seen(k, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!q.empty()) {
    const std::size_t i = q.front();
    q.pop();
    for (std::size_t j = 0; j < k; ++j) {
      if (adj_[i][j] && !seen[j]) {
        seen[j] = true;
        ++reached;
        q.push(j);
      }
    }
  }
  graph_connected_ = reached == k;
}

std::vector<std::size_t> ConnectionMatrix::neighborhood(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j) {
    if (adj_[i][j]) out.push_back(j);
  }
  return out;
}

std::size_t ConnectionMatrix::degree(std::size_t i) const { return neighborhood(i).size() - 1; }

namespace {

using Adj = std::vector<std::vector<bool>>;

Adj self_only(std::size_t k) {
  Adj a(k, std::vector<bool>(k, false));
  for (std::size_t i = 0; i < k; ++i) a[i][i] = true;
  return a;
}

// Configuration-model pairing of stubs; fails on self pairs or repeats.
bool try_regular(std::size_t k, std::size_t d, Rng& rng, Adj& out) {
  std::vector<std::size_t> stubs;
  for (std::size_t i = 0; i < k; ++i) stubs.insert(stubs.end(), d, i);
  rng.shuffle(stubs);
  Adj a = self_only(k);
  for (std::size_t s = 0; s + 1 < stubs.size(); s += 2) {
    const std::size_t u = stubs[s], v = stubs[s + 1];
    if (u == v || a[u][v]) return false;
    a[u][v] = a[v][u] = true;
  }
  out = std::move(a);
  return true;
}

// Greedy fallback: link pairs in a seeded order while both ends are below
// the target degree.
Adj greedy_near_regular(std::size_t k, std::size_t d, Rng& rng) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) pairs.emplace_back(i, j);
  }
  rng.shuffle(pairs);
  Adj a = self_only(k);
  std::vector<std::size_t> deg(k, 0);
  for (const auto& [u, v] : pairs) {
    if (deg[u] < d && deg[v] < d) {
      a[u][v] = a[v][u] = true;
      ++deg[u];
      ++deg[v];
    }
  }
  return a;
}

}  // namespace

ConnectionMatrix build_topology(TopologyKind kind, std::size_t k, std::size_t n_neighbors, std::uint64_t seed) {
  if (k == 0) throw ConfigError("topology needs at least one client");
  switch (kind) {
    case TopologyKind::complete: {
      return ConnectionMatrix(Adj(k, std::vector<bool>(k, true)), kind);
    }
    case TopologyKind::none: {
      return ConnectionMatrix(self_only(k), kind);
    }
    case TopologyKind::ring: {
      if (k < 2) throw ConfigError("ring topology needs at least 2 clients");
      if (n_neighbors == 0 || n_neighbors % 2 != 0) throw ConfigError("ring topology needs an even n_neighbors >= 2");
      if (n_neighbors >= k) throw ConfigError("ring topology needs n_neighbors < K");
      Adj a = self_only(k);
      for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t s = 1; s <= n_neighbors / 2; ++s) {
          const std::size_t j = (i + s) % k;
          a[i][j] = a[j][i] = true;
        }
      }
      return ConnectionMatrix(std::move(a), kind);
    }
    case TopologyKind::random: {
      if (k < 2) throw ConfigError("random topology needs at least 2 clients");
      if (n_neighbors == 0 || n_neighbors >= k) throw ConfigError("random topology needs 0 < n_neighbors < K");
      if ((k * n_neighbors) % 2 != 0) {
        throw ConfigError("random topology: K * n_neighbors must be even for a regular graph");
      }
      for (std::uint64_t attempt = 0; attempt < 100; ++attempt) {
        Rng rng(seed, 0, attempt, Purpose::topology);
        Adj a;
        if (try_regular(k, n_neighbors, rng, a)) return ConnectionMatrix(std::move(a), kind);
      }
      log::warn("random topology: no exact " + std::to_string(n_neighbors) +
                "-regular graph found after 100 attempts, using nearest achievable degrees");
      Rng rng(seed, 0, 100, Purpose::topology);
      return ConnectionMatrix(greedy_near_regular(k, n_neighbors, rng), kind);
    }
  }
  throw ConfigError("unknown topology kind");
}

ConnectionMatrix build_topology(const TopologySpec& spec, std::size_t k) {
  return build_topology(spec.kind, k, spec.n_neighbors, spec.seed);
}

MixingMatrix mixing_matrix(const ConnectionMatrix& conn, MixingRule rule) {
  const std::size_t k = conn.size();
  Matrix w(k, k);
  std::vector<double> size(k);
  for (std::size_t i = 0; i < k; ++i) size[i] = static_cast<double>(conn.degree(i) + 1);
  for (std::size_t i = 0; i < k; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j || !conn.connected(i, j)) continue;
      w(i, j) = rule == MixingRule::metropolis ? 1.0 / std::max(size[i], size[j]) : 1.0 / size[i];
      off += w(i, j);
    }
    w(i, i) = 1.0 - off;
  }
  if (!conn.is_connected_graph()) log::warn("topology is disconnected: clients cannot reach consensus");
  return MixingMatrix{std::move(w), conn.is_connected_graph()};
}

double spectral_gap(const MixingMatrix& mix) {
  const Matrix& w = mix.weights;
  const std::size_t k = w.rows();
  if (k == 0 || w.cols() != k) throw TopologyError("mixing matrix must be square and non-empty");
  if (!is_symmetric(w, 1e-12)) throw TopologyError("mixing matrix is not symmetric");
  if (k == 1) return 0.0;
  const SymEig e = sym_eig(w);
  if (std::abs(e.values.front() - 1.0) > 1e-8) {
    throw TopologyError("mixing matrix leading eigenvalue is " + std::to_string(e.values.front()) + ", not 1");
  }
  double zeta = 0.0;
  for (std::size_t i = 1; i < k; ++i) zeta = std::max(zeta, std::abs(e.values[i]));
  return std::min(zeta, 1.0);
}

}  // namespace fmtl
