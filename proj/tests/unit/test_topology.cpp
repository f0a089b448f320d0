#include <cmath>

#include "doctest.h"

#include "fmtl/core/errors.hpp"
#include "fmtl/core/log.hpp"
#include "fmtl/tensor/eig.hpp"
#include "fmtl/topology/topology.hpp"

using namespace fmtl;

namespace {

void check_doubly_stochastic(const Matrix& w) {
  for (std::size_t i = 0; i < w.rows(); ++i) {
    double r = 0.0, c = 0.0;
    for (std::size_t j = 0; j < w.cols(); ++j) {
      r += w(i, j);
      c += w(j, i);
      CHECK(w(i, j) >= 0.0);
    }
    CHECK(std::abs(r - 1.0) < 1e-12);
    CHECK(std::abs(c - 1.0) < 1e-12);
  }
  CHECK(is_symmetric(w, 0.0));
}

}  // namespace

TEST_CASE("complete and ring adjacency") {
  const auto full = build_topology(TopologyKind::complete, 4, 0, 0);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) CHECK(full.connected(i, j));
  }
  const auto ring = build_topology(TopologyKind::ring, 8, 2, 0);
  for (std::size_t i = 0; i < 8; ++i) {
    for (std::size_t j = 0; j < 8; ++j) {
      const std::size_t d = (i + 8 - j) % 8;
      CHECK(ring.connected(i, j) == (d == 0 || d == 1 || d == 7));
    }
    CHECK(ring.degree(i) == 2);
  }
  CHECK(ring.is_connected_graph());
  CHECK_THROWS_AS(build_topology(TopologyKind::ring, 8, 3, 0), ConfigError);
  CHECK_THROWS_AS(build_topology(TopologyKind::ring, 4, 4, 0), ConfigError);
  CHECK_THROWS_AS(build_topology(TopologyKind::random, 4, 4, 0), ConfigError);
  CHECK_THROWS_AS(build_topology(TopologyKind::random, 5, 3, 0), ConfigError);
}

TEST_CASE("random topology hits the target degree and is symmetric") {
  for (std::uint64_t seed : {3ULL, 4ULL, 5ULL, 6ULL}) {
    for (std::size_t d : {2U, 3U, 4U}) {
      const auto g = build_topology(TopologyKind::random, 8, d, seed);
      for (std::size_t i = 0; i < 8; ++i) {
        CHECK(g.degree(i) == d);
        CHECK(g.connected(i, i));
        for (std::size_t j = 0; j < 8; ++j) CHECK(g.connected(i, j) == g.connected(j, i));
      }
    }
  }
  const auto a = build_topology(TopologyKind::random, 8, 2, 3);
  const auto b = build_topology(TopologyKind::random, 8, 2, 3);
  for (std::size_t i = 0; i < 8; ++i) CHECK(a.neighborhood(i) == b.neighborhood(i));
}

TEST_CASE("connection matrix invariants are enforced") {
  std::vector<std::vector<bool>> adj{{true, true}, {false, true}};
  CHECK_THROWS_AS(ConnectionMatrix(adj, TopologyKind::random), TopologyError);
  adj = {{false, false}, {false, true}};
  CHECK_THROWS_AS(ConnectionMatrix(adj, TopologyKind::random), TopologyError);
}

TEST_CASE("mixing matrices") {
  const auto full = mixing_matrix(build_topology(TopologyKind::complete, 5, 0, 0));
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(full.weights(i, j) - 0.2) < 1e-15);
  }
  const auto c4 = mixing_matrix(build_topology(TopologyKind::ring, 4, 2, 0));
  const double third = 1.0 / 3.0;
  CHECK(std::abs(c4.weights(0, 0) - third) < 1e-15);
  CHECK(std::abs(c4.weights(0, 1) - third) < 1e-15);
  CHECK(c4.weights(0, 2) == 0.0);
  CHECK(std::abs(c4.weights(0, 3) - third) < 1e-15);
  check_doubly_stochastic(c4.weights);

  // Irregular graph: path 0-1-2 plus a pendant on 1.
  std::vector<std::vector<bool>> adj(4, std::vector<bool>(4, false));
  for (std::size_t i = 0; i < 4; ++i) adj[i][i] = true;
  for (auto [a, b] : {std::pair<int, int>{0, 1}, {1, 2}, {1, 3}}) adj[a][b] = adj[b][a] = true;
  const auto mh = mixing_matrix(ConnectionMatrix(adj, TopologyKind::random));
  check_doubly_stochastic(mh.weights);
  CHECK(std::abs(mh.weights(0, 1) - 0.25) < 1e-15);
  CHECK(std::abs(mh.weights(0, 0) - 0.75) < 1e-15);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    check_doubly_stochastic(mixing_matrix(build_topology(TopologyKind::random, 9, 4, seed)).weights);
  }
}

TEST_CASE("spectral gap") {
  CHECK(spectral_gap(mixing_matrix(build_topology(TopologyKind::complete, 8, 0, 0))) < 1e-12);

  // Circulant oracle: eigenvalues (1 + 2 cos(2 pi k / 4)) / 3.
  const double z4 = spectral_gap(mixing_matrix(build_topology(TopologyKind::ring, 4, 2, 0), MixingRule::uniform));
  double expect = 0.0;
  for (int k = 1; k < 4; ++k) expect = std::max(expect, std::abs((1.0 + 2.0 * std::cos(M_PI * k / 2.0)) / 3.0));
  CHECK(std::abs(z4 - expect) < 1e-10);
  CHECK(std::abs(z4 - 1.0 / 3.0) < 1e-10);

  log::quiet() = true;
  const auto none = mixing_matrix(build_topology(TopologyKind::none, 4, 0, 0));
  log::quiet() = false;
  CHECK_FALSE(none.connected);
  CHECK(std::abs(spectral_gap(none) - 1.0) < 1e-12);

  // Adding chords to a ring never increases the gap.
  double prev = 1.0;
  for (std::size_t d : {2U, 4U, 6U}) {
    const double z = spectral_gap(mixing_matrix(build_topology(TopologyKind::ring, 8, d, 0)));
    CHECK(z <= prev + 1e-12);
    prev = z;
  }

  MixingMatrix bad{Matrix{{0.5, 0.5}, {0.25, 0.75}}, true};
  CHECK_THROWS_AS(spectral_gap(bad), TopologyError);
  MixingMatrix scaled{Matrix{{0.5, 0.0}, {0.0, 0.5}}, false};
  CHECK_THROWS_AS(spectral_gap(scaled), TopologyError);
}
