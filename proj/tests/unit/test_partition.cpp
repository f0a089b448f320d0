#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "fmtl/core/errors.hpp"
#include "fmtl/core/log.hpp"
#include "fmtl/graph/synthetic.hpp"
#include "fmtl/partition/partition.hpp"

using namespace fmtl;

TEST_CASE("dirichlet counts") {
  PartitionConfig cfg;
  cfg.clients = 4;
  cfg.alpha = 1e6;
  const auto flat = dirichlet_counts(100, cfg);
  for (std::size_t c : flat) CHECK((c >= 24 && c <= 26));

  cfg.alpha = 0.5;
  cfg.seed = 11;
  const auto a = dirichlet_counts(100, cfg);
  CHECK(a == dirichlet_counts(100, cfg));
  CHECK(std::accumulate(a.begin(), a.end(), std::size_t{0}) == 100);
  CHECK(*std::min_element(a.begin(), a.end()) >= 1);

  CHECK_THROWS_AS(dirichlet_counts(3, cfg), ConfigError);
  cfg.alpha = 0.0;
  CHECK_THROWS_AS(dirichlet_counts(10, cfg), ConfigError);
}

TEST_CASE("tiny alpha still leaves every client a sample") {
  PartitionConfig cfg;
  cfg.alpha = 0.01;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    cfg.seed = seed;
    cfg.clients = 8;
    const auto c = dirichlet_counts(9, cfg);
    CHECK(std::accumulate(c.begin(), c.end(), std::size_t{0}) == 9);
    CHECK(*std::min_element(c.begin(), c.end()) >= 1);
  }
}

TEST_CASE("quantity split deals every sample once") {
  SyntheticSpec spec;
  spec.num_graphs = 50;
  const Dataset ds = generate_synthetic(spec);
  PartitionConfig cfg;
  cfg.clients = 5;
  cfg.seed = 2;
  const auto parts = dirichlet_quantity_split(ds.samples, cfg);
  std::size_t total = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    CHECK(parts[k].client_id == k);
    total += parts[k].samples.size();
  }
  CHECK(total == 50);
  const auto again = dirichlet_quantity_split(ds.samples, cfg);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    REQUIRE(again[k].samples.size() == parts[k].samples.size());
    for (std::size_t i = 0; i < parts[k].samples.size(); ++i) {
      CHECK(again[k].samples[i].node_features == parts[k].samples[i].node_features);
    }
  }
}

TEST_CASE("task masks") {
  PartitionConfig cfg;
  cfg.clients = 1;
  const auto one = assign_task_masks(cfg, 5);
  CHECK(one[0] == std::set<std::size_t>{0, 1, 2, 3, 4});

  cfg.clients = 4;
  cfg.seed = 3;
  const auto m = assign_task_masks(cfg, 27);
  std::set<std::size_t> all;
  std::size_t sum = 0;
  for (const auto& s : m) {
    CHECK_FALSE(s.empty());
    sum += s.size();
    all.insert(s.begin(), s.end());
  }
  CHECK(sum == 27);
  CHECK(all.size() == 27);

  cfg.clients = 5;
  CHECK_THROWS_AS(assign_task_masks(cfg, 4), ConfigError);

  cfg.clients = 2;
  cfg.mask_mode = MaskMode::custom;
  cfg.custom_masks = {{0, 1}, {1, 2}};
  const auto c = assign_task_masks(cfg, 3);
  CHECK(c[0] == std::set<std::size_t>{0, 1});
  CHECK(c[1] == std::set<std::size_t>{1, 2});
  cfg.custom_masks = {{0, 9}, {1}};
  CHECK_THROWS_AS(assign_task_masks(cfg, 3), ConfigError);
  cfg.custom_masks = {{0}};
  CHECK_THROWS_AS(assign_task_masks(cfg, 3), ConfigError);
}

TEST_CASE("apply_mask") {
  SyntheticSpec spec;
  spec.num_graphs = 6;
  spec.num_tasks = 3;
  const Dataset ds = generate_synthetic(spec);
  ClientDataset cd{0, ds.samples, {}, false};
  const ClientDataset full = apply_mask(cd, {0, 1, 2});
  for (std::size_t i = 0; i < cd.samples.size(); ++i) CHECK(full.samples[i].label_mask == cd.samples[i].label_mask);
  CHECK_FALSE(full.degenerate);

  const ClientDataset part = apply_mask(cd, {1});
  for (const auto& s : part.samples) {
    CHECK_FALSE(s.label_mask[0]);
    CHECK_FALSE(s.label_mask[2]);
  }
  CHECK(part.task_set == std::set<std::size_t>{1});

  for (auto& s : cd.samples) s.label_mask = {false, true, true};
  log::quiet() = true;
  CHECK(apply_mask(cd, {0}).degenerate);
  log::quiet() = false;
}
