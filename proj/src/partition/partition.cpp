#include "fmtl/partition/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmtl/core/errors.hpp"
#include "fmtl/core/log.hpp"
#include "fmtl/core/rng.hpp"

namespace fmtl {

std::string to_string(MaskMode m) {
  switch (m) {
    case MaskMode::exclusive: return "exclusive";
    case MaskMode::custom: return "custom";
    case MaskMode::all: return "all";
  }
  return "?";
}

MaskMode parse_mask_mode(const std::string& s) {
  if (s == "exclusive" || s == "exclusive_exhaustive") return MaskMode::exclusive;
  if (s == "custom") return MaskMode::custom;
  if (s == "all") return MaskMode::all;
  throw ConfigError("unknown mask mode '" + s + "' (expected exclusive, custom or all)");
}

void validate_partition_config(const PartitionConfig& cfg) {
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) throw ConfigError("partition.alpha must be > 0");
  if (cfg.clients == 0) throw ConfigError("partition.clients must be >= 1");
  if (cfg.mask_mode == MaskMode::custom && cfg.custom_masks.size() != cfg.clients) {
    throw ConfigError("partition.custom_masks needs one task set per client (" + std::to_string(cfg.clients) +
                      "), got " + std::to_string(cfg.custom_masks.size()));
  }
}

std::vector<std::size_t> dirichlet_counts(std::size_t n, const PartitionConfig& cfg) {
  validate_partition_config(cfg);
  const std::size_t k = cfg.clients;
  if (n < k) {
    throw ConfigError("cannot split " + std::to_string(n) + " samples over " + std::to_string(k) + " clients");
  }
  Rng rng(cfg.seed, 0, 0, Purpose::partition);
  std::vector<double> p(k);
  double total = 0.0;
  for (double& x : p) {
    x = rng.gamma(cfg.alpha);
    total += x;
  }
  if (!(total > 0.0)) {
    std::fill(p.begin(), p.end(), 1.0);
    total = static_cast<double>(k);
  }
  std::vector<std::size_t> counts(k);
  std::vector<double> rem(k);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = p[i] / total * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    rem[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t r = 0; assigned < n; ++r, ++assigned) ++counts[order[r % k]];
  for (std::size_t i = 0; i < k; ++i) {
    if (counts[i] > 0) continue;
    const auto largest = static_cast<std::size_t>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    --counts[largest];
    counts[i] = 1;
  }
  return counts;
}

std::vector<ClientDataset> dirichlet_quantity_split(const std::vector<GraphSample>& samples,
                                                    const PartitionConfig& cfg) {
  const std::vector<std::size_t> counts = dirichlet_counts(samples.size(), cfg);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(cfg.seed, 0, 0, Purpose::shuffle, 1);
  rng.shuffle(order);
  std::vector<ClientDataset> out(cfg.clients);
  std::size_t pos = 0;
  for (std::size_t c = 0; c < cfg.clients; ++c) {
    out[c].client_id = c;
    out[c].samples.reserve(counts[c]);
    for (std::size_t i = 0; i < counts[c]; ++i) out[c].samples.push_back(samples[order[pos++]]);
  }
  return out;
}

std::vector<std::set<std::size_t>> assign_task_masks(const PartitionConfig& cfg, std::size_t global_tasks) {
  validate_partition_config(cfg);
  const std::size_t k = cfg.clients;
  std::vector<std::set<std::size_t>> out(k);
  switch (cfg.mask_mode) {
    case MaskMode::all: {
      for (auto& s : out) {
        for (std::size_t t = 0; t < global_tasks; ++t) s.insert(t);
      }
      return out;
    }
    case MaskMode::custom: {
      for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t t : cfg.custom_masks[c]) {
          if (t >= global_tasks) {
            throw ConfigError("custom mask for client " + std::to_string(c) + " names task " + std::to_string(t) +
                              " but only " + std::to_string(global_tasks) + " tasks exist");
          }
        }
        if (cfg.custom_masks[c].empty()) throw ConfigError("custom mask for client " + std::to_string(c) + " is empty");
        out[c] = cfg.custom_masks[c];
      }
      return out;
    }
    case MaskMode::exclusive: {
      if (k > global_tasks) {
        throw ConfigError("exclusive masks need clients <= tasks (" + std::to_string(k) + " > " +
                          std::to_string(global_tasks) + ")");
      }
      std::vector<std::size_t> tasks(global_tasks);
      std::iota(tasks.begin(), tasks.end(), 0);
      Rng rng(cfg.seed, 0, 0, Purpose::masks);
      rng.shuffle(tasks);
      // First (S mod K) clients get one extra task.
      std::size_t pos = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const std::size_t take = global_tasks / k + (c < global_tasks % k ? 1 : 0);
        for (std::size_t i = 0; i < take; ++i) out[c].insert(tasks[pos++]);
      }
      return out;
    }
  }
  return out;
}

ClientDataset apply_mask(ClientDataset dataset, const std::set<std::size_t>& task_set) {
  dataset.task_set = task_set;
  bool any = false;
  for (auto& s : dataset.samples) {
    for (std::size_t t = 0; t < s.label_mask.size(); ++t) {
      if (s.label_mask[t] && task_set.count(t) == 0) s.label_mask[t] = false;
      any = any || s.label_mask[t];
    }
  }
  dataset.degenerate = !any;
  if (dataset.degenerate) {
    log::warn("client " + std::to_string(dataset.client_id) + " has no observed label after masking");
  }
  return dataset;
}

}  // namespace fmtl
