#include "fmtl/graph/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include "fmtl/core/errors.hpp"
#include "fmtl/core/rng.hpp"

namespace fmtl {

namespace {

std::vector<double> descriptor(const GraphSample& g, std::size_t n_types) {
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> type(n);
  for (std::size_t v = 0; v < n; ++v) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < n_types; ++k)
      if (g.node_features(v, k) > g.node_features(v, best)) best = k;
    type[v] = best;
  }
  std::vector<double> frac(n_types, 0.0);
  for (std::size_t v = 0; v < n; ++v) frac[type[v]] += 1.0 / static_cast<double>(n);

  // Fraction of bonds whose endpoints are (type a, type a+1 mod n_types).
  std::vector<double> pairs(n_types, 0.0);
  for (const auto& [a, b] : g.edges) {
    for (std::size_t k = 0; k < n_types; ++k) {
      const std::size_t k2 = (k + 1) % n_types;
      if ((type[a] == k && type[b] == k2) || (type[b] == k && type[a] == k2)) pairs[k] += 1.0;
    }
  }
  const double ne = std::max<double>(1.0, static_cast<double>(g.edges.size()));
  for (double& p : pairs) p /= ne;

  std::vector<double> z = frac;
  z.insert(z.end(), pairs.begin(), pairs.end());
  return z;
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_graphs == 0 || spec.num_tasks == 0 || spec.d_input == 0) {
    throw ConfigError("generate_synthetic: counts must be positive");
  }
  if (spec.min_nodes == 0 || spec.max_nodes < spec.min_nodes) {
    throw ConfigError("generate_synthetic: invalid node range");
  }
  const std::size_t n_types = std::min<std::size_t>(4, spec.d_input);
  Rng rng(spec.seed, 0, 0, Purpose::synthetic);

  Dataset ds;
  ds.manifest.name = "synthetic";
  ds.manifest.task_type = spec.task_type;
  ds.manifest.metric = spec.task_type == TaskType::classification ? Metric::roc_auc : Metric::mae;
  ds.manifest.num_tasks = spec.num_tasks;
  ds.manifest.d_input = spec.d_input;
  ds.manifest.d_edge = 0;

  std::vector<std::vector<double>> z;
  for (std::size_t i = 0; i < spec.num_graphs; ++i) {
    GraphSample g;
    const std::size_t n = spec.min_nodes + rng.below(spec.max_nodes - spec.min_nodes + 1);
    g.node_features = Matrix(n, spec.d_input);
    for (std::size_t v = 0; v < n; ++v) {
      g.node_features(v, rng.below(n_types)) = 1.0;
      for (std::size_t c = n_types; c < spec.d_input; ++c) g.node_features(v, c) = 0.5 * rng.normal();
    }
    for (std::size_t v = 1; v < n; ++v) g.edges.emplace_back(rng.below(v), v);
    // A few ring closures.
    for (std::size_t extra = 0; extra < n / 4; ++extra) {
      const std::size_t a = rng.below(n);
      const std::size_t b = rng.below(n);
      if (a == b) continue;
      const auto key = std::minmax(a, b);
      const bool dup = std::any_of(g.edges.begin(), g.edges.end(),
                                   [&](const auto& e) { return std::minmax(e.first, e.second) == key; });
      if (!dup) g.edges.emplace_back(key.first, key.second);
    }
    g.edge_features = Matrix(g.edges.size(), 0);
    z.push_back(descriptor(g, n_types));
    ds.samples.push_back(std::move(g));
  }

  // Standardize descriptors across the dataset.
  const std::size_t dz = z.front().size();
  for (std::size_t c = 0; c < dz; ++c) {
    double mu = 0.0;
    for (const auto& row : z) mu += row[c];
    mu /= static_cast<double>(z.size());
    double var = 0.0;
    for (const auto& row : z) var += (row[c] - mu) * (row[c] - mu);
    const double sd = std::sqrt(var / static_cast<double>(z.size()));
    for (auto& row : z) row[c] = sd > 1e-12 ? (row[c] - mu) / sd : 0.0;
  }

  std::vector<double> common(dz);
  for (double& w : common) w = rng.normal();
  std::vector<std::vector<double>> scores(spec.num_tasks, std::vector<double>(spec.num_graphs));
  for (std::size_t t = 0; t < spec.num_tasks; ++t) {
    std::vector<double> w(dz);
    for (std::size_t c = 0; c < dz; ++c) w[c] = common[c] + spec.task_specificity * rng.normal();
    for (std::size_t i = 0; i < spec.num_graphs; ++i) {
      double s = 0.0;
      for (std::size_t c = 0; c < dz; ++c) s += w[c] * z[i][c];
      scores[t][i] = s;
    }
  }

  for (auto& g : ds.samples) {
    g.label.assign(spec.num_tasks, 0.0);
    g.label_mask.assign(spec.num_tasks, true);
  }
  for (std::size_t t = 0; t < spec.num_tasks; ++t) {
    if (spec.task_type == TaskType::classification) {
      std::vector<double> sorted = scores[t];
      std::sort(sorted.begin(), sorted.end());
      const double median = sorted[sorted.size() / 2];
      for (std::size_t i = 0; i < spec.num_graphs; ++i) {
        double y = scores[t][i] >= median ? 1.0 : 0.0;
        if (rng.uniform() < spec.label_flip) y = 1.0 - y;
        ds.samples[i].label[t] = y;
      }
    } else {
      for (std::size_t i = 0; i < spec.num_graphs; ++i)
        ds.samples[i].label[t] = scores[t][i] + spec.regression_noise * rng.normal();
    }
    for (std::size_t i = 0; i < spec.num_graphs; ++i) {
      if (spec.missing_rate > 0.0 && rng.uniform() < spec.missing_rate) {
        ds.samples[i].label_mask[t] = false;
        ds.samples[i].label[t] = 0.0;
      }
    }
  }
  ds.manifest.sample_count = ds.samples.size();
  return ds;
}

}  // namespace fmtl
