#include "fmtl/gnn/model.hpp"

#include <algorithm>
#include <cmath>

#include "fmtl/core/errors.hpp"
#include "fmtl/core/rng.hpp"

namespace fmtl {

std::string to_string(GnnVariant v) { return v == GnnVariant::sage ? "sage" : "gat"; }

std::string to_string(ParamGroup g) {
  switch (g) {
    case ParamGroup::theta: return "theta";
    case ParamGroup::psi: return "psi";
    case ParamGroup::phi_pool: return "phi_pool";
    case ParamGroup::phi_task: return "phi_task";
  }
  return "?";
}

GnnVariant parse_variant(const std::string& s) {
  if (s == "sage" || s == "graphsage") return GnnVariant::sage;
  if (s == "gat") return GnnVariant::gat;
  throw ConfigError("unknown GNN variant '" + s + "' (expected sage|gat)");
}

const Param& ModelParams::get(const std::string& name) const {
  for (const auto& p : params)
    if (p.name == name) return p;
  throw LookupError("ModelParams: no parameter '" + name + "'");
}

Param& ModelParams::get(const std::string& name) {
  return const_cast<Param&>(static_cast<const ModelParams&>(*this).get(name));
}

bool ModelParams::contains(const std::string& name) const {
  return std::any_of(params.begin(), params.end(), [&](const Param& p) { return p.name == name; });
}

long ModelParams::column_of(std::size_t global_task) const {
  auto it = std::lower_bound(task_columns.begin(), task_columns.end(), global_task);
  if (it == task_columns.end() || *it != global_task) return -1;
  return static_cast<long>(it - task_columns.begin());
}

std::string sage_self_name(std::size_t layer) { return "gnn.l" + std::to_string(layer) + ".self"; }
std::string sage_neigh_name(std::size_t layer) { return "gnn.l" + std::to_string(layer) + ".neigh"; }
std::string gat_weight_name(std::size_t layer, std::size_t head) {
  return "gnn.l" + std::to_string(layer) + ".h" + std::to_string(head) + ".W";
}
std::string gat_src_name(std::size_t layer, std::size_t head) {
  return "gnn.l" + std::to_string(layer) + ".h" + std::to_string(head) + ".a_src";
}
std::string gat_dst_name(std::size_t layer, std::size_t head) {
  return "gnn.l" + std::to_string(layer) + ".h" + std::to_string(head) + ".a_dst";
}

void validate_model_config(const ModelConfig& cfg) {
  if (cfg.layers == 0) throw ConfigError("model: layers must be >= 1");
  if (cfg.hidden == 0 || cfg.node_dim == 0 || cfg.pool_dim == 0) throw ConfigError("model: widths must be positive");
  if (!(cfg.dropout >= 0.0 && cfg.dropout < 1.0)) throw ConfigError("model: dropout must be in [0, 1)");
  if (cfg.variant == GnnVariant::gat) {
    if (cfg.heads == 0) throw ConfigError("model: GAT needs at least one head");
    if (cfg.node_dim % cfg.heads != 0 || (cfg.layers > 1 && cfg.hidden % cfg.heads != 0)) {
      throw ConfigError("model: GAT layer widths must be divisible by heads");
    }
  }
}

namespace {

Matrix glorot(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform(-a, a);
  return m;
}

}  // namespace

ModelParams init_model(const ModelConfig& cfg, std::size_t d_input, std::vector<std::size_t> task_columns,
                       std::uint64_t seed) {
  validate_model_config(cfg);
  if (d_input == 0) throw ConfigError("model: d_input must be positive");
  if (!std::is_sorted(task_columns.begin(), task_columns.end()) ||
      std::adjacent_find(task_columns.begin(), task_columns.end()) != task_columns.end()) {
    throw ValidationError("model: task columns must be strictly ascending");
  }

  ModelParams mp;
  mp.config = cfg;
  mp.d_input = d_input;
  mp.task_columns = std::move(task_columns);

  Rng rng(seed, 0, 0, Purpose::init);
  std::size_t d_in = d_input;
  for (std::size_t l = 0; l < cfg.layers; ++l) {
    const std::size_t d_out = (l + 1 == cfg.layers) ? cfg.node_dim : cfg.hidden;
    if (cfg.variant == GnnVariant::sage) {
      mp.params.push_back({sage_self_name(l), ParamGroup::psi, glorot(d_in, d_out, rng)});
      mp.params.push_back({sage_neigh_name(l), ParamGroup::theta, glorot(d_in, d_out, rng)});
    } else {
      const std::size_t d_head = d_out / cfg.heads;
      for (std::size_t h = 0; h < cfg.heads; ++h) {
        mp.params.push_back({gat_weight_name(l, h), ParamGroup::theta, glorot(d_in, d_head, rng)});
        mp.params.push_back({gat_src_name(l, h), ParamGroup::theta, glorot(d_head, 1, rng)});
        mp.params.push_back({gat_dst_name(l, h), ParamGroup::theta, glorot(d_head, 1, rng)});
      }
    }
    d_in = d_out;
  }
  mp.params.push_back({ModelParams::kPool, ParamGroup::phi_pool, glorot(d_input + cfg.node_dim, cfg.pool_dim, rng)});

  Matrix head(cfg.pool_dim, mp.task_columns.size());
  const double a = std::sqrt(6.0 / static_cast<double>(cfg.pool_dim + 1));
  for (std::size_t c = 0; c < mp.task_columns.size(); ++c) {
    Rng col_rng(seed, mp.task_columns[c], 0, Purpose::init_task);
    for (std::size_t r = 0; r < cfg.pool_dim; ++r) head(r, c) = col_rng.uniform(-a, a);
  }
  mp.params.push_back({ModelParams::kTaskHead, ParamGroup::phi_task, std::move(head)});
  return mp;
}

}  // namespace fmtl
