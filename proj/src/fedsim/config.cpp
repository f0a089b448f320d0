#include "fmtl/fedsim/config.hpp"

#include <cmath>

#include "fmtl/core/errors.hpp"

namespace fmtl {

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::spreadgnn: return "spreadgnn";
    case Algorithm::fedgmtl: return "fedgmtl";
    case Algorithm::fedavg: return "fedavg";
    case Algorithm::isolated: return "isolated";
  }
  return "?";
}

std::string to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "sgd"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "spreadgnn") return Algorithm::spreadgnn;
  if (s == "fedgmtl") return Algorithm::fedgmtl;
  if (s == "fedavg") return Algorithm::fedavg;
  if (s == "isolated") return Algorithm::isolated;
  throw ConfigError("unknown algorithm '" + s + "' (expected spreadgnn, fedgmtl, fedavg or isolated)");
}

OptimizerKind parse_optimizer(const std::string& s) {
  if (s == "adam") return OptimizerKind::adam;
  if (s == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + s + "' (expected adam or sgd)");
}

bool uses_omega(Algorithm a) { return a == Algorithm::spreadgnn || a == Algorithm::fedgmtl; }

void validate_sim_config(const SimConfig& cfg) {
  if (cfg.rounds < 1) throw ConfigError("rounds must be >= 1");
  if (cfg.local_epochs < 1) throw ConfigError("local_epochs must be >= 1");
  if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (cfg.tau < 1) throw ConfigError("tau must be >= 1");
  if (!std::isfinite(cfg.lr) || cfg.lr < 0.0) throw ConfigError("lr must be finite and >= 0");
  if (cfg.threads < 1) throw ConfigError("threads must be >= 1");
  if (!(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0)) throw ConfigError("test_fraction must be in (0, 1)");
  const auto& o = cfg.optimizer;
  if (!(o.beta1 >= 0.0 && o.beta1 < 1.0) || !(o.beta2 >= 0.0 && o.beta2 < 1.0) || !(o.eps > 0.0)) {
    throw ConfigError("optimizer: need 0 <= beta1, beta2 < 1 and eps > 0");
  }
  validate_model_config(cfg.model);
  validate_mtl_config(cfg.mtl);
  validate_partition_config(cfg.partition);
}

}  // namespace fmtl
