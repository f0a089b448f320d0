#include "fmtl/cli/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "fmtl/core/errors.hpp"
#include "fmtl/fedsim/metrics_io.hpp"

namespace fmtl {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::vector<std::string>& allowed, const std::string& section) {
  if (!j.is_object()) throw ConfigError(section + " must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (std::find(allowed.begin(), allowed.end(), key) != allowed.end()) continue;
    std::string list;
    for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
    throw ConfigError("unknown key '" + key + "' in " + section + "; valid keys: " + list);
  }
}

std::string where(const std::string& section, const std::string& key) {
  return section == "config" ? key : section + "." + key;
}

template <typename T>
void read(const json& j, const std::string& key, T& out, const std::string& section) {
  if (!j.contains(key)) return;
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, bool>) {
    if (!v.is_boolean()) throw ConfigError(where(section, key) + " must be a boolean");
    out = v.get<bool>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw ConfigError(where(section, key) + " must be a string");
    out = v.get<std::string>();
  } else if constexpr (std::is_floating_point_v<T>) {
    if (!v.is_number()) throw ConfigError(where(section, key) + " must be a number");
    out = v.get<double>();
  } else {
    if (!v.is_number_integer()) throw ConfigError(where(section, key) + " must be an integer");
    if (v.is_number_unsigned()) {
      out = static_cast<T>(v.get<std::uint64_t>());
    } else {
      const auto x = v.get<std::int64_t>();
      if (x < 0) throw ConfigError(where(section, key) + " must be >= 0");
      out = static_cast<T>(x);
    }
  }
}

template <typename T>
std::vector<T> read_list(const json& j, const std::string& key, const std::string& section) {
  std::vector<T> out;
  if (!j.contains(key)) return out;
  const json& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where(section, key) + " must be a list");
  for (std::size_t i = 0; i < v.size(); ++i) {
    json wrap = {{"v", v[i]}};
    T x{};
    read(wrap, "v", x, where(section, key) + "[" + std::to_string(i) + "]");
    out.push_back(x);
  }
  return out;
}

}  // namespace

ExperimentSpec parse_config(const json& j) {
  ExperimentSpec spec;
  SimConfig& sim = spec.sim;
  check_keys(j,
             {"dataset", "output_dir", "algorithm", "baselines", "rounds", "local_epochs", "batch_size", "tau", "lr",
              "seed", "test_fraction", "literal_avg", "threads", "standardize_labels", "track_grad_norm", "max_runs",
              "jobs", "optimizer", "model", "mtl", "partition", "topology", "sweep", "bounds"},
             "config");
  const std::string top = "config";
  read(j, "dataset", spec.dataset, top);
  read(j, "output_dir", spec.output_dir, top);
  if (j.contains("algorithm")) {
    std::string a;
    read(j, "algorithm", a, top);
    sim.algorithm = parse_algorithm(a);
  }
  for (const auto& b : read_list<std::string>(j, "baselines", top)) spec.baselines.push_back(parse_algorithm(b));
  read(j, "rounds", sim.rounds, top);
  read(j, "local_epochs", sim.local_epochs, top);
  read(j, "batch_size", sim.batch_size, top);
  read(j, "tau", sim.tau, top);
  read(j, "lr", sim.lr, top);
  read(j, "seed", sim.seed, top);
  read(j, "test_fraction", sim.test_fraction, top);
  read(j, "literal_avg", sim.literal_avg, top);
  read(j, "threads", sim.threads, top);
  read(j, "standardize_labels", sim.standardize_labels, top);
  read(j, "track_grad_norm", sim.track_grad_norm, top);
  read(j, "max_runs", spec.max_runs, top);
  read(j, "jobs", spec.jobs, top);

  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    check_keys(o, {"kind", "beta1", "beta2", "eps"}, "optimizer");
    if (o.contains("kind")) {
      std::string k;
      read(o, "kind", k, "optimizer");
      sim.optimizer.kind = parse_optimizer(k);
    }
    read(o, "beta1", sim.optimizer.beta1, "optimizer");
    read(o, "beta2", sim.optimizer.beta2, "optimizer");
    read(o, "eps", sim.optimizer.eps, "optimizer");
  }
  if (j.contains("model")) {
    const json& m = j.at("model");
    check_keys(m,
               {"variant", "hidden", "node_dim", "pool_dim", "layers", "heads", "leaky_slope", "dropout",
                "readout_final_relu"},
               "model");
    if (m.contains("variant")) {
      std::string v;
      read(m, "variant", v, "model");
      sim.model.variant = parse_variant(v);
    }
    read(m, "hidden", sim.model.hidden, "model");
    read(m, "node_dim", sim.model.node_dim, "model");
    read(m, "pool_dim", sim.model.pool_dim, "model");
    read(m, "layers", sim.model.layers, "model");
    read(m, "heads", sim.model.heads, "model");
    read(m, "leaky_slope", sim.model.leaky_slope, "model");
    read(m, "dropout", sim.model.dropout, "model");
    read(m, "readout_final_relu", sim.model.readout_final_relu, "model");
  }
  if (j.contains("mtl")) {
    const json& m = j.at("mtl");
    check_keys(m,
               {"lambda1", "lambda_theta", "lambda_psi", "lambda_pool", "lambda_task", "omega_lr", "epsilon_psd",
                "literal_eq11"},
               "mtl");
    read(m, "lambda1", sim.mtl.lambda1, "mtl");
    read(m, "lambda_theta", sim.mtl.lambda_chi.theta, "mtl");
    read(m, "lambda_psi", sim.mtl.lambda_chi.psi, "mtl");
    read(m, "lambda_pool", sim.mtl.lambda_chi.phi_pool, "mtl");
    read(m, "lambda_task", sim.mtl.lambda_chi.phi_task, "mtl");
    read(m, "omega_lr", sim.mtl.omega_lr, "mtl");
    read(m, "epsilon_psd", sim.mtl.epsilon_psd, "mtl");
    read(m, "literal_eq11", sim.mtl.literal_eq11, "mtl");
  }
  if (j.contains("partition")) {
    const json& p = j.at("partition");
    check_keys(p, {"alpha", "clients", "mask_mode", "custom_masks", "seed"}, "partition");
    read(p, "alpha", sim.partition.alpha, "partition");
    read(p, "clients", sim.partition.clients, "partition");
    if (p.contains("mask_mode")) {
      std::string mm;
      read(p, "mask_mode", mm, "partition");
      sim.partition.mask_mode = parse_mask_mode(mm);
    }
    if (p.contains("custom_masks")) {
      const json& cm = p.at("custom_masks");
      if (!cm.is_array()) throw ConfigError("partition.custom_masks must be a list of task lists");
      for (std::size_t i = 0; i < cm.size(); ++i) {
        const json wrap = {{"m", cm[i]}};
        const auto tasks = read_list<std::size_t>(wrap, "m", "partition.custom_masks[" + std::to_string(i) + "]");
        sim.partition.custom_masks.emplace_back(tasks.begin(), tasks.end());
      }
    }
    if (p.contains("seed")) {
      read(p, "seed", sim.partition.seed, "partition");
      spec.partition_seed_set = true;
    }
  }
  if (j.contains("topology")) {
    const json& t = j.at("topology");
    check_keys(t, {"kind", "n_neighbors", "seed", "mixing"}, "topology");
    if (t.contains("kind")) {
      std::string k;
      read(t, "kind", k, "topology");
      sim.topology.kind = parse_topology_kind(k);
    }
    read(t, "n_neighbors", sim.topology.n_neighbors, "topology");
    if (t.contains("seed")) {
      read(t, "seed", sim.topology.seed, "topology");
      spec.topology_seed_set = true;
    }
    if (t.contains("mixing")) {
      std::string m;
      read(t, "mixing", m, "topology");
      sim.topology.mixing = parse_mixing_rule(m);
    }
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    check_keys(s, {"tau", "lambda1", "topology", "n_neighbors", "seed"}, "sweep");
    spec.sweep.tau = read_list<std::size_t>(s, "tau", "sweep");
    spec.sweep.lambda1 = read_list<double>(s, "lambda1", "sweep");
    for (const auto& k : read_list<std::string>(s, "topology", "sweep")) {
      spec.sweep.topology.push_back(parse_topology_kind(k));
    }
    spec.sweep.n_neighbors = read_list<std::size_t>(s, "n_neighbors", "sweep");
    spec.sweep.seed = read_list<std::uint64_t>(s, "seed", "sweep");
  }
  if (j.contains("bounds")) {
    const json& b = j.at("bounds");
    check_keys(b, {"L", "sigma_sq", "F_inf", "beta", "estimate"}, "bounds");
    read(b, "L", spec.bounds.L, "bounds");
    read(b, "sigma_sq", spec.bounds.sigma_sq, "bounds");
    read(b, "F_inf", spec.bounds.F_inf, "bounds");
    read(b, "beta", spec.bounds.beta, "bounds");
    read(b, "estimate", spec.bounds.estimate, "bounds");
  }
  return spec;
}

ExperimentSpec parse_config_text(const std::string& text) {
  json j;
  try {
    j = text.find_first_not_of(" \t\r\n") == std::string::npos ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

ExperimentSpec parse_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void finalize_spec(ExperimentSpec& spec) {
  if (!spec.partition_seed_set) spec.sim.partition.seed = spec.sim.seed;
  if (!spec.topology_seed_set) spec.sim.topology.seed = spec.sim.seed;
  if (spec.jobs < 1) throw ConfigError("jobs must be >= 1");
  if (spec.max_runs < 1) throw ConfigError("max_runs must be >= 1");
  if (!(spec.bounds.L > 0.0) || !(spec.bounds.sigma_sq >= 0.0)) {
    throw ConfigError("bounds: need L > 0 and sigma_sq >= 0");
  }
  validate_sim_config(spec.sim);
  for (std::size_t t : spec.sweep.tau) {
    if (t < 1) throw ConfigError("sweep.tau entries must be >= 1");
  }
  for (double l : spec.sweep.lambda1) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("sweep.lambda1 entries must be >= 0");
  }
}

json config_to_json(const ExperimentSpec& spec) {
  const SimConfig& s = spec.sim;
  json baselines = json::array();
  for (Algorithm a : spec.baselines) baselines.push_back(to_string(a));
  json masks = json::array();
  for (const auto& m : s.partition.custom_masks) masks.push_back(std::vector<std::size_t>(m.begin(), m.end()));
  json topo = json::array();
  for (TopologyKind k : spec.sweep.topology) topo.push_back(to_string(k));
  json j = {
      {"dataset", spec.dataset},
      {"output_dir", spec.output_dir},
      {"algorithm", to_string(s.algorithm)},
      {"baselines", baselines},
      {"rounds", s.rounds},
      {"local_epochs", s.local_epochs},
      {"batch_size", s.batch_size},
      {"tau", s.tau},
      {"lr", s.lr},
      {"seed", s.seed},
      {"test_fraction", s.test_fraction},
      {"literal_avg", s.literal_avg},
      {"threads", s.threads},
      {"standardize_labels", s.standardize_labels},
      {"track_grad_norm", s.track_grad_norm},
      {"max_runs", spec.max_runs},
      {"jobs", spec.jobs},
      {"optimizer",
       {{"kind", to_string(s.optimizer.kind)},
        {"beta1", s.optimizer.beta1},
        {"beta2", s.optimizer.beta2},
        {"eps", s.optimizer.eps}}},
      {"model",
       {{"variant", to_string(s.model.variant)},
        {"hidden", s.model.hidden},
        {"node_dim", s.model.node_dim},
        {"pool_dim", s.model.pool_dim},
        {"layers", s.model.layers},
        {"heads", s.model.heads},
        {"leaky_slope", s.model.leaky_slope},
        {"dropout", s.model.dropout},
        {"readout_final_relu", s.model.readout_final_relu}}},
      {"mtl",
       {{"lambda1", s.mtl.lambda1},
        {"lambda_theta", s.mtl.lambda_chi.theta},
        {"lambda_psi", s.mtl.lambda_chi.psi},
        {"lambda_pool", s.mtl.lambda_chi.phi_pool},
        {"lambda_task", s.mtl.lambda_chi.phi_task},
        {"omega_lr", s.mtl.omega_lr},
        {"epsilon_psd", s.mtl.epsilon_psd},
        {"literal_eq11", s.mtl.literal_eq11}}},
      {"partition",
       {{"alpha", s.partition.alpha},
        {"clients", s.partition.clients},
        {"mask_mode", to_string(s.partition.mask_mode)},
        {"custom_masks", masks},
        {"seed", s.partition.seed}}},
      {"topology",
       {{"kind", to_string(s.topology.kind)},
        {"n_neighbors", s.topology.n_neighbors},
        {"seed", s.topology.seed},
        {"mixing", to_string(s.topology.mixing)}}},
      {"sweep",
       {{"tau", spec.sweep.tau},
        {"lambda1", spec.sweep.lambda1},
        {"topology", topo},
        {"n_neighbors", spec.sweep.n_neighbors},
        {"seed", spec.sweep.seed}}},
      {"bounds",
       {{"L", spec.bounds.L},
        {"sigma_sq", spec.bounds.sigma_sq},
        {"F_inf", spec.bounds.F_inf},
        {"beta", spec.bounds.beta},
        {"estimate", spec.bounds.estimate}}},
  };
  if (!spec.partition_seed_set) j["partition"].erase("seed");
  if (!spec.topology_seed_set) j["topology"].erase("seed");
  return j;
}

std::vector<RunPoint> expand_runs(const ExperimentSpec& spec) {
  std::vector<Algorithm> algos{spec.sim.algorithm};
  for (Algorithm a : spec.baselines) {
    if (std::find(algos.begin(), algos.end(), a) == algos.end()) algos.push_back(a);
  }
  auto axis = [](std::size_t n) { return std::max<std::size_t>(n, 1); };
  const SweepSpec& sw = spec.sweep;
  const std::size_t total = algos.size() * axis(sw.tau.size()) * axis(sw.lambda1.size()) *
                            axis(sw.topology.size()) * axis(sw.n_neighbors.size()) * axis(sw.seed.size());
  if (total > spec.max_runs) {
    throw ConfigError("sweep expands to " + std::to_string(total) + " runs, above max_runs = " +
                      std::to_string(spec.max_runs));
  }
  std::vector<RunPoint> out;
  for (Algorithm a : algos) {
    for (std::size_t i_tau = 0; i_tau < axis(sw.tau.size()); ++i_tau) {
      for (std::size_t i_l = 0; i_l < axis(sw.lambda1.size()); ++i_l) {
        for (std::size_t i_top = 0; i_top < axis(sw.topology.size()); ++i_top) {
          for (std::size_t i_n = 0; i_n < axis(sw.n_neighbors.size()); ++i_n) {
            for (std::size_t i_s = 0; i_s < axis(sw.seed.size()); ++i_s) {
              RunPoint p;
              p.index = out.size();
              p.sim = spec.sim;
              p.sim.algorithm = a;
              std::string label = to_string(a);
              if (!sw.tau.empty()) {
                p.sim.tau = sw.tau[i_tau];
                label += " tau=" + std::to_string(p.sim.tau);
              }
              if (!sw.lambda1.empty()) {
                p.sim.mtl.lambda1 = sw.lambda1[i_l];
                label += " lambda1=" + format_double(p.sim.mtl.lambda1);
              }
              if (!sw.topology.empty()) {
                p.sim.topology.kind = sw.topology[i_top];
                label += " topology=" + to_string(p.sim.topology.kind);
              }
              if (!sw.n_neighbors.empty()) {
                p.sim.topology.n_neighbors = sw.n_neighbors[i_n];
                label += " n_neighbors=" + std::to_string(p.sim.topology.n_neighbors);
              }
              if (!sw.seed.empty()) {
                p.sim.seed = sw.seed[i_s];
                if (!spec.partition_seed_set) p.sim.partition.seed = p.sim.seed;
                if (!spec.topology_seed_set) p.sim.topology.seed = p.sim.seed;
                label += " seed=" + std::to_string(p.sim.seed);
              }
              p.label = label;
              out.push_back(std::move(p));
            }
          }
        }
      }
    }
  }
  return out;
}

namespace {

std::string run_file_name(std::size_t index) {
  std::ostringstream os;
  os << "metrics_";
  os.width(3);
  os.fill('0');
  os << index << ".csv";
  return os.str();
}

json bound_report(const Simulator& sim, const std::vector<MetricsRecord>& records, const BoundsSpec& b) {
  BoundInputs in;
  const SimConfig& c = sim.config();
  in.eta = c.lr;
  in.tau = static_cast<double>(c.tau);
  in.zeta = sim.zeta();
  in.K = static_cast<double>(sim.clients().size());
  in.T = static_cast<double>(c.rounds);
  in.F_init = sim.initial_loss();
  in.F_inf = b.F_inf;
  in.beta = b.beta;
  in.L = b.L;
  in.sigma_sq = b.sigma_sq;
  json j;
  j["estimated"] = false;
  try {
    validate_bound_inputs(in);
    const LrCondition cond = lr_condition(in);
    const BoundValue bound = convergence_bound(in);
    j["inputs"] = {{"eta", in.eta}, {"L", in.L},         {"tau", in.tau},       {"zeta", in.zeta},
                   {"sigma_sq", in.sigma_sq}, {"K", in.K}, {"T", in.T},           {"F_init", in.F_init},
                   {"F_inf", in.F_inf},       {"beta", in.beta}};
    j["lr_condition"] = {{"feasible", cond.feasible},
                         {"lhs", std::isfinite(cond.lhs) ? json(cond.lhs) : json(nullptr)},
                         {"reason", cond.reason}};
    j["bound"] = bound.defined ? json(bound.value) : json(nullptr);
    if (!bound.reason.empty()) j["bound_reason"] = bound.reason;
    if (c.track_grad_norm) {
      const TraceReport tr = compare_trace(records, in);
      j["empirical_mean_grad_norm_sq"] = tr.empirical_mean;
      j["violated"] = tr.violated;
    }
  } catch (const Error& e) {
    j["error"] = e.what();
  }
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << content;
}

struct RunOutcome {
  bool ok = false;
  std::string error;
  std::vector<MetricsRecord> records;
  json bounds;
  double zeta = 0.0;
  double initial_loss = 0.0;
};

}  // namespace

int run_experiment(const ExperimentSpec& spec, std::ostream& log) {
  const std::vector<RunPoint> runs = expand_runs(spec);
  const Dataset data = load_dataset(spec.dataset);
  const std::filesystem::path dir(spec.output_dir);
  std::filesystem::create_directories(dir);

  std::vector<RunOutcome> outcomes(runs.size());
  std::mutex log_mu;
  parallel_for(runs.size(), spec.jobs, [&](std::size_t i) {
    const RunPoint& rp = runs[i];
    RunOutcome& out = outcomes[i];
    const std::filesystem::path partial = dir / (run_file_name(rp.index) + ".partial");
    std::ofstream csv(partial, std::ios::binary);
    if (!csv) {
      out.error = "cannot write " + partial.string();
      return;
    }
    csv << metrics_csv_header();
    try {
      Simulator sim(rp.sim, data);
      BoundsSpec b = spec.bounds;
      if (b.estimate) {
        b.L = estimate_lipschitz(sim, 4, 1e-3, rp.sim.seed);
        b.sigma_sq = estimate_gradient_variance(sim);
      }
      out.records = sim.run([&](const MetricsRecord& r) {
        write_metrics_rows(csv, r);
        csv.flush();
      });
      out.bounds = bound_report(sim, out.records, b);
      out.bounds["estimated"] = b.estimate;
      out.zeta = sim.zeta();
      out.initial_loss = sim.initial_loss();
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    csv.close();
    if (out.ok) std::filesystem::rename(partial, dir / run_file_name(rp.index));
    std::lock_guard<std::mutex> lock(log_mu);
    if (out.ok) {
      log << "run " << rp.index << " [" << rp.label << "] final mean metric "
          << format_double(out.records.back().mean_metric) << "\n";
    } else {
      log << "run " << rp.index << " [" << rp.label << "] failed: " << out.error << "\n";
    }
  });

  bool all_ok = true;
  json summary;
  summary["config"] = config_to_json(spec);
  summary["runs"] = json::array();
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const RunOutcome& o = outcomes[i];
    all_ok = all_ok && o.ok;
    json r = {{"index", runs[i].index},
              {"label", runs[i].label},
              {"algorithm", to_string(runs[i].sim.algorithm)},
              {"tau", runs[i].sim.tau},
              {"lambda1", runs[i].sim.mtl.lambda1},
              {"topology", to_string(runs[i].sim.topology.kind)},
              {"n_neighbors", runs[i].sim.topology.n_neighbors},
              {"seed", runs[i].sim.seed},
              {"metrics_file", run_file_name(runs[i].index) + (o.ok ? "" : ".partial")},
              {"status", o.ok ? "ok" : "failed"}};
    if (o.ok) {
      const MetricsRecord& last = o.records.back();
      r["final_mean_metric"] = last.mean_metric;
      r["final_client_metric"] = last.client_metric;
      r["final_mean_loss"] = last.mean_loss;
      r["zeta"] = std::isfinite(o.zeta) ? json(o.zeta) : json(nullptr);
      r["initial_loss"] = o.initial_loss;
      r["bound_report"] = o.bounds;
    } else {
      r["error"] = o.error;
    }
    summary["runs"].push_back(r);
  }
  summary["status"] = all_ok ? "ok" : "failed";

  std::ostringstream plot;
  plot << "round";
  std::size_t max_rounds = 0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    plot << '\t' << runs[i].index << ':' << runs[i].label;
    max_rounds = std::max(max_rounds, outcomes[i].records.size());
  }
  plot << '\n';
  for (std::size_t t = 0; t < max_rounds; ++t) {
    plot << t;
    for (const auto& o : outcomes) plot << '\t' << (t < o.records.size() ? format_double(o.records[t].mean_metric) : "");
    plot << '\n';
  }

  const std::string suffix = all_ok ? "" : ".partial";
  write_file(dir / ("summary.json" + suffix), summary.dump(2) + "\n");
  write_file(dir / ("plot.tsv" + suffix), plot.str());
  return all_ok ? 0 : 1;
}

}  // namespace fmtl
