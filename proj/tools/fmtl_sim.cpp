// Command-line driver: simulate, bounds, inspect-topology, generate.

#include <cmath>
#include <iomanip>
#include <iostream>
#include <optional>

#include "CLI11.hpp"

#include "fmtl/bounds/bounds.hpp"
#include "fmtl/cli/experiment.hpp"
#include "fmtl/core/errors.hpp"
#include "fmtl/fedsim/metrics_io.hpp"
#include "fmtl/graph/synthetic.hpp"
#include "fmtl/topology/topology.hpp"

namespace {

struct SimulateArgs {
  std::string config;
  std::optional<std::string> dataset, out, algo, topology;
  std::optional<std::size_t> tau, n_neighbors, rounds, threads, clients;
  std::optional<std::uint64_t> seed;
};

int do_simulate(const SimulateArgs& a) {
  fmtl::ExperimentSpec spec = a.config.empty() ? fmtl::parse_config_text("") : fmtl::parse_config_file(a.config);
  if (a.dataset) spec.dataset = *a.dataset;
  if (a.out) spec.output_dir = *a.out;
  if (a.algo) spec.sim.algorithm = fmtl::parse_algorithm(*a.algo);
  if (a.topology) spec.sim.topology.kind = fmtl::parse_topology_kind(*a.topology);
  if (a.tau) spec.sim.tau = *a.tau;
  if (a.n_neighbors) spec.sim.topology.n_neighbors = *a.n_neighbors;
  if (a.rounds) spec.sim.rounds = *a.rounds;
  if (a.threads) spec.sim.threads = *a.threads;
  if (a.clients) spec.sim.partition.clients = *a.clients;
  if (a.seed) spec.sim.seed = *a.seed;
  if (spec.dataset.empty()) throw fmtl::ConfigError("no dataset given (config key 'dataset' or --dataset)");
  fmtl::finalize_spec(spec);
  return fmtl::run_experiment(spec, std::cout);
}

struct BoundsArgs {
  fmtl::BoundInputs in;
};

int do_bounds(const BoundsArgs& a) {
  const fmtl::LrCondition cond = fmtl::lr_condition(a.in);
  const fmtl::BoundValue b = fmtl::convergence_bound(a.in);
  std::cout << std::setprecision(12);
  if (cond.reason.empty()) {
    std::cout << "lr_condition lhs " << cond.lhs << " (" << (cond.feasible ? "feasible" : "infeasible") << ")\n";
  } else {
    std::cout << "lr_condition infeasible: " << cond.reason << "\n";
  }
  if (b.defined) {
    std::cout << "bound " << b.value << "\n"
              << "  optimization term " << b.optimization_term << "\n"
              << "  noise term " << b.noise_term << "\n"
              << "  network term " << b.network_term << "\n";
  } else {
    std::cout << "bound undefined: " << b.reason << "\n";
  }
  return 0;
}

struct TopologyArgs {
  std::string kind = "ring";
  std::size_t k = 8;
  std::size_t n_neighbors = 2;
  std::uint64_t seed = 0;
  std::string mixing = "metropolis";
  bool show_matrix = false;
};

int do_inspect(const TopologyArgs& a) {
  const auto conn = fmtl::build_topology(fmtl::parse_topology_kind(a.kind), a.k, a.n_neighbors, a.seed);
  const auto mix = fmtl::mixing_matrix(conn, fmtl::parse_mixing_rule(a.mixing));
  std::cout << "kind " << a.kind << " K " << a.k << " connected " << (conn.is_connected_graph() ? "yes" : "no") << "\n";
  try {
    std::cout << "zeta " << fmtl::format_double(fmtl::spectral_gap(mix)) << "\n";
  } catch (const fmtl::TopologyError& e) {
    std::cout << "zeta unavailable: " << e.what() << "\n";
  }
  if (a.show_matrix) {
    for (std::size_t i = 0; i < a.k; ++i) {
      for (std::size_t j = 0; j < a.k; ++j) std::cout << (j ? " " : "") << std::setw(8) << std::setprecision(4) << mix.weights(i, j);
      std::cout << "\n";
    }
  }
  return 0;
}

struct GenerateArgs {
  fmtl::SyntheticSpec spec;
  std::string task_type = "classification";
  std::string out;
};

int do_generate(GenerateArgs a) {
  if (a.task_type == "classification" || a.task_type == "cls") {
    a.spec.task_type = fmtl::TaskType::classification;
  } else if (a.task_type == "regression" || a.task_type == "reg") {
    a.spec.task_type = fmtl::TaskType::regression;
  } else {
    throw fmtl::ConfigError("unknown task type '" + a.task_type + "'");
  }
  fmtl::save_dataset(fmtl::generate_synthetic(a.spec), a.out);
  std::cout << "wrote " << a.spec.num_graphs << " graphs to " << a.out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized multi-task graph learning simulator"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "run one experiment or sweep");
  s->add_option("--config", sim.config, "JSON config file");
  s->add_option("--dataset", sim.dataset, "graph dataset JSON");
  s->add_option("--out", sim.out, "output directory");
  s->add_option("--algo", sim.algo, "spreadgnn|fedgmtl|fedavg|isolated");
  s->add_option("--tau", sim.tau, "communication period in rounds");
  s->add_option("--topology", sim.topology, "complete|ring|random|none");
  s->add_option("--n-neighbors", sim.n_neighbors, "neighbors per client");
  s->add_option("--seed", sim.seed, "run seed");
  s->add_option("--rounds", sim.rounds, "number of rounds");
  s->add_option("--threads", sim.threads, "client worker threads");
  s->add_option("--clients", sim.clients, "number of clients");

  BoundsArgs b;
  b.in.F_init = 1.0;
  auto* bc = app.add_subcommand("bounds", "evaluate the learning-rate condition and the convergence bound");
  bc->add_option("--eta", b.in.eta)->required();
  bc->add_option("--L", b.in.L)->required();
  bc->add_option("--tau", b.in.tau)->required();
  bc->add_option("--zeta", b.in.zeta)->required();
  bc->add_option("--sigma-sq", b.in.sigma_sq)->required();
  bc->add_option("--K", b.in.K)->required();
  bc->add_option("--T", b.in.T)->required();
  bc->add_option("--F-init", b.in.F_init, "objective at initialization")->capture_default_str();
  bc->add_option("--F-inf", b.in.F_inf, "objective lower bound")->capture_default_str();

  TopologyArgs t;
  auto* tc = app.add_subcommand("inspect-topology", "print the spectral gap of a topology");
  tc->add_option("--kind", t.kind, "complete|ring|random|none")->capture_default_str();
  tc->add_option("--K", t.k, "number of clients")->capture_default_str();
  tc->add_option("--n-neighbors", t.n_neighbors)->capture_default_str();
  tc->add_option("--seed", t.seed)->capture_default_str();
  tc->add_option("--mixing", t.mixing, "metropolis|uniform")->capture_default_str();
  tc->add_flag("--matrix", t.show_matrix, "print the mixing matrix");

  GenerateArgs g;
  auto* gc = app.add_subcommand("generate", "write a synthetic graph dataset");
  gc->add_option("--out", g.out)->required();
  gc->add_option("--graphs", g.spec.num_graphs)->capture_default_str();
  gc->add_option("--tasks", g.spec.num_tasks)->capture_default_str();
  gc->add_option("--d-input", g.spec.d_input)->capture_default_str();
  gc->add_option("--task-type", g.task_type)->capture_default_str();
  gc->add_option("--specificity", g.spec.task_specificity)->capture_default_str();
  gc->add_option("--missing-rate", g.spec.missing_rate)->capture_default_str();
  gc->add_option("--seed", g.spec.seed)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (s->parsed()) return do_simulate(sim);
    if (bc->parsed()) return do_bounds(b);
    if (tc->parsed()) return do_inspect(t);
    if (gc->parsed()) return do_generate(g);
  } catch (const fmtl::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fmtl::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
