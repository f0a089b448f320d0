// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fmtl/bounds/bounds.hpp"
#include "fmtl/core/errors.hpp"
#include "fmtl/core/log.hpp"
#include "fmtl/fedsim/metrics_io.hpp"
#include "fmtl/fedsim/simulator.hpp"
#include "fmtl/graph/synthetic.hpp"
#include "fmtl/partition/partition.hpp"
#include "fmtl/tensor/eig.hpp"
#include "fmtl/tensor/gradcheck.hpp"
#include "fmtl/topology/topology.hpp"

using namespace fmtl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Captures std::cerr for the lifetime of the object.
struct CerrCapture {
  std::ostringstream buf;
  std::streambuf* old;
  CerrCapture() : old(std::cerr.rdbuf(buf.rdbuf())) {}
  ~CerrCapture() { std::cerr.rdbuf(old); }
};

// ---------------------------------------------------------------- 1
Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  SyntheticSpec gen;
  gen.num_graphs = 30;
  gen.num_tasks = 4;
  gen.d_input = 8;
  gen.seed = 11;
  const Dataset ds = generate_synthetic(gen);
  double worst = 0.0;
  std::size_t checked = 0, kinks = 0;
  for (GnnVariant v : {GnnVariant::sage, GnnVariant::gat}) {
    SimConfig cfg;
    cfg.partition.clients = 3;
    cfg.partition.alpha = 5.0;
    cfg.topology.kind = TopologyKind::complete;
    cfg.model.variant = v;
    cfg.model.hidden = 16;
    cfg.model.node_dim = 16;
    cfg.model.pool_dim = 16;
    cfg.model.dropout = 0.0;
    cfg.mtl.lambda1 = 0.1;
    cfg.mtl.lambda_chi = GroupWeights{1e-3, 2e-3, 3e-3, 4e-3};
    cfg.test_fraction = 0.1;
    Simulator sim(cfg, ds);
    const auto& states = sim.clients();
    for (const ClientState& st : states) {
      std::vector<const GraphSample*> batch;
      for (const auto& s : st.dataset.samples) batch.push_back(&s);
      std::vector<NeighborOmega> omegas;
      for (std::size_t j : st.neighborhood) {
        const ClientState& nb = states[j];
        Matrix head = nb.params.task_head();
        Rng rng(j, 0, 0, Purpose::test);
        for (double& x : head.data()) x += rng.normal();
        omegas.push_back({omega_closed_form(head, nb.params.task_columns), nb.dataset.samples.size()});
      }
      const ObjectiveGradient g =
          objective_gradient(st.params, batch, st.dataset.task_set, TaskType::classification, omegas, cfg.mtl, nullptr);
      ParamMap pm;
      for (const auto& p : st.params.params) pm[p.name] = p.value;
      auto f = [&](const ParamMap& q) {
        ModelParams mp = st.params;
        for (auto& p : mp.params) p.value = q.at(p.name);
        return objective_gradient_on_tape(mp, batch, st.dataset.task_set, TaskType::classification, omegas, cfg.mtl)
            .objective;
      };
      const GradcheckReport r = finite_diff_gradcheck(f, pm, g.grads);
      worst = std::max(worst, r.max_rel_error);
      kinks += r.non_smooth_count;
      checked += r.checked;
    }
  }
  const double secs = seconds_since(t0);
  // Coordinates whose step straddles a ReLU kink are excluded; there must be few.
  return {worst < 1e-4 && secs < 60.0 && kinks * 20 <= checked,
          "max rel error " + fmt(worst) + " over " + std::to_string(checked) + " coords (" + std::to_string(kinks) +
              " at kinks), " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------- 2
Outcome centralized_limit() {
  SyntheticSpec gen;
  gen.num_graphs = 80;
  gen.seed = 21;
  const Dataset ds = generate_synthetic(gen);
  SimConfig cfg;
  cfg.rounds = 20;
  cfg.lr = 0.05;
  cfg.optimizer.kind = OptimizerKind::sgd;
  cfg.model.hidden = cfg.model.node_dim = cfg.model.pool_dim = 8;
  cfg.model.dropout = 0.3;
  cfg.batch_size = 8;
  cfg.partition.clients = 4;
  cfg.partition.mask_mode = MaskMode::all;
  cfg.topology.kind = TopologyKind::complete;
  cfg.tau = 1;
  cfg.mtl.lambda1 = 0.01;
  cfg.track_grad_norm = false;
  cfg.algorithm = Algorithm::spreadgnn;
  Simulator a(cfg, ds);
  cfg.algorithm = Algorithm::fedgmtl;
  Simulator b(cfg, ds);
  double worst = 0.0;
  for (std::size_t t = 0; t < cfg.rounds; ++t) {
    a.step();
    b.step();
    for (std::size_t k = 0; k < a.clients().size(); ++k) {
      const auto& pa = a.clients()[k].params.params;
      const auto& pb = b.clients()[k].params.params;
      for (std::size_t i = 0; i < pa.size(); ++i) {
        if (is_shared(pa[i].group)) worst = std::max(worst, max_abs_diff(pa[i].value, pb[i].value));
      }
    }
  }
  return {worst <= 1e-10, "max shared-parameter gap " + fmt(worst) + " over 20 rounds"};
}

// ---------------------------------------------------------------- 3
double trace_objective(const Matrix& phi, const Matrix& omega) {
  const Matrix inv = spectral_apply(sym_eig(omega), [](double x) { return 1.0 / x; });
  return trace(matmul(matmul(phi, inv), transpose(phi)));
}

Outcome omega_optimality() {
  double worst = 1e300;
  for (std::size_t trial = 0; trial < 100; ++trial) {
    Rng rng(31, trial, 0, Purpose::test);
    const std::size_t s = 2 + rng.below(5);
    Matrix phi(8, s);
    for (double& x : phi.data()) x = rng.normal();
    std::vector<std::size_t> tasks(s);
    std::iota(tasks.begin(), tasks.end(), 0);
    const double best = trace_objective(phi, omega_closed_form(phi, tasks).omega);
    for (std::size_t c = 0; c < 200; ++c) {
      Matrix b(s, s);
      for (double& x : b.data()) x = rng.normal();
      Matrix cand = matmul(b, transpose(b));
      cand *= 1.0 / trace(cand);
      worst = std::min(worst, trace_objective(phi, cand) - best);
    }
  }
  return {worst >= -1e-8, "min (candidate - closed form) objective " + fmt(worst)};
}

// ---------------------------------------------------------------- 4
Outcome topology_spectra() {
  const double complete = spectral_gap(mixing_matrix(build_topology(TopologyKind::complete, 8, 0, 0)));
  const double ring = spectral_gap(mixing_matrix(build_topology(TopologyKind::ring, 4, 2, 0), MixingRule::uniform));
  // Circulant oracle: eigenvalues (1 + 2 cos(2 pi j / 4)) / 3.
  double oracle = 0.0;
  for (int j = 1; j < 4; ++j) oracle = std::max(oracle, std::abs((1.0 + 2.0 * std::cos(2.0 * M_PI * j / 4.0)) / 3.0));
  double identity = 0.0;
  bool warned = false, flagged = false;
  {
    CerrCapture cap;
    const MixingMatrix m = mixing_matrix(build_topology(TopologyKind::none, 4, 0, 0));
    identity = spectral_gap(m);
    flagged = !m.connected;
    warned = cap.buf.str().find("disconnected") != std::string::npos;
  }
  const bool ok = std::abs(complete) <= 1e-12 && std::abs(ring - 1.0 / 3.0) <= 1e-10 &&
                  std::abs(ring - oracle) <= 1e-10 && std::abs(identity - 1.0) <= 1e-12 && warned && flagged;
  return {ok, "complete " + fmt(complete) + ", ring C4 " + fmt(ring) + ", identity " + fmt(identity) +
                  (warned ? " (warned)" : " (no warning)")};
}

// ---------------------------------------------------------------- 5
Outcome bound_evaluator() {
  log::quiet() = true;
  const std::vector<double> etas{0.001, 0.05};
  const std::vector<double> taus{1, 2, 5, 10, 20};
  const std::vector<double> zetas{0.0, 0.2, 0.5, 0.7, 0.9};
  double worst = 0.0;
  bool monotone = true;
  std::size_t points = 0;
  for (double eta : etas) {
    for (std::size_t iz = 0; iz < zetas.size(); ++iz) {
      for (std::size_t it = 0; it < taus.size(); ++it) {
        BoundInputs in;
        in.eta = eta;
        in.L = 2.0;
        in.tau = taus[it];
        in.zeta = zetas[iz];
        in.sigma_sq = 0.7;
        in.K = 8;
        in.T = 150;
        in.F_init = 1.3;
        in.F_inf = 0.1;
        const double z = in.zeta, el = in.eta * in.L;
        const double lhs_ref = el + el * el * in.tau * in.tau / (1.0 - z) *
                                        (2.0 * z * z / (1.0 + z) + 2.0 * z / (1.0 - z) + (in.tau - 1.0) / in.tau);
        const double bound_ref = 2.0 * (in.F_init - in.F_inf) / (in.eta * in.T) + el * in.sigma_sq / in.K +
                                 el * el * in.sigma_sq * ((1.0 + z * z) / (1.0 - z * z) * in.tau - 1.0);
        const double lhs = lr_condition(in).lhs;
        const double bound = convergence_bound(in).value;
        worst = std::max({worst, std::abs(lhs - lhs_ref) / std::max(1.0, std::abs(lhs_ref)),
                          std::abs(bound - bound_ref) / std::max(1.0, std::abs(bound_ref))});
        if (it > 0) {
          BoundInputs prev = in;
          prev.tau = taus[it - 1];
          monotone = monotone && convergence_bound(prev).value <= bound && lr_condition(prev).lhs <= lhs;
        }
        if (iz > 0) {
          BoundInputs prev = in;
          prev.zeta = zetas[iz - 1];
          monotone = monotone && convergence_bound(prev).value <= bound && lr_condition(prev).lhs <= lhs;
        }
        ++points;
      }
    }
  }
  BoundInputs flat;
  flat.eta = 0.05;
  flat.zeta = 0.0;
  flat.tau = 1.0;
  flat.T = 10;
  flat.F_init = 1.0;
  const bool zero_third = convergence_bound(flat).network_term == 0.0;
  log::quiet() = false;
  return {worst <= 1e-12 && monotone && zero_third && points == 50,
          std::to_string(points) + " grid points, max rel gap " + fmt(worst) + (monotone ? ", monotone" : ", NOT monotone") +
              (zero_third ? ", third term zero" : ", third term nonzero")};
}

// ---------------------------------------------------------------- 6
Outcome averaging() {
  SyntheticSpec gen;
  gen.num_graphs = 160;
  gen.seed = 41;
  const Dataset ds = generate_synthetic(gen);
  double worst_mean = 0.0, worst_excess = -1.0;
  bool contracts = true;
  for (TopologyKind kind : {TopologyKind::ring, TopologyKind::random}) {
    SimConfig cfg;
    cfg.partition.clients = 8;
    cfg.partition.alpha = 3.0;
    cfg.partition.mask_mode = MaskMode::all;
    cfg.model.hidden = cfg.model.node_dim = cfg.model.pool_dim = 8;
    cfg.topology.kind = kind;
    cfg.topology.n_neighbors = kind == TopologyKind::ring ? 2 : 3;
    cfg.topology.seed = 5;
    cfg.lr = 0.0;
    cfg.track_grad_norm = false;
    Simulator sim(cfg, ds);
    for (std::size_t k = 0; k < sim.clients().size(); ++k) {
      Rng rng(43, k, 0, Purpose::test);
      for (auto& p : sim.clients()[k].params.params) {
        for (double& x : p.value.data()) x += rng.normal();
      }
    }
    std::vector<ClientState> probe = sim.clients();
    const auto before = shared_mean(probe);
    periodic_average(probe, *sim.mixing());
    const auto after = shared_mean(probe);
    for (const auto& [name, m] : before) worst_mean = std::max(worst_mean, max_abs_diff(m, after.at(name)));

    const double z2 = sim.zeta() * sim.zeta();
    double prev = consensus_distance(sim.clients());
    for (int t = 0; t < 10; ++t) {
      const double cur = sim.step().consensus;
      if (prev > 1e-200) {
        worst_excess = std::max(worst_excess, cur / prev - z2);
        contracts = contracts && cur <= (z2 + 1e-10) * prev;
      }
      prev = cur;
    }
  }
  return {worst_mean <= 1e-12 && contracts,
          "mean drift " + fmt(worst_mean) + ", max (contraction ratio - zeta^2) " + fmt(worst_excess)};
}

// ---------------------------------------------------------------- 7
Outcome partitioner() {
  bool ok = true;
  std::size_t cases = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (std::size_t k = 4; k <= 8; ++k) {
      for (double alpha : {0.1, 0.5, 3.0}) {
        PartitionConfig cfg;
        cfg.clients = k;
        cfg.alpha = alpha;
        cfg.seed = seed;
        const std::size_t n = 40 + seed;
        const auto counts = dirichlet_counts(n, cfg);
        ok = ok && counts.size() == k && std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == n &&
             *std::min_element(counts.begin(), counts.end()) >= 1;
        const std::size_t tasks = k + seed % 5;
        const auto masks = assign_task_masks(cfg, tasks);
        std::vector<int> seen(tasks, 0);
        for (const auto& m : masks) {
          ok = ok && !m.empty();
          for (std::size_t t : m) ++seen[t];
        }
        ok = ok && std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
        ++cases;
      }
    }
  }
  return {ok, std::to_string(cases) + " configurations"};
}

// ---------------------------------------------------------------- 8
double final_auc(const Dataset& ds, const SimConfig& cfg) {
  Simulator sim(cfg, ds);
  return sim.run().back().mean_metric;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

Outcome learning_benefit() {
  const auto t0 = Clock::now();
  std::vector<double> ring, complete, isolated;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SyntheticSpec gen;
    gen.num_graphs = 480;
    gen.num_tasks = 4;
    gen.d_input = 8;
    gen.task_specificity = 0.3;
    gen.seed = 100 + seed;
    const Dataset ds = generate_synthetic(gen);
    SimConfig cfg;
    cfg.seed = seed;
    cfg.partition.seed = seed;
    cfg.topology.seed = seed;
    cfg.rounds = 40;
    cfg.lr = 0.01;
    cfg.batch_size = 8;
    cfg.model.hidden = cfg.model.node_dim = cfg.model.pool_dim = 16;
    cfg.partition.clients = 8;
    cfg.partition.alpha = 3.0;
    cfg.partition.mask_mode = MaskMode::custom;
    cfg.partition.custom_masks = {{0}, {1}, {2}, {3}, {0}, {1}, {2}, {3}};
    cfg.topology.kind = TopologyKind::ring;
    cfg.topology.n_neighbors = 2;
    cfg.tau = 1;
    cfg.track_grad_norm = false;
    cfg.threads = 4;
    cfg.algorithm = Algorithm::spreadgnn;
    ring.push_back(final_auc(ds, cfg));
    cfg.topology.kind = TopologyKind::complete;
    complete.push_back(final_auc(ds, cfg));
    cfg.algorithm = Algorithm::isolated;
    isolated.push_back(final_auc(ds, cfg));
  }
  const double r = median(ring), c = median(complete), i = median(isolated);
  const double secs = seconds_since(t0);
  return {r - i >= 0.03 && c >= r - 0.02 && secs < 600.0,
          "median AUC ring " + fmt(r) + ", complete " + fmt(c) + ", isolated " + fmt(i) + ", " + fmt(secs) + " s"};
}

// ---------------------------------------------------------------- 9
Outcome auc_oracle() {
  std::size_t mismatches = 0;
  for (std::size_t trial = 0; trial < 1000; ++trial) {
    Rng rng(91, trial, 0, Purpose::test);
    const std::size_t n = 2 + rng.below(15);
    std::vector<double> s(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng.below(6)) / 5.0;
      y[i] = static_cast<double>(rng.below(2));
    }
    const std::size_t neg = rng.below(n);
    y[neg] = 0.0;
    y[(neg + 1 + rng.below(n - 1)) % n] = 1.0;
    double wins = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (y[a] != 1.0 || y[b] != 0.0) continue;
        pairs += 1.0;
        wins += s[a] > s[b] ? 1.0 : (s[a] == s[b] ? 0.5 : 0.0);
      }
    }
    if (roc_auc(s, y) != wins / pairs) ++mismatches;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches in 1000 instances"};
}

// ---------------------------------------------------------------- 10
Outcome determinism() {
  SyntheticSpec gen;
  gen.num_graphs = 120;
  gen.seed = 7;
  const Dataset ds = generate_synthetic(gen);
  bool ok = true;
  for (Algorithm algo : {Algorithm::spreadgnn, Algorithm::fedgmtl, Algorithm::fedavg, Algorithm::isolated}) {
    SimConfig cfg;
    cfg.algorithm = algo;
    cfg.rounds = 5;
    cfg.lr = 0.01;
    cfg.batch_size = 4;
    cfg.model.hidden = cfg.model.node_dim = cfg.model.pool_dim = 8;
    cfg.partition.clients = 4;
    cfg.topology.kind = TopologyKind::random;
    cfg.topology.n_neighbors = 2;
    cfg.threads = 1;
    const std::string base = metrics_csv(Simulator(cfg, ds).run());
    ok = ok && base == metrics_csv(Simulator(cfg, ds).run());
    cfg.threads = 4;
    ok = ok && base == metrics_csv(Simulator(cfg, ds).run());
  }
  return {ok, "4 algorithms, threads 1 and 4, repeated"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient fidelity", gradient_fidelity},   {"centralized limit", centralized_limit},
      {"omega optimality", omega_optimality},     {"topology spectra", topology_spectra},
      {"bound evaluator", bound_evaluator},       {"averaging conservation", averaging},
      {"partitioner invariants", partitioner},    {"learning benefit", learning_benefit},
      {"auc oracle", auc_oracle},                 {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << (i + 1) << " " << criteria[i].first << ": " << o.detail << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
