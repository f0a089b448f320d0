#include "fmtl/fedsim/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <thread>

#include "fmtl/core/errors.hpp"
#include "fmtl/core/log.hpp"

namespace fmtl {

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  std::vector<std::exception_ptr> errors(n);
  const std::size_t workers = std::min(std::max<std::size_t>(threads, 1), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

ConnectionMatrix effective_topology(const SimConfig& cfg) {
  const std::size_t k = cfg.partition.clients;
  switch (cfg.algorithm) {
    case Algorithm::spreadgnn: return build_topology(cfg.topology, k);
    case Algorithm::fedgmtl:
    case Algorithm::fedavg: return build_topology(TopologyKind::complete, k, 0, 0);
    case Algorithm::isolated: return build_topology(TopologyKind::none, k, 0, 0);
  }
  throw ConfigError("unknown algorithm");
}

}  // namespace

Simulator::Simulator(SimConfig cfg, const Dataset& data)
    : cfg_(std::move(cfg)), manifest_(data.manifest), conn_(effective_topology(cfg_)) {
  validate_sim_config(cfg_);
  validate_manifest(manifest_);
  const std::size_t s_global = manifest_.num_tasks;

  Split split = train_test_split(data.samples, cfg_.test_fraction, cfg_.seed);
  if (manifest_.task_type == TaskType::regression && cfg_.standardize_labels) {
    standardizer_ = LabelStandardizer::fit(split.train, s_global);
    standardizer_->apply(split.train);
    standardizer_->apply(split.test);
  }
  test_ = std::move(split.test);

  std::vector<ClientDataset> datasets = dirichlet_quantity_split(split.train, cfg_.partition);
  const auto masks = assign_task_masks(cfg_.partition, s_global);
  for (std::size_t k = 0; k < datasets.size(); ++k) datasets[k] = apply_mask(std::move(datasets[k]), masks[k]);

  if (cfg_.algorithm == Algorithm::spreadgnn) {
    mix_ = mixing_matrix(conn_, cfg_.topology.mixing);
    try {
      zeta_ = spectral_gap(*mix_);
    } catch (const TopologyError& e) {
      log::warn(std::string("spectral gap unavailable: ") + e.what());
      zeta_ = std::numeric_limits<double>::quiet_NaN();
    }
  } else {
    zeta_ = cfg_.algorithm == Algorithm::isolated && datasets.size() > 1 ? 1.0 : 0.0;
  }

  states_.resize(datasets.size());
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    ClientState& st = states_[k];
    st.client_id = k;
    st.neighborhood = conn_.neighborhood(k);
    std::set<std::size_t> uni;
    for (std::size_t j : st.neighborhood) uni.insert(datasets[j].task_set.begin(), datasets[j].task_set.end());
    std::vector<std::size_t> columns(uni.begin(), uni.end());
    st.params = init_model(cfg_.model, manifest_.d_input, columns, cfg_.seed);
    st.omega = TaskCovariance::uniform(columns);
  }
  for (std::size_t k = 0; k < datasets.size(); ++k) {
    if (datasets[k].degenerate) {
      throw TrainingStepError("client " + std::to_string(k) + " has no observed label after masking");
    }
    states_[k].dataset = std::move(datasets[k]);
  }

  std::size_t n_total = 0;
  for (const auto& st : states_) n_total += st.dataset.samples.size();
  for (const auto& st : states_) {
    initial_loss_ += static_cast<double>(st.dataset.samples.size()) / static_cast<double>(n_total) *
                     training_loss(st, manifest_.task_type);
  }
}

double Simulator::averaged_gradient_norm_sq() const {
  const auto mean = shared_mean(states_);
  std::size_t n_total = 0;
  for (const auto& st : states_) n_total += st.dataset.samples.size();
  MtlConfig none;
  none.lambda1 = 0.0;
  none.lambda_chi = GroupWeights{};
  std::vector<std::map<std::string, Matrix>> grads(states_.size());
  parallel_for(states_.size(), cfg_.threads, [&](std::size_t k) {
    const ClientState& st = states_[k];
    ModelParams p = st.params;
    for (Param& q : p.params) {
      if (is_shared(q.group)) q.value = mean.at(q.name);
    }
    std::vector<const GraphSample*> batch;
    for (const auto& s : st.dataset.samples) batch.push_back(&s);
    grads[k] = objective_gradient(p, batch, st.dataset.task_set, manifest_.task_type, {}, none, nullptr).grads;
  });
  double total = 0.0;
  for (const auto& [name, m] : mean) {
    Matrix acc(m.rows(), m.cols());
    for (std::size_t k = 0; k < states_.size(); ++k) {
      Matrix g = grads[k].at(name);
      g *= static_cast<double>(states_[k].dataset.samples.size()) / static_cast<double>(n_total);
      acc += g;
    }
    total += frobenius_sq(acc);
  }
  return total;
}

MetricsRecord Simulator::make_record(std::vector<double> losses) {
  MetricsRecord r;
  r.round = round_;
  r.client_loss = std::move(losses);
  r.client_metric.resize(states_.size());
  const LabelStandardizer* std_ptr = standardizer_ ? &*standardizer_ : nullptr;
  parallel_for(states_.size(), cfg_.threads, [&](std::size_t k) {
    r.client_metric[k] = evaluate_model(states_[k].params, test_, manifest_, std_ptr).metric;
  });
  const double inv = 1.0 / static_cast<double>(states_.size());
  for (std::size_t k = 0; k < states_.size(); ++k) {
    r.mean_metric += r.client_metric[k] * inv;
    r.mean_loss += r.client_loss[k] * inv;
  }
  r.consensus = consensus_distance(states_);
  r.grad_norm_sq = cfg_.track_grad_norm ? averaged_gradient_norm_sq() : std::numeric_limits<double>::quiet_NaN();
  return r;
}

MetricsRecord Simulator::initial_record() {
  std::vector<double> losses(states_.size());
  for (std::size_t k = 0; k < states_.size(); ++k) losses[k] = training_loss(states_[k], manifest_.task_type);
  return make_record(std::move(losses));
}

MetricsRecord Simulator::step() {
  ++round_;
  const std::size_t s_global = manifest_.num_tasks;
  std::vector<NeighborOmega> snap;
  snap.reserve(states_.size());
  for (const auto& st : states_) snap.push_back(NeighborOmega{st.omega, st.dataset.samples.size()});

  const bool mtl = uses_omega(cfg_.algorithm);
  std::vector<double> losses(states_.size());
  parallel_for(states_.size(), cfg_.threads, [&](std::size_t k) {
    std::vector<NeighborOmega> others;
    if (cfg_.algorithm == Algorithm::spreadgnn) {
      for (std::size_t j : states_[k].neighborhood) {
        if (j != k) others.push_back(snap[j]);
      }
    }
    losses[k] = local_train(states_[k], others, cfg_, manifest_.task_type, round_, mtl);
  });

  if (round_ % cfg_.tau == 0) {
    switch (cfg_.algorithm) {
      case Algorithm::spreadgnn:
        omega_exchange(states_, conn_, cfg_.mtl, s_global);
        periodic_average(states_, *mix_, cfg_.literal_avg);
        break;
      case Algorithm::fedgmtl:
        server_omega(states_, cfg_.mtl, s_global);
        server_average(states_);
        break;
      case Algorithm::fedavg:
        server_average(states_);
        break;
      case Algorithm::isolated:
        break;
    }
  }
  return make_record(std::move(losses));
}

std::vector<MetricsRecord> Simulator::run(const RoundCallback& on_round) {
  std::vector<MetricsRecord> out;
  out.reserve(cfg_.rounds + 1);
  out.push_back(initial_record());
  if (on_round) on_round(out.back());
  while (round_ < cfg_.rounds) {
    out.push_back(step());
    if (on_round) on_round(out.back());
  }
  return out;
}

}  // namespace fmtl
