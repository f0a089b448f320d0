#include "fmtl/fedsim/communication.hpp"

#include <algorithm>

#include "fmtl/core/errors.hpp"

namespace fmtl {

bool is_shared(ParamGroup g) { return g != ParamGroup::phi_task; }

namespace {

void require_matching_shapes(const std::vector<ClientState>& states) {
  const auto& ref = states.front().params.params;
  for (const auto& s : states) {
    const auto& ps = s.params.params;
    if (ps.size() != ref.size()) throw ShapeError("clients disagree on the parameter list");
    for (std::size_t i = 0; i < ps.size(); ++i) {
      if (ps[i].name != ref[i].name) throw ShapeError("clients disagree on parameter order");
      if (is_shared(ps[i].group) && (ps[i].value.rows() != ref[i].value.rows() ||
                                     ps[i].value.cols() != ref[i].value.cols())) {
        throw ShapeError("shared parameter " + ps[i].name + " has different shapes across clients");
      }
    }
  }
}

// Combines head columns: new column t of client k is sum_j w(k,j) phi_j[:,t]
// over neighbors j that hold t, divided by the sum of those weights.
Matrix combine_head(const std::vector<ModelParams>& snap, std::size_t k, const std::vector<double>& weights) {
  const ModelParams& own = snap[k];
  Matrix out(own.task_head().rows(), own.task_head().cols());
  for (std::size_t c = 0; c < own.task_columns.size(); ++c) {
    const std::size_t task = own.task_columns[c];
    double wsum = 0.0;
    for (std::size_t j = 0; j < snap.size(); ++j) {
      if (weights[j] == 0.0) continue;
      const long cj = snap[j].column_of(task);
      if (cj < 0) continue;
      const Matrix& hj = snap[j].task_head();
      for (std::size_t r = 0; r < out.rows(); ++r) out(r, c) += weights[j] * hj(r, static_cast<std::size_t>(cj));
      wsum += weights[j];
    }
    for (std::size_t r = 0; r < out.rows(); ++r) out(r, c) /= wsum;
  }
  return out;
}

void apply_weights(std::vector<ClientState>& states, const std::vector<std::vector<double>>& shared_w,
                   const std::vector<std::vector<double>>& head_w) {
  require_matching_shapes(states);
  std::vector<ModelParams> snap;
  snap.reserve(states.size());
  for (const auto& s : states) snap.push_back(s.params);
  for (std::size_t k = 0; k < states.size(); ++k) {
    auto& ps = states[k].params.params;
    for (std::size_t p = 0; p < ps.size(); ++p) {
      if (!is_shared(ps[p].group)) continue;
      Matrix acc(ps[p].value.rows(), ps[p].value.cols());
      for (std::size_t j = 0; j < states.size(); ++j) {
        if (shared_w[k][j] == 0.0) continue;
        Matrix term = snap[j].params[p].value;
        term *= shared_w[k][j];
        acc += term;
      }
      ps[p].value = std::move(acc);
    }
    states[k].params.task_head() = combine_head(snap, k, head_w[k]);
  }
}

}  // namespace

void periodic_average(std::vector<ClientState>& states, const MixingMatrix& mix, bool literal) {
  const std::size_t k = states.size();
  if (mix.weights.rows() != k || mix.weights.cols() != k) {
    throw ShapeError("mixing matrix " + mix.weights.shape_string() + " for " + std::to_string(k) + " clients");
  }
  std::vector<std::vector<double>> head_w(k, std::vector<double>(k));
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) head_w[i][j] = mix.weights(i, j);
  }
  std::vector<std::vector<double>> shared_w = head_w;
  if (literal) {
    for (std::size_t i = 0; i < k; ++i) {
      std::size_t members = 0;
      for (std::size_t j = 0; j < k; ++j) members += mix.weights(i, j) != 0.0 ? 1 : 0;
      for (std::size_t j = 0; j < k; ++j) {
        shared_w[i][j] = mix.weights(i, j) != 0.0
                             ? 1.0 / static_cast<double>(states[j].dataset.samples.size()) / static_cast<double>(members)
                             : 0.0;
      }
    }
  }
  apply_weights(states, shared_w, head_w);
}

void server_average(std::vector<ClientState>& states) {
  const std::size_t k = states.size();
  std::vector<std::vector<double>> w(k, std::vector<double>(k, 1.0 / static_cast<double>(k)));
  apply_weights(states, w, w);
}

void omega_exchange(std::vector<ClientState>& states, const ConnectionMatrix& conn, const MtlConfig& cfg,
                    std::size_t global_task_count) {
  if (conn.size() != states.size()) throw TopologyError("topology size does not match client count");
  std::vector<NeighborOmega> snap;
  snap.reserve(states.size());
  for (const auto& s : states) snap.push_back(NeighborOmega{s.omega, s.dataset.samples.size()});
  for (std::size_t k = 0; k < states.size(); ++k) {
    if (!conn.connected(k, k)) throw TopologyError("client " + std::to_string(k) + " is not in its own neighborhood");
    std::vector<NeighborOmega> others;
    for (std::size_t j : conn.neighborhood(k)) {
      if (j != k) others.push_back(snap[j]);
    }
    states[k].omega = omega_decentralized_update(snap[k].omega, snap[k].n_samples, others,
                                                 states[k].params.task_head(), global_task_count, cfg);
  }
}

void server_omega(std::vector<ClientState>& states, const MtlConfig& cfg, std::size_t global_task_count) {
  std::vector<std::size_t> ns;
  for (const auto& s : states) ns.push_back(s.dataset.samples.size());
  MtlConfig normalized = cfg;
  normalized.literal_eq11 = false;
  const std::vector<double> w = neighborhood_weights(ns, normalized);
  Matrix acc(global_task_count, global_task_count);
  for (std::size_t k = 0; k < states.size(); ++k) {
    Matrix a = f_align(omega_closed_form(states[k].params.task_head(), states[k].params.task_columns),
                       global_task_count);
    a *= w[k];
    acc += a;
  }
  acc *= cfg.omega_lr;
  for (auto& s : states) {
    s.omega = TaskCovariance{project_covariance(f_extract(acc, s.params.task_columns), cfg.epsilon_psd),
                             s.params.task_columns};
  }
}

std::map<std::string, Matrix> shared_mean(const std::vector<ClientState>& states) {
  require_matching_shapes(states);
  std::map<std::string, Matrix> mean;
  const double inv = 1.0 / static_cast<double>(states.size());
  for (const auto& s : states) {
    for (const Param& p : s.params.params) {
      if (!is_shared(p.group)) continue;
      Matrix term = p.value;
      term *= inv;
      auto [it, fresh] = mean.try_emplace(p.name, std::move(term));
      if (!fresh) it->second += (Matrix(p.value) *= inv);
    }
  }
  return mean;
}

double consensus_distance(const std::vector<ClientState>& states) {
  const auto mean = shared_mean(states);
  double d = 0.0;
  for (const auto& s : states) {
    for (const Param& p : s.params.params) {
      if (is_shared(p.group)) d += frobenius_sq(mean.at(p.name) - p.value);
    }
  }
  return d;
}

}  // namespace fmtl
