#include <cmath>
#include <numeric>

#include "doctest.h"

#include "fmtl/core/errors.hpp"
#include "fmtl/mtl/loss.hpp"
#include "fmtl/mtl/regularizer.hpp"
#include "fmtl/tensor/eig.hpp"
#include "fmtl/tensor/gradcheck.hpp"

using namespace fmtl;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed, 0, 0, Purpose::test);
  Matrix m(r, c);
  for (double& x : m.data()) x = rng.uniform(-1.0, 1.0);
  return m;
}

// Random PSD unit-trace matrix.
Matrix random_covariance(std::size_t s, std::uint64_t seed) {
  const Matrix a = random_matrix(s, s, seed);
  Matrix c = matmul(transpose(a), a);
  c += Matrix::identity(s) * 0.05;
  c *= 1.0 / trace(c);
  return symmetrize(c);
}

// Gauss-Jordan inverse with partial pivoting.
Matrix gauss_inverse(Matrix a) {
  const std::size_t n = a.rows();
  Matrix inv = Matrix::identity(n);
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t p = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
    }
    for (std::size_t k = 0; k < n; ++k) {
      std::swap(a(c, k), a(p, k));
      std::swap(inv(c, k), inv(p, k));
    }
    const double d = a(c, c);
    for (std::size_t k = 0; k < n; ++k) {
      a(c, k) /= d;
      inv(c, k) /= d;
    }
    for (std::size_t r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = a(r, c);
      for (std::size_t k = 0; k < n; ++k) {
        a(r, k) -= f * a(c, k);
        inv(r, k) -= f * inv(c, k);
      }
    }
  }
  return inv;
}

double trace_objective(const Matrix& phi, const Matrix& omega, double eps) {
  const Matrix c = gauss_inverse(omega + Matrix::identity(omega.rows()) * eps);
  return trace(matmul(matmul(phi, c), transpose(phi)));
}

std::vector<std::size_t> iota_tasks(std::size_t s) {
  std::vector<std::size_t> t(s);
  std::iota(t.begin(), t.end(), 0);
  return t;
}

ModelParams head_only_params(const Matrix& phi, std::vector<std::size_t> columns) {
  ModelParams p;
  p.task_columns = std::move(columns);
  p.params.push_back({ModelParams::kTaskHead, ParamGroup::phi_task, phi});
  p.params.push_back({ModelParams::kPool, ParamGroup::phi_pool, random_matrix(3, 2, 99)});
  return p;
}

}  // namespace

TEST_CASE("masked loss trivial cases") {
  Tape tape;
  const Var z = tape.parameter("z", Matrix{{0.0, 3.0}});
  const Var all_masked = masked_loss(z, Targets{{1.0, 0.0}, {false, false}}, TaskType::classification);
  CHECK(all_masked.value()(0, 0) == 0.0);
  CHECK(backward(tape, all_masked).at("z") == Matrix(1, 2));

  Tape t2;
  const Var z2 = t2.parameter("z", Matrix{{0.0}});
  CHECK(std::abs(masked_loss(z2, Targets{{1.0}, {true}}, TaskType::classification).value()(0, 0) - std::log(2.0)) <
        1e-15);
}

TEST_CASE("masked loss matches the direct formula and finite differences") {
  Rng rng(3, 0, 0, Purpose::test);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t s = 1 + rng.below(6);
    Matrix z(1, s);
    Targets t;
    std::size_t active = 0;
    for (std::size_t i = 0; i < s; ++i) {
      z(0, i) = rng.uniform(-30.0, 30.0) * (trial % 2 == 0 ? 0.1 : 1.0);
      t.values.push_back(rng.below(2) == 0 ? 0.0 : 1.0);
      t.mask.push_back(rng.uniform() < 0.7);
      active += t.mask.back() ? 1 : 0;
    }
    for (TaskType tt : {TaskType::classification, TaskType::regression}) {
      double expect = 0.0;
      for (std::size_t i = 0; i < s; ++i) {
        if (!t.mask[i]) continue;
        const double p = 1.0 / (1.0 + std::exp(-z(0, i)));
        expect += tt == TaskType::classification
                      ? -(t.values[i] * std::log(p) + (1.0 - t.values[i]) * std::log(1.0 - p))
                      : (z(0, i) - t.values[i]) * (z(0, i) - t.values[i]);
      }
      if (active > 0) expect /= static_cast<double>(active);
      Tape tape;
      const Var v = masked_loss(tape.parameter("z", z), t, tt);
      // The naive log form loses precision once sigmoid saturates.
      const bool saturated = tt == TaskType::classification && trial % 2 == 1;
      if (!saturated) CHECK(std::abs(v.value()(0, 0) - expect) < 1e-12);

      auto f = [&](const ParamMap& pm) {
        std::vector<double> zz(pm.at("z").data().begin(), pm.at("z").data().end());
        return masked_loss_value(zz, t, tt);
      };
      // Saturated logits have gradients near 1e-13, below what differences resolve.
      if (!saturated) {
        const GradcheckReport r = finite_diff_gradcheck(f, {{"z", z}}, backward(tape, v).all());
        CHECK(r.max_rel_error < 1e-6);
      }
    }
  }
}

TEST_CASE("regularizer value: hand case, zero weights, dense oracle") {
  MtlConfig cfg;
  cfg.lambda1 = 0.001;
  {
    const ModelParams p = head_only_params(Matrix::identity(2), {0, 1});
    Tape tape;
    const ModelVars vars = register_params(tape, p);
    const double v = regularizer_value(vars, p, TaskCovariance::uniform({0, 1}), cfg).value()(0, 0);
    CHECK(v == doctest::Approx(0.002).epsilon(1e-5));
    CHECK(std::abs(v - 0.5 * 0.001 * 2.0 / (0.5 + cfg.epsilon_psd)) < 1e-15);
  }
  {
    MtlConfig zero = cfg;
    zero.lambda1 = 0.0;
    const ModelParams p = head_only_params(random_matrix(3, 2, 1), {0, 1});
    Tape tape;
    const ModelVars vars = register_params(tape, p);
    CHECK(regularizer_value(vars, p, TaskCovariance::uniform({0, 1}), zero).value()(0, 0) == 0.0);
  }
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t s = 2 + seed % 4;
    const Matrix phi = random_matrix(3, s, 10 + seed);
    const Matrix om = random_covariance(s, 20 + seed);
    MtlConfig c = cfg;
    c.lambda1 = 0.3;
    c.lambda_chi.phi_pool = 0.2;
    c.lambda_chi.phi_task = 0.1;
    const ModelParams p = head_only_params(phi, iota_tasks(s));
    Tape tape;
    const ModelVars vars = register_params(tape, p);
    const double v = regularizer_value(vars, p, TaskCovariance{om, iota_tasks(s)}, c).value()(0, 0);
    const double expect = 0.5 * 0.3 * trace_objective(phi, om, c.epsilon_psd) + 0.5 * 0.1 * frobenius_sq(phi) +
                          0.5 * 0.2 * frobenius_sq(p.get(ModelParams::kPool).value);
    CHECK(std::abs(v - expect) < 1e-10);
  }
  const ModelParams p = head_only_params(Matrix::identity(2), {0, 1});
  Tape tape;
  const ModelVars vars = register_params(tape, p);
  CHECK_THROWS_AS(regularizer_value(vars, p, TaskCovariance{Matrix{{1.5, 0}, {0, -0.5}}, {0, 1}}, cfg),
                  ValidationError);
}

TEST_CASE("grad_task_head trivial cases") {
  const Matrix phi = random_matrix(4, 3, 2);
  const Matrix dl = random_matrix(4, 3, 3);
  MtlConfig cfg;
  cfg.lambda1 = 0.0;
  const std::vector<NeighborOmega> nb{{TaskCovariance::uniform({0, 1, 2}), 10}};
  CHECK(grad_task_head(dl, phi, {0, 1, 2}, nb, cfg) == dl);

  cfg.lambda1 = 0.7;
  cfg.literal_eq11 = true;
  const Matrix g = grad_task_head(dl, phi, {0, 1, 2}, nb, cfg);
  // Omega = I/3 -> inverse 3 I (up to epsilon); weight 1/N.
  const double k = 0.7 * (1.0 / (1.0 / 3.0 + cfg.epsilon_psd)) / 10.0;
  CHECK(max_abs_diff(g, dl + phi * k) < 1e-14);
  CHECK(max_abs_diff(g, dl + phi * (0.7 * 3.0 / 10.0)) < 1e-5);

  CHECK_THROWS_AS(grad_task_head(dl, phi, {0, 1}, nb, cfg), AlignmentError);
  CHECK_THROWS_AS(grad_task_head(dl, phi, {0, 1, 2}, {{TaskCovariance::uniform({5}), 3}}, cfg), AlignmentError);
  CHECK_THROWS_AS(grad_task_head(dl, phi, {0, 1, 2}, {}, cfg), TopologyError);
}

TEST_CASE("grad_task_head equals the tape gradient of the neighborhood regularizer") {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const std::vector<std::size_t> cols{0, 2, 3};
    const Matrix phi = random_matrix(3, 3, 30 + seed);
    std::vector<NeighborOmega> nb{{TaskCovariance{random_covariance(2, 40 + seed), {0, 2}}, 7},
                                  {TaskCovariance{random_covariance(4, 50 + seed), {0, 1, 2, 3}}, 12},
                                  {TaskCovariance{random_covariance(3, 60 + seed), cols}, 5}};
    MtlConfig cfg;
    cfg.lambda1 = 0.4;
    cfg.lambda_chi.phi_task = 0.05;
    cfg.literal_eq11 = seed % 2 == 1;
    const ModelParams p = head_only_params(phi, cols);
    auto value = [&](const ParamMap& pm) {
      ModelParams q = p;
      q.task_head() = pm.at(ModelParams::kTaskHead);
      Tape tape;
      return neighborhood_regularizer(register_params(tape, q), q, nb, cfg).value()(0, 0);
    };
    const Matrix g = grad_task_head(Matrix(3, 3), phi, cols, nb, cfg);
    const GradcheckReport r = finite_diff_gradcheck(value, {{ModelParams::kTaskHead, phi}},
                                                    {{ModelParams::kTaskHead, g}});
    CHECK(r.max_rel_error < 1e-6);
  }
}

TEST_CASE("psd_sqrt") {
  CHECK(max_abs_diff(psd_sqrt(Matrix::identity(3)), Matrix::identity(3)) < 1e-14);
  CHECK(max_abs_diff(psd_sqrt(Matrix{{4, 0}, {0, 9}}), Matrix{{2, 0}, {0, 3}}) < 1e-14);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix a = random_matrix(5, 5, 70 + seed);
    const Matrix psd = symmetrize(matmul(transpose(a), a));
    const Matrix r = psd_sqrt(psd);
    CHECK(max_abs_diff(matmul(r, r), psd) < 1e-8);
    CHECK(sym_eig(r).values.back() > -1e-12);
  }
  CHECK_THROWS_AS(psd_sqrt(Matrix{{1, 1}, {0, 1}}), ValidationError);
}

TEST_CASE("closed-form omega") {
  // Orthonormal columns -> I/S.
  Matrix q(4, 3);
  q(0, 0) = 1;
  q(1, 1) = 1;
  q(3, 2) = 1;
  const TaskCovariance u = omega_closed_form(q, {0, 1, 2});
  CHECK(max_abs_diff(u.omega, Matrix::identity(3) * (1.0 / 3.0)) < 1e-14);
  CHECK_NOTHROW(validate_covariance(u));

  // Duplicate task columns: Phi^T Phi = c^2 [[1,1],[1,1]] has square root
  // (c/sqrt 2)[[1,1],[1,1]]; after unit-trace scaling every entry is 1/2.
  const double c = 1.7;
  const TaskCovariance d = omega_closed_form(Matrix{{c, c}, {0, 0}}, {0, 1});
  CHECK(max_abs_diff(d.omega, Matrix{{0.5, 0.5}, {0.5, 0.5}}) < 1e-12);
  CHECK(std::abs(trace(d.omega) - 1.0) < 1e-15);

  CHECK_THROWS_AS(omega_closed_form(Matrix(3, 2), {0, 1}), DegenerateInputError);
}

TEST_CASE("closed-form omega beats random feasible candidates") {
  const double eps = 1e-6;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t s = 2 + seed % 5;
    const Matrix phi = random_matrix(8, s, 100 + seed);
    const double best = trace_objective(phi, omega_closed_form(phi, iota_tasks(s)).omega, eps);
    for (std::uint64_t k = 0; k < 50; ++k) {
      CHECK(trace_objective(phi, random_covariance(s, 1000 * seed + k), eps) - best >= -1e-8);
    }
  }
}

TEST_CASE("f_align embeds and extracts") {
  const Matrix om = random_covariance(3, 5);
  const TaskCovariance full{om, {0, 1, 2}};
  CHECK(f_align(full, 3) == om);

  const Matrix one = f_align(TaskCovariance{Matrix{{1.0}}, {3}}, 4);
  Matrix expect(4, 4);
  expect(3, 3) = 1.0;
  CHECK(one == expect);

  Rng rng(6, 0, 0, Purpose::test);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::size_t> all = iota_tasks(9);
    rng.shuffle(all);
    const std::size_t s = 1 + rng.below(9);
    std::vector<std::size_t> tasks(all.begin(), all.begin() + static_cast<long>(s));
    const TaskCovariance c{random_covariance(s, 200 + trial), tasks};
    CHECK(f_extract(f_align(c, 9), tasks) == c.omega);
  }
  CHECK_THROWS_AS(f_align(TaskCovariance{Matrix::identity(2) * 0.5, {1, 1}}, 4), ValidationError);
  CHECK_THROWS_AS(f_align(TaskCovariance{Matrix{{1.0}}, {4}}, 4), ValidationError);
}

TEST_CASE("decentralized omega update") {
  MtlConfig cfg;
  const std::vector<std::size_t> tasks{0, 1, 2};
  const Matrix phi = random_matrix(5, 3, 7);
  const TaskCovariance cf = omega_closed_form(phi, tasks);

  // Isolated client: closed form after projection.
  const TaskCovariance iso = omega_decentralized_update(TaskCovariance::uniform(tasks), 10, {}, phi, 3, cfg);
  CHECK(max_abs_diff(iso.omega, cf.omega) < 1e-10);

  // Two clients with identical Phi holding the closed form: fixed point.
  const TaskCovariance fixed = omega_decentralized_update(cf, 10, {{cf, 10}}, phi, 3, cfg);
  CHECK(max_abs_diff(fixed.omega, cf.omega) < 1e-8);

  // Literal mode with a single member is the closed form as well.
  MtlConfig lit = cfg;
  lit.literal_eq11 = true;
  CHECK(max_abs_diff(omega_decentralized_update(cf, 4, {}, phi, 3, lit).omega, cf.omega) < 1e-10);

  // Random neighborhoods with partial overlap always land in the constraint set.
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    MtlConfig c = cfg;
    c.literal_eq11 = seed % 2 == 0;
    c.omega_lr = 0.1 + static_cast<double>(seed % 5);
    std::vector<NeighborOmega> nb{{TaskCovariance{random_covariance(2, 300 + seed), {1, 4}}, 3 + seed},
                                  {TaskCovariance{random_covariance(4, 400 + seed), {0, 1, 2, 3}}, 8}};
    const std::vector<std::size_t> own{0, 1, 3, 4};
    const TaskCovariance out = omega_decentralized_update(TaskCovariance::uniform(own), 6, nb,
                                                          random_matrix(5, 4, 500 + seed), 6, c);
    CHECK_NOTHROW(validate_covariance(out));
    CHECK(out.task_index_map == own);
  }
}
