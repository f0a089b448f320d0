#include "fmtl/tensor/ops.hpp"

#include <cmath>
#include <limits>

#include "fmtl/core/errors.hpp"

namespace fmtl::ad {

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape() == nullptr || a.tape() != b.tape()) throw LookupError("ad: operands on different tapes");
  return *a.tape();
}

Tape& tape_of(Var a) {
  if (a.tape() == nullptr) throw LookupError("ad: detached operand");
  return *a.tape();
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = fmtl::matmul(a.value(), b.value());
  const auto ia = a.id();
  const auto ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](const Tape& tp, const Matrix& g, Adjoints& adj) {
    adj.accumulate(ia, fmtl::matmul(g, fmtl::transpose(tp.value(ib))));
    adj.accumulate(ib, fmtl::matmul(fmtl::transpose(tp.value(ia)), g));
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = a.value() + b.value();
  const auto ia = a.id();
  const auto ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](const Tape&, const Matrix& g, Adjoints& adj) {
    adj.accumulate(ia, g);
    adj.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = a.value() - b.value();
  const auto ia = a.id();
  const auto ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](const Tape&, const Matrix& g, Adjoints& adj) {
    adj.accumulate(ia, g);
    adj.accumulate(ib, -1.0 * g);
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  const auto ia = a.id();
  return t.record(s * a.value(), {ia}, [ia, s](const Tape&, const Matrix& g, Adjoints& adj) {
    adj.accumulate(ia, s * g);
  });
}

Var hadamard(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = fmtl::hadamard(a.value(), b.value());
  const auto ia = a.id();
  const auto ib = b.id();
  return t.record(std::move(out), {ia, ib}, [ia, ib](const Tape& tp, const Matrix& g, Adjoints& adj) {
    adj.accumulate(ia, fmtl::hadamard(g, tp.value(ib)));
    adj.accumulate(ib, fmtl::hadamard(g, tp.value(ia)));
  });
}

Var transpose(Var a) {
  Tape& t = tape_of(a);
  const auto ia = a.id();
  return t.record(fmtl::transpose(a.value()), {ia}, [ia](const Tape&, const Matrix& g, Adjoints& adj) {
    adj.accumulate(ia, fmtl::transpose(g));
  });
}

Var hstack(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Matrix out = fmtl::hstack(a.value(), b.value());
  const auto ia = a.id();
  const auto ib = b.id();
  const auto ca = a.cols();
  const auto cb = b.cols();
  return t.record(std::move(out), {ia, ib}, [ia, ib, ca, cb](const Tape&, const Matrix& g, Adjoints& adj) {
    Matrix ga(g.rows(), ca);
    Matrix gb(g.rows(), cb);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < ca; ++c) ga(r, c) = g(r, c);
      for (std::size_t c = 0; c < cb; ++c) gb(r, c) = g(r, ca + c);
    }
    adj.accumulate(ia, std::move(ga));
    adj.accumulate(ib, std::move(gb));
  });
}

Var relu(Var a) { return leaky_relu(a, 0.0); }

// The subgradient at exactly 0 is 0 (for slope 0) / slope (otherwise).
Var leaky_relu(Var a, double slope) {
  Tape& t = tape_of(a);
  Matrix out = a.value();
  for (double& v : out.data()) v = v > 0.0 ? v : slope * v;
  const auto ia = a.id();
  return t.record(std::move(out), {ia}, [ia, slope](const Tape& tp, const Matrix& g, Adjoints& adj) {
    const Matrix& x = tp.value(ia);
    Matrix gx = g;
    auto gd = gx.data();
    auto xd = x.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= xd[i] > 0.0 ? 1.0 : slope;
    adj.accumulate(ia, std::move(gx));
  });
}

Var mean_rows(Var a) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  if (x.rows() == 0) throw ShapeError("mean_rows: zero rows");
  Matrix out(1, x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) out(0, c) += x(r, c);
  const double inv = 1.0 / static_cast<double>(x.rows());
  out *= inv;
  const auto ia = a.id();
  const auto n = x.rows();
  return t.record(std::move(out), {ia}, [ia, n, inv](const Tape&, const Matrix& g, Adjoints& adj) {
    Matrix gx(n, g.cols());
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) gx(r, c) = g(0, c) * inv;
    adj.accumulate(ia, std::move(gx));
  });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  const auto ia = a.id();
  const auto r = a.rows();
  const auto c = a.cols();
  return t.record(Matrix(1, 1, fmtl::sum(a.value())), {ia},
                  [ia, r, c](const Tape&, const Matrix& g, Adjoints& adj) {
                    adj.accumulate(ia, Matrix(r, c, g(0, 0)));
                  });
}

Var broadcast_add(Var col, Var row) {
  Tape& t = tape_of(col, row);
  const Matrix& cv = col.value();
  const Matrix& rv = row.value();
  if (cv.cols() != 1 || rv.rows() != 1) {
    throw ShapeError("broadcast_add: expected n x 1 and 1 x m, got " + cv.shape_string() + ", " +
                     rv.shape_string());
  }
  Matrix out(cv.rows(), rv.cols());
  for (std::size_t i = 0; i < cv.rows(); ++i)
    for (std::size_t j = 0; j < rv.cols(); ++j) out(i, j) = cv(i, 0) + rv(0, j);
  const auto ic = col.id();
  const auto ir = row.id();
  return t.record(std::move(out), {ic, ir}, [ic, ir](const Tape&, const Matrix& g, Adjoints& adj) {
    Matrix gc(g.rows(), 1);
    Matrix gr(1, g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) {
        gc(i, 0) += g(i, j);
        gr(0, j) += g(i, j);
      }
    adj.accumulate(ic, std::move(gc));
    adj.accumulate(ir, std::move(gr));
  });
}

Var masked_row_softmax(Var a, const Matrix& mask) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  require_same_shape(x, mask, "masked_row_softmax");
  Matrix out(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < x.cols(); ++j)
      if (mask(i, j) != 0.0) mx = std::max(mx, x(i, j));
    if (mx == -std::numeric_limits<double>::infinity()) {
      throw ShapeError("masked_row_softmax: row " + std::to_string(i) + " fully masked");
    }
    double z = 0.0;
    for (std::size_t j = 0; j < x.cols(); ++j) {
      if (mask(i, j) != 0.0) {
        out(i, j) = std::exp(x(i, j) - mx);
        z += out(i, j);
      }
    }
    for (std::size_t j = 0; j < x.cols(); ++j) out(i, j) /= z;
  }
  const auto ia = a.id();
  Matrix probs = out;
  return t.record(std::move(out), {ia}, [ia, probs = std::move(probs)](const Tape&, const Matrix& g, Adjoints& adj) {
    Matrix gx(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < g.cols(); ++j) dot += g(i, j) * probs(i, j);
      for (std::size_t j = 0; j < g.cols(); ++j) gx(i, j) = probs(i, j) * (g(i, j) - dot);
    }
    adj.accumulate(ia, std::move(gx));
  });
}

Var frobenius_sq(Var a) {
  Tape& t = tape_of(a);
  const auto ia = a.id();
  return t.record(Matrix(1, 1, fmtl::frobenius_sq(a.value())), {ia},
                  [ia](const Tape& tp, const Matrix& g, Adjoints& adj) {
                    adj.accumulate(ia, (2.0 * g(0, 0)) * tp.value(ia));
                  });
}

Var trace_quadratic(Var a, const Matrix& c) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  if (!c.is_square() || c.rows() != x.cols()) {
    throw ShapeError("trace_quadratic: " + x.shape_string() + " with " + c.shape_string());
  }
  const Matrix xc = fmtl::matmul(x, c);
  const double value = fmtl::sum(fmtl::hadamard(x, xc));
  const auto ia = a.id();
  // d/dX Tr(X C X^T) = X (C + C^T).
  const Matrix sym = c + fmtl::transpose(c);
  return t.record(Matrix(1, 1, value), {ia}, [ia, sym](const Tape& tp, const Matrix& g, Adjoints& adj) {
    adj.accumulate(ia, g(0, 0) * fmtl::matmul(tp.value(ia), sym));
  });
}

}  // namespace fmtl::ad
