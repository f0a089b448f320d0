#include "fmtl/mtl/loss.hpp"

#include <algorithm>
#include <cmath>

#include "fmtl/core/errors.hpp"

namespace fmtl {

bool Targets::any() const { return std::any_of(mask.begin(), mask.end(), [](bool b) { return b; }); }

Targets gather_targets(const GraphSample& s, const std::vector<std::size_t>& columns,
                       const std::set<std::size_t>& observed) {
  Targets t;
  t.values.resize(columns.size(), 0.0);
  t.mask.resize(columns.size(), false);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const std::size_t g = columns[c];
    if (g >= s.label.size()) throw ShapeError("gather_targets: task id out of range");
    t.values[c] = s.label[g];
    t.mask[c] = s.label_mask[g] && observed.count(g) != 0;
  }
  return t;
}

namespace {

// log(1 + exp(z)) - y z, stable for large |z|.
double bce_with_logits(double z, double y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::size_t active_count(const Targets& t) {
  return static_cast<std::size_t>(std::count(t.mask.begin(), t.mask.end(), true));
}

}  // namespace

double masked_loss_value(const std::vector<double>& pred, const Targets& t, TaskType task_type) {
  if (pred.size() != t.values.size() || t.mask.size() != t.values.size()) {
    throw ShapeError("masked_loss: prediction/target length mismatch");
  }
  const std::size_t n = active_count(t);
  if (n == 0) return 0.0;
  double s = 0.0;
  for (std::size_t c = 0; c < pred.size(); ++c) {
    if (!t.mask[c]) continue;
    if (task_type == TaskType::classification) {
      s += bce_with_logits(pred[c], t.values[c]);
    } else {
      const double d = pred[c] - t.values[c];
      s += d * d;
    }
  }
  return s / static_cast<double>(n);
}

Var masked_loss(Var predictions, const Targets& t, TaskType task_type) {
  Tape& tape = *predictions.tape();
  const Matrix& p = predictions.value();
  if (p.rows() != 1 || p.cols() != t.values.size() || t.mask.size() != t.values.size()) {
    throw ShapeError("masked_loss: predictions " + p.shape_string() + " vs " + std::to_string(t.values.size()) +
                     " targets");
  }
  std::vector<double> pv(p.data().begin(), p.data().end());
  const double value = masked_loss_value(pv, t, task_type);
  const std::size_t n = active_count(t);
  const auto id = predictions.id();
  return tape.record(Matrix(1, 1, value), {id}, [id, t, n, task_type](const Tape& tp, const Matrix& g, Adjoints& adj) {
    const Matrix& z = tp.value(id);
    Matrix gz(1, z.cols());
    if (n != 0) {
      const double inv = g(0, 0) / static_cast<double>(n);
      for (std::size_t c = 0; c < z.cols(); ++c) {
        if (!t.mask[c]) continue;
        gz(0, c) = task_type == TaskType::classification ? inv * (sigmoid(z(0, c)) - t.values[c])
                                                         : inv * 2.0 * (z(0, c) - t.values[c]);
      }
    }
    adj.accumulate(id, std::move(gz));
  });
}

}  // namespace fmtl
