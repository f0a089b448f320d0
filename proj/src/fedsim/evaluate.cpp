#include "fmtl/fedsim/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmtl/core/errors.hpp"
#include "fmtl/gnn/layers.hpp"

namespace fmtl {

double roc_auc(const std::vector<double>& scores, const std::vector<double>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("roc_auc: scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j+1 share their average.
    const double avg_rank = 0.5 * static_cast<double>(i + j + 2);
    for (std::size_t r = i; r <= j; ++r) {
      const double y = labels[order[r]];
      if (y != 0.0 && y != 1.0) throw EvaluationError("roc_auc: labels must be 0 or 1");
      if (y == 1.0) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw EvaluationError("roc_auc: both classes must be present");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double mean_absolute_error(const std::vector<double>& predictions, const std::vector<double>& targets) {
  if (predictions.size() != targets.size()) throw ShapeError("mae: length mismatch");
  if (predictions.empty()) throw EvaluationError("mae: no targets");
  double s = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) s += std::abs(predictions[i] - targets[i]);
  return s / static_cast<double>(predictions.size());
}

ClientEvaluation evaluate_model(const ModelParams& params, const std::vector<GraphSample>& test,
                                const DatasetManifest& manifest, const LabelStandardizer* standardizer) {
  const std::size_t cols = params.task_columns.size();
  std::vector<std::vector<double>> preds(cols), targets(cols);
  for (const auto& s : test) {
    const std::vector<double> p = predict(params, s);
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t task = params.task_columns[c];
      if (!s.label_mask[task]) continue;
      double y = s.label[task];
      double yhat = p[c];
      if (standardizer != nullptr) {
        y = standardizer->invert(task, y);
        yhat = standardizer->invert(task, yhat);
      }
      preds[c].push_back(yhat);
      targets[c].push_back(y);
    }
  }
  ClientEvaluation out;
  for (std::size_t t = 0; t < manifest.num_tasks; ++t) {
    if (params.column_of(t) < 0) out.absent_tasks.push_back(t);
  }
  double sum = 0.0;
  for (std::size_t c = 0; c < cols; ++c) {
    const std::size_t task = params.task_columns[c];
    if (manifest.task_type == TaskType::classification) {
      const auto pos = std::count(targets[c].begin(), targets[c].end(), 1.0);
      if (pos == 0 || static_cast<std::size_t>(pos) == targets[c].size()) continue;
      out.per_task[task] = roc_auc(preds[c], targets[c]);
    } else {
      if (targets[c].empty()) continue;
      out.per_task[task] = mean_absolute_error(preds[c], targets[c]);
    }
    sum += out.per_task[task];
  }
  if (out.per_task.empty()) throw EvaluationError("no task in the test set can be scored for this model");
  out.metric = sum / static_cast<double>(out.per_task.size());
  return out;
}

}  // namespace fmtl
