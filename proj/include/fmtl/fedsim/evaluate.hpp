#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <vector>

#include "fmtl/gnn/model.hpp"
#include "fmtl/graph/graph_data.hpp"

namespace fmtl {

// Area under the ROC curve as the Mann-Whitney statistic with average ranks
// for tied scores. Labels must be 0/1 with both classes present, otherwise
// EvaluationError.
double roc_auc(const std::vector<double>& scores, const std::vector<double>& labels);

double mean_absolute_error(const std::vector<double>& predictions, const std::vector<double>& targets);

struct ClientEvaluation {
  double metric = 0.0;                    // mean over scored tasks
  std::map<std::size_t, double> per_task; // global task id -> metric
  std::vector<std::size_t> absent_tasks;  // tasks outside the head's columns
};

// Scores one model on the (unmasked) test set over the tasks its head
// covers. Classification: ROC-AUC per task with both classes present.
// Regression: MAE per task with at least one label, predictions mapped back
// through `standardizer` when given. Throws EvaluationError when no task
// can be scored.
ClientEvaluation evaluate_model(const ModelParams& params, const std::vector<GraphSample>& test,
                                const DatasetManifest& manifest, const LabelStandardizer* standardizer = nullptr);

}  // namespace fmtl
