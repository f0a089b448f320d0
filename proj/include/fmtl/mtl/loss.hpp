#pragma once

#include <set>
#include <vector>

#include "fmtl/graph/graph_data.hpp"
#include "fmtl/tensor/ops.hpp"

namespace fmtl {

// Per-column targets for a prediction vector whose columns are the global
// tasks in `columns`. A column is active when the sample carries the label and
// the task belongs to `observed` (the client's own task set).
struct Targets {
  std::vector<double> values;
  std::vector<bool> mask;
  bool any() const;
};

Targets gather_targets(const GraphSample& s, const std::vector<std::size_t>& columns,
                       const std::set<std::size_t>& observed);

// Classification: mean over active columns of binary cross-entropy with
// logits. Regression: mean over active columns of squared error. A sample
// with no active column contributes an exact 0 with zero gradient.
Var masked_loss(Var predictions, const Targets& targets, TaskType task_type);

// Plain-double evaluation of the same formula (used as a test oracle and for
// reporting); no tape involved.
double masked_loss_value(const std::vector<double>& predictions, const Targets& targets, TaskType task_type);

}  // namespace fmtl
