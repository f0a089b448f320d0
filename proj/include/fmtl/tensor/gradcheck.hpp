#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fmtl/tensor/matrix.hpp"

namespace fmtl {

using ParamMap = std::map<std::string, Matrix>;
using ScalarFn = std::function<double(const ParamMap&)>;

struct GradcheckEntry {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
  // Differences at step and step/2 are inconsistent: a kink (e.g. a ReLU
  // pre-activation crossing 0) lies within the step. Excluded from max_rel_error.
  bool non_smooth = false;
};

struct GradcheckReport {
  double max_rel_error = 0.0;             // over smooth coordinates
  double max_rel_error_all = 0.0;         // including flagged coordinates
  std::size_t checked = 0;
  std::size_t non_smooth_count = 0;
  std::vector<GradcheckEntry> entries;
};

// Central finite differences of f around `params` compared against `analytic`
// (same keys and shapes). rel_error = |a - n| / (|a| + |n| + 1e-12).
// Throws NumericError if f returns a non-finite value, ValidationError if
// step <= 0, LookupError if analytic lacks a parameter.
GradcheckReport finite_diff_gradcheck(const ScalarFn& f, const ParamMap& params,
                                      const ParamMap& analytic, double step = 1e-5);

}  // namespace fmtl
