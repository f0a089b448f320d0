#include "fmtl/tensor/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fmtl/core/errors.hpp"

namespace fmtl {

namespace {

double eval_checked(const ScalarFn& f, const ParamMap& p) {
  const double v = f(p);
  if (!std::isfinite(v)) throw NumericError("finite_diff_gradcheck: non-finite objective value");
  return v;
}

}  // namespace

GradcheckReport finite_diff_gradcheck(const ScalarFn& f, const ParamMap& params,
                                      const ParamMap& analytic, double step) {
  if (!(step > 0.0)) throw ValidationError("finite_diff_gradcheck: step must be positive");
  GradcheckReport report;
  ParamMap work = params;
  const double f0 = eval_checked(f, work);

  for (const auto& [name, value] : params) {
    auto it = analytic.find(name);
    if (it == analytic.end()) throw LookupError("finite_diff_gradcheck: no analytic gradient for '" + name + "'");
    require_same_shape(value, it->second, "finite_diff_gradcheck");
    auto w = work.at(name).data();
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double orig = w[i];
      auto probe = [&](double h) {
        w[i] = orig + h;
        const double fp = eval_checked(f, work);
        w[i] = orig - h;
        const double fm = eval_checked(f, work);
        w[i] = orig;
        return std::pair{(fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / h};
      };
      const auto [central, second] = probe(step);
      const auto [central_half, second_half] = probe(0.5 * step);

      GradcheckEntry e;
      e.param = name;
      e.index = i;
      e.analytic = it->second.data()[i];
      e.numeric = central;
      e.rel_error = std::abs(e.analytic - e.numeric) / (std::abs(e.analytic) + std::abs(e.numeric) + 1e-12);

      // For smooth f, halving the step moves the central difference by O(h^2)
      // and halves the scaled second difference. A kink inside the step breaks one.
      const double tol = 1e-3 * (std::abs(central) + std::abs(central_half)) + 1e-9;
      e.non_smooth = std::abs(central - central_half) > tol || std::abs(second - 2.0 * second_half) > tol;

      report.max_rel_error_all = std::max(report.max_rel_error_all, e.rel_error);
      if (e.non_smooth) {
        ++report.non_smooth_count;
      } else {
        report.max_rel_error = std::max(report.max_rel_error, e.rel_error);
      }
      ++report.checked;
      report.entries.push_back(std::move(e));
    }
  }
  return report;
}

}  // namespace fmtl
