#ifndef MACA_NUMERICS_GRAD_CHECK_H_
#define MACA_NUMERICS_GRAD_CHECK_H_

#include <functional>
#include <string>
#include <vector>

#include "maca/numerics/autodiff.h"

namespace maca {

struct GradCheckResult {
  double max_relative_error = 0.0;
  // Parameter and flat index where the maximum occurred.
  std::string worst_parameter;
  size_t worst_index = 0;
  size_t entries_checked = 0;
  bool passed = true;
};

// Builds a scalar (1x1) output on the given tape from the current parameter
// values. Must be deterministic.
using ScalarFunction = std::function<Var(Tape&)>;

// Compares reverse-mode gradients against central differences
//   (f(w + h) - f(w - h)) / 2h
// entry by entry. The relative error of an entry is
//   |analytic - fd| / max(|analytic|, |fd|, floor).
// Parameter gradients are overwritten.
GradCheckResult GradCheck(const ScalarFunction& f,
                          const std::vector<Parameter*>& params,
                          double step = 1e-5, double tolerance = 1e-4,
                          double floor = 1e-6);

}  // namespace maca

#endif  // MACA_NUMERICS_GRAD_CHECK_H_
