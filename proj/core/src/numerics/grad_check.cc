#include "maca/numerics/grad_check.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace maca {

namespace {

double Evaluate(const ScalarFunction& f) {
  Tape tape;
  return f(tape).scalar();
}

}  // namespace

GradCheckResult GradCheck(const ScalarFunction& f,
                          const std::vector<Parameter*>& params, double step,
                          double tolerance, double floor) {
  for (Parameter* p : params) p->ZeroGrad();
  {
    Tape tape;
    Var out = f(tape);
    if (out.value().size() != 1) {
      throw std::invalid_argument("GradCheck: function must be scalar-valued");
    }
    tape.Backward(out);
  }
  GradCheckResult result;
  for (Parameter* p : params) {
    const Tensor analytic = p->grad;
    for (size_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + step;
      const double plus = Evaluate(f);
      p->value[i] = saved - step;
      const double minus = Evaluate(f);
      p->value[i] = saved;
      const double fd = (plus - minus) / (2.0 * step);
      const double a = analytic[i];
      const double denom = std::max({std::abs(a), std::abs(fd), floor});
      const double rel = std::abs(a - fd) / denom;
      ++result.entries_checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = p->name;
        result.worst_index = i;
      }
    }
  }
  result.passed = result.max_relative_error <= tolerance;
  return result;
}

}  // namespace maca
