#include "maca/numerics/optim.h"

#include <cmath>

namespace maca {

Adam::Adam(std::vector<Parameter*> params, AdamOptions options)
    : params_(std::move(params)), options_(options) {
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::ZeroGrad() {
  for (Parameter* p : params_) p->ZeroGrad();
}

void Adam::Step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
  for (size_t k = 0; k < params_.size(); ++k) {
    auto w = params_[k]->value.data();
    auto g = params_[k]->grad.data();
    auto m = m_[k].data();
    auto v = v_[k].data();
    for (size_t i = 0; i < w.size(); ++i) {
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g[i];
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g[i] * g[i];
      const double update =
          (m[i] / bc1) / (std::sqrt(v[i] / bc2) + options_.eps);
      w[i] -= options_.lr * (update + options_.weight_decay * w[i]);
    }
  }
}

double ClipGradNorm(const std::vector<Parameter*>& params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) {
    for (double g : p->grad.data()) sq += g * g;
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-6);
    for (Parameter* p : params) {
      for (double& g : p->grad.data()) g *= s;
    }
  }
  return norm;
}

}  // namespace maca
