#ifndef MACA_NUMERICS_OPTIM_H_
#define MACA_NUMERICS_OPTIM_H_

#include <vector>

#include "maca/numerics/autodiff.h"

namespace maca {

struct AdamOptions {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-5;
  // Decoupled (AdamW) weight decay.
  double weight_decay = 0.0;
};

class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamOptions options);

  void ZeroGrad();
  void Step();

  const std::vector<Parameter*>& params() const { return params_; }
  const AdamOptions& options() const { return options_; }

 private:
  std::vector<Parameter*> params_;
  AdamOptions options_;
  std::vector<Tensor> m_, v_;
  long step_ = 0;
};

// Rescales gradients so their global L2 norm is at most `max_norm`. Returns
// the norm before clipping.
double ClipGradNorm(const std::vector<Parameter*>& params, double max_norm);

}  // namespace maca

#endif  // MACA_NUMERICS_OPTIM_H_
