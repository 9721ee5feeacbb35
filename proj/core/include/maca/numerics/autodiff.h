#ifndef MACA_NUMERICS_AUTODIFF_H_
#define MACA_NUMERICS_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "maca/numerics/tensor.h"

namespace maca {

// A trainable array with its accumulated gradient.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  void ZeroGrad() { grad.Fill(0.0); }

  std::string name;
  Tensor value;
  Tensor grad;
};

class Tape;

// Handle to a node recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  size_t rows() const { return value().rows(); }
  size_t cols() const { return value().cols(); }
  // Value of a 1x1 node.
  double scalar() const;
  bool valid() const { return tape_ != nullptr; }
  Tape* tape() const { return tape_; }
  size_t id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  size_t id_ = 0;
};

// Explicit computation record for reverse-mode differentiation. Every op
// appends a node holding its value and a closure that propagates the node's
// gradient into its parents. Backward() walks the record in reverse and
// accumulates gradients of parameter leaves into Parameter::grad.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var Constant(Tensor value);
  Var Leaf(Parameter& param);
  // Records an op result. `backward` is dropped when no parent requires a
  // gradient.
  Var Record(Tensor value, std::initializer_list<Var> parents,
             BackwardFn backward);

  const Tensor& value(size_t id) const { return nodes_[id].value; }
  bool requires_grad(size_t id) const { return nodes_[id].requires_grad; }
  // Gradient of node `id`. Allocated on first access.
  Tensor& grad(size_t id);

  // Seeds a 1x1 output with 1 and back-propagates.
  void Backward(Var output);
  void Backward(Var output, const Tensor& upstream);

  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };

  void CheckOwned(Var v) const;

  std::vector<Node> nodes_;
  bool consumed_ = false;
};

// Elementwise and linear-algebra ops. All operands are rank-2.
Var MatMul(Var a, Var b);
Var Add(Var a, Var b);
Var Sub(Var a, Var b);
Var Mul(Var a, Var b);
// a (r x c) + bias (1 x c), broadcast over rows.
Var AddBias(Var a, Var bias);
Var Scale(Var a, double s);
Var AddScalar(Var a, double s);
Var Relu(Var a);
// Exact GELU, x * Phi(x).
Var Gelu(Var a);
Var Exp(Var a);
Var Square(Var a);
Var Minimum(Var a, Var b);
// Clamp with zero gradient outside [lo, hi].
Var Clamp(Var a, double lo, double hi);

// Reductions.
Var Sum(Var a);
Var Mean(Var a);
// (r x c) -> (r x 1)
Var RowSum(Var a);

// Row-wise ops.
Var SoftmaxRows(Var a);
Var LogSoftmaxRows(Var a);
// Per-row layer normalization with learned gain/bias (1 x c each).
Var LayerNormRows(Var x, Var gain, Var bias, double eps = 1e-5);
// Selects one column per row: out(r, 0) = a(r, index[r]).
Var GatherCols(Var a, std::vector<size_t> index);

// Shape ops.
Var ConcatCols(Var a, Var b);
// Mean over consecutive blocks of `group` rows: (g*group x c) -> (g x c).
Var GroupMeanRows(Var a, size_t group);
// Repeats each row `times` times consecutively: (r x c) -> (r*times x c).
Var RepeatRows(Var a, size_t times);

// Scaled dot-product attention applied independently to consecutive blocks
// of `group` rows (one block per sample). When `attention` is non-null it
// receives one group x group row-stochastic matrix per block.
Var GroupedAttention(Var q, Var k, Var v, size_t group,
                     std::vector<Tensor>* attention = nullptr);

}  // namespace maca

#endif  // MACA_NUMERICS_AUTODIFF_H_
