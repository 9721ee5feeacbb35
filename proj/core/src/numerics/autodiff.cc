#include "maca/numerics/autodiff.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace maca {

namespace {

void RequireSameShape(const Var& a, const Var& b, const char* op) {
  if (!a.value().SameShape(b.value())) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                a.value().ShapeString() + " vs " +
                                b.value().ShapeString());
  }
}

Tape& TapeOf(const Var& a) {
  if (!a.valid()) throw std::logic_error("operation on an unrecorded Var");
  return *a.tape();
}

Tape& TapeOf(const Var& a, const Var& b) {
  Tape& t = TapeOf(a);
  if (b.tape() != &t) {
    throw std::logic_error("operands recorded on different tapes");
  }
  return t;
}

void Accumulate(Tape& tape, size_t id, const Tensor& delta) {
  if (!tape.requires_grad(id)) return;
  Tensor& g = tape.grad(id);
  auto gd = g.data();
  auto dd = delta.data();
  for (size_t i = 0; i < gd.size(); ++i) gd[i] += dd[i];
}

template <typename F>
Var Unary(Var a, F&& forward, Tape::BackwardFn backward) {
  Tape& tape = TapeOf(a);
  Tensor out = a.value();
  for (double& v : out.data()) v = forward(v);
  return tape.Record(std::move(out), {a}, std::move(backward));
}

}  // namespace

Parameter::Parameter(std::string n, Tensor v)
    : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

const Tensor& Var::value() const {
  if (!tape_) throw std::logic_error("Var::value on an unrecorded Var");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Tensor& v = value();
  if (v.size() != 1) {
    throw std::invalid_argument("Var::scalar on tensor " + v.ShapeString());
  }
  return v[0];
}

Var Tape::Constant(Tensor value) {
  if (value.rank() == 1) value = Tensor({1, value.size()}, {value.data().begin(), value.data().end()});
  nodes_.push_back(Node{std::move(value), {}, nullptr, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Leaf(Parameter& param) {
  if (param.value.rank() != 2) {
    throw std::invalid_argument("Tape::Leaf: parameter '" + param.name +
                                "' must be rank-2");
  }
  if (!param.grad.SameShape(param.value)) param.grad = Tensor(param.value.shape());
  nodes_.push_back(Node{param.value, {}, nullptr, &param, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::Record(Tensor value, std::initializer_list<Var> parents,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& p : parents) {
    CheckOwned(p);
    needs = needs || nodes_[p.id()].requires_grad;
  }
  nodes_.push_back(
      Node{std::move(value), {}, needs ? std::move(backward) : nullptr,
           nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

Tensor& Tape::grad(size_t id) {
  Node& n = nodes_[id];
  if (!n.grad.SameShape(n.value)) n.grad = Tensor(n.value.shape());
  return n.grad;
}

void Tape::CheckOwned(Var v) const {
  if (v.tape() != this || v.id() >= nodes_.size()) {
    throw std::logic_error("Var does not belong to this tape");
  }
}

void Tape::Backward(Var output) {
  Backward(output, Tensor::Filled(1, 1, 1.0));
}

void Tape::Backward(Var output, const Tensor& upstream) {
  if (nodes_.empty() || output.tape() != this) {
    throw std::logic_error("Backward called before a forward pass was recorded");
  }
  CheckOwned(output);
  if (consumed_) throw std::logic_error("Backward called twice on one tape");
  consumed_ = true;
  if (upstream.size() != nodes_[output.id()].value.size()) {
    throw std::invalid_argument("Backward: upstream gradient shape mismatch");
  }
  if (!nodes_[output.id()].requires_grad) return;
  Tensor& g = grad(output.id());
  std::copy(upstream.data().begin(), upstream.data().end(), g.data().begin());
  for (size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.grad.SameShape(n.value)) continue;
    if (n.param) {
      auto pg = n.param->grad.data();
      auto ng = n.grad.data();
      for (size_t j = 0; j < pg.size(); ++j) pg[j] += ng[j];
    } else if (n.backward) {
      n.backward(*this, i);
    }
  }
}

Var MatMul(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  const size_t ia = a.id(), ib = b.id();
  return tape.Record(
      maca::MatMul(a.value(), b.value()), {a, b}, [ia, ib](Tape& t, size_t self) {
        const Tensor& g = t.grad(self);
        if (t.requires_grad(ia)) Accumulate(t, ia, MatMulTransB(g, t.value(ib)));
        if (t.requires_grad(ib)) Accumulate(t, ib, MatMulTransA(t.value(ia), g));
      });
}

Var Add(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  RequireSameShape(a, b, "Add");
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] += bd[i];
  const size_t ia = a.id(), ib = b.id();
  return tape.Record(std::move(out), {a, b}, [ia, ib](Tape& t, size_t self) {
    const Tensor g = t.grad(self);
    Accumulate(t, ia, g);
    Accumulate(t, ib, g);
  });
}

Var Sub(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  RequireSameShape(a, b, "Sub");
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] -= bd[i];
  const size_t ia = a.id(), ib = b.id();
  return tape.Record(std::move(out), {a, b}, [ia, ib](Tape& t, size_t self) {
    Tensor g = t.grad(self);
    Accumulate(t, ia, g);
    for (double& v : g.data()) v = -v;
    Accumulate(t, ib, g);
  });
}

Var Mul(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  RequireSameShape(a, b, "Mul");
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] *= bd[i];
  const size_t ia = a.id(), ib = b.id();
  return tape.Record(std::move(out), {a, b}, [ia, ib](Tape& t, size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      Tensor d = g;
      auto vb = t.value(ib).data();
      for (size_t i = 0; i < d.size(); ++i) d[i] *= vb[i];
      Accumulate(t, ia, d);
    }
    if (t.requires_grad(ib)) {
      Tensor d = g;
      auto va = t.value(ia).data();
      for (size_t i = 0; i < d.size(); ++i) d[i] *= va[i];
      Accumulate(t, ib, d);
    }
  });
}

Var AddBias(Var a, Var bias) {
  Tape& tape = TapeOf(a, bias);
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  if (bv.rows() != 1 || bv.cols() != av.cols()) {
    throw std::invalid_argument("AddBias: bias " + bv.ShapeString() +
                                " does not match " + av.ShapeString());
  }
  Tensor out = av;
  for (size_t r = 0; r < out.rows(); ++r) {
    for (size_t c = 0; c < out.cols(); ++c) out(r, c) += bv[c];
  }
  const size_t ia = a.id(), ib = bias.id();
  return tape.Record(std::move(out), {a, bias}, [ia, ib](Tape& t, size_t self) {
    const Tensor& g = t.grad(self);
    Accumulate(t, ia, g);
    if (t.requires_grad(ib)) {
      Tensor d({1, g.cols()});
      for (size_t r = 0; r < g.rows(); ++r) {
        for (size_t c = 0; c < g.cols(); ++c) d[c] += g(r, c);
      }
      Accumulate(t, ib, d);
    }
  });
}

Var Scale(Var a, double s) {
  const size_t ia = a.id();
  return Unary(a, [s](double v) { return v * s; },
               [ia, s](Tape& t, size_t self) {
                 Tensor d = t.grad(self);
                 for (double& v : d.data()) v *= s;
                 Accumulate(t, ia, d);
               });
}

Var AddScalar(Var a, double s) {
  const size_t ia = a.id();
  return Unary(a, [s](double v) { return v + s; },
               [ia](Tape& t, size_t self) { Accumulate(t, ia, t.grad(self)); });
}

Var Relu(Var a) {
  const size_t ia = a.id();
  return Unary(a, [](double v) { return v > 0.0 ? v : 0.0; },
               [ia](Tape& t, size_t self) {
                 Tensor d = t.grad(self);
                 auto x = t.value(ia).data();
                 for (size_t i = 0; i < d.size(); ++i) {
                   if (x[i] <= 0.0) d[i] = 0.0;
                 }
                 Accumulate(t, ia, d);
               });
}

Var Gelu(Var a) {
  const size_t ia = a.id();
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  return Unary(
      a, [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); },
      [ia](Tape& t, size_t self) {
        Tensor d = t.grad(self);
        auto x = t.value(ia).data();
        const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
        for (size_t i = 0; i < d.size(); ++i) {
          const double cdf = 0.5 * (1.0 + std::erf(x[i] * kInvSqrt2));
          const double pdf = inv_sqrt_2pi * std::exp(-0.5 * x[i] * x[i]);
          d[i] *= cdf + x[i] * pdf;
        }
        Accumulate(t, ia, d);
      });
}

Var Exp(Var a) {
  const size_t ia = a.id();
  return Unary(a, [](double v) { return std::exp(v); },
               [ia](Tape& t, size_t self) {
                 Tensor d = t.grad(self);
                 auto y = t.value(self).data();
                 for (size_t i = 0; i < d.size(); ++i) d[i] *= y[i];
                 Accumulate(t, ia, d);
               });
}

Var Square(Var a) {
  const size_t ia = a.id();
  return Unary(a, [](double v) { return v * v; },
               [ia](Tape& t, size_t self) {
                 Tensor d = t.grad(self);
                 auto x = t.value(ia).data();
                 for (size_t i = 0; i < d.size(); ++i) d[i] *= 2.0 * x[i];
                 Accumulate(t, ia, d);
               });
}

Var Minimum(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  RequireSameShape(a, b, "Minimum");
  Tensor out = a.value();
  auto bd = b.value().data();
  auto od = out.data();
  for (size_t i = 0; i < od.size(); ++i) od[i] = std::min(od[i], bd[i]);
  const size_t ia = a.id(), ib = b.id();
  return tape.Record(std::move(out), {a, b}, [ia, ib](Tape& t, size_t self) {
    const Tensor& g = t.grad(self);
    auto va = t.value(ia).data();
    auto vb = t.value(ib).data();
    Tensor da(g.shape()), db(g.shape());
    for (size_t i = 0; i < g.size(); ++i) {
      if (va[i] <= vb[i]) {
        da[i] = g[i];
      } else {
        db[i] = g[i];
      }
    }
    Accumulate(t, ia, da);
    Accumulate(t, ib, db);
  });
}

Var Clamp(Var a, double lo, double hi) {
  const size_t ia = a.id();
  return Unary(a, [lo, hi](double v) { return std::clamp(v, lo, hi); },
               [ia, lo, hi](Tape& t, size_t self) {
                 Tensor d = t.grad(self);
                 auto x = t.value(ia).data();
                 for (size_t i = 0; i < d.size(); ++i) {
                   if (x[i] < lo || x[i] > hi) d[i] = 0.0;
                 }
                 Accumulate(t, ia, d);
               });
}

Var Sum(Var a) {
  Tape& tape = TapeOf(a);
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  const size_t ia = a.id();
  return tape.Record(Tensor::Filled(1, 1, s), {a}, [ia](Tape& t, size_t self) {
    Tensor d(t.value(ia).shape(), t.grad(self)[0]);
    Accumulate(t, ia, d);
  });
}

Var Mean(Var a) {
  const size_t n = a.value().size();
  if (n == 0) throw std::invalid_argument("Mean of an empty tensor");
  return Scale(Sum(a), 1.0 / static_cast<double>(n));
}

Var RowSum(Var a) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  Tensor out({av.rows(), 1});
  for (size_t r = 0; r < av.rows(); ++r) {
    for (double v : av.row(r)) out[r] += v;
  }
  const size_t ia = a.id();
  return tape.Record(std::move(out), {a}, [ia](Tape& t, size_t self) {
    const Tensor& g = t.grad(self);
    Tensor d(t.value(ia).shape());
    for (size_t r = 0; r < d.rows(); ++r) {
      for (double& v : d.row(r)) v = g[r];
    }
    Accumulate(t, ia, d);
  });
}

Var SoftmaxRows(Var a) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (size_t r = 0; r < av.rows(); ++r) {
    auto p = Softmax(av.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  const size_t ia = a.id();
  return tape.Record(std::move(out), {a}, [ia](Tape& t, size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& p = t.value(self);
    Tensor d(p.shape());
    for (size_t r = 0; r < p.rows(); ++r) {
      const double s = Dot(g.row(r), p.row(r));
      for (size_t c = 0; c < p.cols(); ++c) d(r, c) = p(r, c) * (g(r, c) - s);
    }
    Accumulate(t, ia, d);
  });
}

Var LogSoftmaxRows(Var a) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (size_t r = 0; r < av.rows(); ++r) {
    auto p = LogSoftmax(av.row(r));
    std::copy(p.begin(), p.end(), out.row(r).begin());
  }
  const size_t ia = a.id();
  return tape.Record(std::move(out), {a}, [ia](Tape& t, size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor d(y.shape());
    for (size_t r = 0; r < y.rows(); ++r) {
      double s = 0.0;
      for (double v : g.row(r)) s += v;
      for (size_t c = 0; c < y.cols(); ++c) {
        d(r, c) = g(r, c) - std::exp(y(r, c)) * s;
      }
    }
    Accumulate(t, ia, d);
  });
}

Var LayerNormRows(Var x, Var gain, Var bias, double eps) {
  Tape& tape = TapeOf(x, gain);
  TapeOf(x, bias);
  const Tensor& xv = x.value();
  const size_t rows = xv.rows(), cols = xv.cols();
  if (gain.value().rows() != 1 || gain.value().cols() != cols ||
      bias.value().rows() != 1 || bias.value().cols() != cols) {
    throw std::invalid_argument("LayerNormRows: gain/bias shape mismatch");
  }
  Tensor normed({rows, cols});
  std::vector<double> inv_std(rows);
  for (size_t r = 0; r < rows; ++r) {
    auto row = xv.row(r);
    double mu = 0.0;
    for (double v : row) mu += v;
    mu /= static_cast<double>(cols);
    double var = 0.0;
    for (double v : row) var += (v - mu) * (v - mu);
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (size_t c = 0; c < cols; ++c) normed(r, c) = (row[c] - mu) * inv_std[r];
  }
  Tensor out = normed;
  const Tensor& gv = gain.value();
  const Tensor& bv = bias.value();
  for (size_t r = 0; r < rows; ++r) {
    for (size_t c = 0; c < cols; ++c) out(r, c) = out(r, c) * gv[c] + bv[c];
  }
  const size_t ix = x.id(), ig = gain.id(), ib = bias.id();
  return tape.Record(
      std::move(out), {x, gain, bias},
      [ix, ig, ib, normed = std::move(normed), inv_std = std::move(inv_std)](
          Tape& t, size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& gv = t.value(ig);
        const size_t rows = g.rows(), cols = g.cols();
        if (t.requires_grad(ig) || t.requires_grad(ib)) {
          Tensor dg({1, cols}), db({1, cols});
          for (size_t r = 0; r < rows; ++r) {
            for (size_t c = 0; c < cols; ++c) {
              dg[c] += g(r, c) * normed(r, c);
              db[c] += g(r, c);
            }
          }
          Accumulate(t, ig, dg);
          Accumulate(t, ib, db);
        }
        if (t.requires_grad(ix)) {
          Tensor dx({rows, cols});
          const double inv_n = 1.0 / static_cast<double>(cols);
          for (size_t r = 0; r < rows; ++r) {
            double mean_dxh = 0.0, mean_dxh_xh = 0.0;
            for (size_t c = 0; c < cols; ++c) {
              const double dxh = g(r, c) * gv[c];
              mean_dxh += dxh;
              mean_dxh_xh += dxh * normed(r, c);
            }
            mean_dxh *= inv_n;
            mean_dxh_xh *= inv_n;
            for (size_t c = 0; c < cols; ++c) {
              const double dxh = g(r, c) * gv[c];
              dx(r, c) = inv_std[r] *
                         (dxh - mean_dxh - normed(r, c) * mean_dxh_xh);
            }
          }
          Accumulate(t, ix, dx);
        }
      });
}

Var GatherCols(Var a, std::vector<size_t> index) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  if (index.size() != av.rows()) {
    throw std::invalid_argument("GatherCols: one index per row required");
  }
  Tensor out({av.rows(), 1});
  for (size_t r = 0; r < av.rows(); ++r) {
    if (index[r] >= av.cols()) throw std::out_of_range("GatherCols: index");
    out[r] = av(r, index[r]);
  }
  const size_t ia = a.id();
  return tape.Record(std::move(out), {a},
                     [ia, index = std::move(index)](Tape& t, size_t self) {
                       const Tensor& g = t.grad(self);
                       Tensor d(t.value(ia).shape());
                       for (size_t r = 0; r < index.size(); ++r) {
                         d(r, index[r]) = g[r];
                       }
                       Accumulate(t, ia, d);
                     });
}

Var ConcatCols(Var a, Var b) {
  Tape& tape = TapeOf(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw std::invalid_argument("ConcatCols: row mismatch " +
                                av.ShapeString() + " vs " + bv.ShapeString());
  }
  const size_t ca = av.cols(), cb = bv.cols();
  Tensor out({av.rows(), ca + cb});
  for (size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin() + ca);
  }
  const size_t ia = a.id(), ib = b.id();
  return tape.Record(std::move(out), {a, b},
                     [ia, ib, ca, cb](Tape& t, size_t self) {
                       const Tensor& g = t.grad(self);
                       Tensor da({g.rows(), ca}), db({g.rows(), cb});
                       for (size_t r = 0; r < g.rows(); ++r) {
                         for (size_t c = 0; c < ca; ++c) da(r, c) = g(r, c);
                         for (size_t c = 0; c < cb; ++c) db(r, c) = g(r, ca + c);
                       }
                       Accumulate(t, ia, da);
                       Accumulate(t, ib, db);
                     });
}

Var GroupMeanRows(Var a, size_t group) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  if (group == 0 || av.rows() % group != 0) {
    throw std::invalid_argument("GroupMeanRows: rows not divisible by group");
  }
  const size_t groups = av.rows() / group, cols = av.cols();
  const double inv = 1.0 / static_cast<double>(group);
  Tensor out({groups, cols});
  for (size_t r = 0; r < av.rows(); ++r) {
    for (size_t c = 0; c < cols; ++c) out(r / group, c) += av(r, c) * inv;
  }
  const size_t ia = a.id();
  return tape.Record(std::move(out), {a}, [ia, group, inv](Tape& t, size_t self) {
    const Tensor& g = t.grad(self);
    Tensor d(t.value(ia).shape());
    for (size_t r = 0; r < d.rows(); ++r) {
      for (size_t c = 0; c < d.cols(); ++c) d(r, c) = g(r / group, c) * inv;
    }
    Accumulate(t, ia, d);
  });
}

Var RepeatRows(Var a, size_t times) {
  Tape& tape = TapeOf(a);
  const Tensor& av = a.value();
  Tensor out({av.rows() * times, av.cols()});
  for (size_t r = 0; r < out.rows(); ++r) {
    std::copy(av.row(r / times).begin(), av.row(r / times).end(),
              out.row(r).begin());
  }
  const size_t ia = a.id();
  return tape.Record(std::move(out), {a}, [ia, times](Tape& t, size_t self) {
    const Tensor& g = t.grad(self);
    Tensor d(t.value(ia).shape());
    for (size_t r = 0; r < g.rows(); ++r) {
      for (size_t c = 0; c < g.cols(); ++c) d(r / times, c) += g(r, c);
    }
    Accumulate(t, ia, d);
  });
}

Var GroupedAttention(Var q, Var k, Var v, size_t group,
                     std::vector<Tensor>* attention) {
  Tape& tape = TapeOf(q, k);
  TapeOf(q, v);
  RequireSameShape(q, k, "GroupedAttention");
  RequireSameShape(q, v, "GroupedAttention");
  const Tensor& qv = q.value();
  const size_t rows = qv.rows(), dim = qv.cols();
  if (group == 0 || rows % group != 0) {
    throw std::invalid_argument("GroupedAttention: rows not divisible by group");
  }
  const size_t groups = rows / group;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();

  // probs holds the per-group attention matrices stacked: (rows x group).
  Tensor probs({rows, group});
  Tensor out({rows, dim});
  std::vector<double> scores(group);
  for (size_t b = 0; b < groups; ++b) {
    const size_t base = b * group;
    for (size_t i = 0; i < group; ++i) {
      for (size_t j = 0; j < group; ++j) {
        scores[j] = scale * Dot(qv.row(base + i), kv.row(base + j));
      }
      auto p = Softmax(scores);
      std::copy(p.begin(), p.end(), probs.row(base + i).begin());
      auto orow = out.row(base + i);
      for (size_t j = 0; j < group; ++j) {
        auto vrow = vv.row(base + j);
        for (size_t c = 0; c < dim; ++c) orow[c] += p[j] * vrow[c];
      }
    }
  }
  if (attention) {
    attention->clear();
    attention->reserve(groups);
    for (size_t b = 0; b < groups; ++b) {
      Tensor a({group, group});
      for (size_t i = 0; i < group; ++i) {
        std::copy(probs.row(b * group + i).begin(),
                  probs.row(b * group + i).end(), a.row(i).begin());
      }
      attention->push_back(std::move(a));
    }
  }
  const size_t iq = q.id(), ik = k.id(), iv = v.id();
  return tape.Record(
      std::move(out), {q, k, v},
      [iq, ik, iv, group, groups, dim, scale, probs = std::move(probs)](
          Tape& t, size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& qv = t.value(iq);
        const Tensor& kv = t.value(ik);
        const Tensor& vv = t.value(iv);
        Tensor dq(qv.shape()), dk(kv.shape()), dv(vv.shape());
        std::vector<double> dp(group), ds(group);
        for (size_t b = 0; b < groups; ++b) {
          const size_t base = b * group;
          for (size_t i = 0; i < group; ++i) {
            auto prow = probs.row(base + i);
            auto grow = g.row(base + i);
            // dV_j += p_ij * g_i ; dP_ij = g_i . v_j
            for (size_t j = 0; j < group; ++j) {
              auto dvrow = dv.row(base + j);
              for (size_t c = 0; c < dim; ++c) dvrow[c] += prow[j] * grow[c];
              dp[j] = Dot(grow, vv.row(base + j));
            }
            const double s = Dot(dp, prow);
            for (size_t j = 0; j < group; ++j) ds[j] = prow[j] * (dp[j] - s) * scale;
            auto dqrow = dq.row(base + i);
            auto qrow = qv.row(base + i);
            for (size_t j = 0; j < group; ++j) {
              auto krow = kv.row(base + j);
              auto dkrow = dk.row(base + j);
              for (size_t c = 0; c < dim; ++c) {
                dqrow[c] += ds[j] * krow[c];
                dkrow[c] += ds[j] * qrow[c];
              }
            }
          }
        }
        Accumulate(t, iq, dq);
        Accumulate(t, ik, dk);
        Accumulate(t, iv, dv);
      });
}

}  // namespace maca
