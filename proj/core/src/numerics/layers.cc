#include "maca/numerics/layers.h"

#include <cmath>
#include <stdexcept>

namespace maca {

const char* LayerKindName(LayerKind kind) {
  switch (kind) {
    case LayerKind::kLinear: return "Linear";
    case LayerKind::kLayerNorm: return "LayerNorm";
    case LayerKind::kEmbedding: return "Embedding";
    case LayerKind::kSelfAttention: return "SelfAttention";
    case LayerKind::kMlpBlock: return "MLPBlock";
  }
  return "?";
}

Var Activate(Var x, Activation act) {
  return act == Activation::kRelu ? Relu(x) : Gelu(x);
}

Linear::Linear(std::string name, size_t in, size_t out, Rng& rng, double gain,
               bool bias)
    : weight_(name + ".weight", Tensor::Zeros(in, out)),
      bias_(name + ".bias", Tensor::Zeros(1, out)),
      has_bias_(bias) {
  const double stddev = gain / std::sqrt(static_cast<double>(in));
  for (double& w : weight_.value.data()) w = stddev * rng.Normal();
}

Var Linear::Forward(Tape& tape, Var x) {
  if (x.cols() != in()) {
    throw std::invalid_argument(weight_.name + ": input width " +
                                std::to_string(x.cols()) + ", expected " +
                                std::to_string(in()));
  }
  Var y = MatMul(x, tape.Leaf(weight_));
  return has_bias_ ? AddBias(y, tape.Leaf(bias_)) : y;
}

std::vector<Parameter*> Linear::Parameters() {
  if (has_bias_) return {&weight_, &bias_};
  return {&weight_};
}

LayerNorm::LayerNorm(std::string name, size_t dim)
    : gain_(name + ".gain", Tensor::Filled(1, dim, 1.0)),
      bias_(name + ".bias", Tensor::Zeros(1, dim)) {}

Var LayerNorm::Forward(Tape& tape, Var x) {
  return LayerNormRows(x, tape.Leaf(gain_), tape.Leaf(bias_));
}

Embedding::Embedding(std::string name, size_t obs_dim, size_t width, Rng& rng)
    : proj_(name + ".proj", obs_dim, width, rng) {}

Var Embedding::Forward(Tape& tape, Var obs) {
  return Gelu(proj_.Forward(tape, obs));
}

SelfAttention::SelfAttention(std::string name, size_t width, Rng& rng)
    : query_(name + ".query", width, width, rng),
      key_(name + ".key", width, width, rng, 1.0, /*bias=*/false),
      value_(name + ".value", width, width, rng),
      proj_(name + ".proj", width, width, rng) {}

Var SelfAttention::Forward(Tape& tape, Var x, size_t group,
                           std::vector<Tensor>* attention) {
  if (group == 0 || x.rows() % group != 0) {
    throw std::invalid_argument("SelfAttention: " + std::to_string(x.rows()) +
                                " rows do not split into groups of " +
                                std::to_string(group));
  }
  Var q = query_.Forward(tape, x);
  Var k = key_.Forward(tape, x);
  Var v = value_.Forward(tape, x);
  return proj_.Forward(tape, GroupedAttention(q, k, v, group, attention));
}

std::vector<Parameter*> SelfAttention::Parameters() {
  std::vector<Parameter*> out;
  for (Linear* l : {&query_, &key_, &value_, &proj_}) {
    auto p = l->Parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

MlpBlock::MlpBlock(std::string name, size_t width, size_t hidden, Rng& rng)
    : fc1_(name + ".fc1", width, hidden, rng),
      fc2_(name + ".fc2", hidden, width, rng) {}

Var MlpBlock::Forward(Tape& tape, Var x) {
  return fc2_.Forward(tape, Gelu(fc1_.Forward(tape, x)));
}

std::vector<Parameter*> MlpBlock::Parameters() {
  auto out = fc1_.Parameters();
  auto p = fc2_.Parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

EncoderBlock::EncoderBlock(std::string name, size_t width, Rng& rng)
    : attn_(name + ".attn", width, rng),
      ln1_(name + ".ln1", width),
      ln2_(name + ".ln2", width),
      mlp_(name + ".mlp", width, width, rng) {}

Var EncoderBlock::Forward(Tape& tape, Var x, size_t group,
                          std::vector<Tensor>* attention) {
  Var h = ln1_.Forward(tape, Add(x, attn_.Forward(tape, x, group, attention)));
  return ln2_.Forward(tape, Add(h, mlp_.Forward(tape, h)));
}

std::vector<Parameter*> EncoderBlock::Parameters() {
  std::vector<Parameter*> out = attn_.Parameters();
  for (auto* ps : {&ln1_, &ln2_}) {
    auto p = ps->Parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  auto p = mlp_.Parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

Mlp::Mlp(std::string name, size_t in, const std::vector<size_t>& hidden,
         size_t out, Activation act, Rng& rng, double output_gain)
    : act_(act) {
  size_t width = in;
  for (size_t i = 0; i < hidden.size(); ++i) {
    layers_.emplace_back(name + ".fc" + std::to_string(i), width, hidden[i], rng,
                         std::sqrt(2.0));
    width = hidden[i];
  }
  layers_.emplace_back(name + ".out", width, out, rng, output_gain);
}

Var Mlp::Forward(Tape& tape, Var x) {
  for (size_t i = 0; i + 1 < layers_.size(); ++i) {
    x = Activate(layers_[i].Forward(tape, x), act_);
  }
  return layers_.back().Forward(tape, x);
}

std::vector<Parameter*> Mlp::Parameters() {
  std::vector<Parameter*> out;
  for (Linear& l : layers_) {
    auto p = l.Parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void CopyParameterValues(const std::vector<Parameter*>& from,
                         const std::vector<Parameter*>& to) {
  if (from.size() != to.size()) {
    throw std::invalid_argument("CopyParameterValues: size mismatch");
  }
  for (size_t i = 0; i < from.size(); ++i) {
    if (!from[i]->value.SameShape(to[i]->value)) {
      throw std::invalid_argument("CopyParameterValues: shape mismatch at " +
                                  from[i]->name);
    }
    to[i]->value = from[i]->value;
  }
}

size_t CountParameters(const std::vector<Parameter*>& params) {
  size_t n = 0;
  for (const Parameter* p : params) n += p->value.size();
  return n;
}

}  // namespace maca
