#ifndef MACA_NUMERICS_LAYERS_H_
#define MACA_NUMERICS_LAYERS_H_

#include <memory>
#include <string>
#include <vector>

#include "maca/numerics/autodiff.h"
#include "maca/numerics/random.h"

namespace maca {

enum class LayerKind { kLinear, kLayerNorm, kEmbedding, kSelfAttention, kMlpBlock };

const char* LayerKindName(LayerKind kind);

enum class Activation { kRelu, kGelu };

Var Activate(Var x, Activation act);

// y = x W + b with W of shape (in x out).
class Linear {
 public:
  Linear() = default;
  Linear(std::string name, size_t in, size_t out, Rng& rng, double gain = 1.0,
         bool bias = true);

  Var Forward(Tape& tape, Var x);
  LayerKind kind() const { return LayerKind::kLinear; }
  std::vector<Parameter*> Parameters();

  size_t in() const { return weight_.value.rows(); }
  size_t out() const { return weight_.value.cols(); }
  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  const Parameter& weight() const { return weight_; }
  const Parameter& bias() const { return bias_; }

 private:
  Parameter weight_;
  Parameter bias_;
  bool has_bias_ = true;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(std::string name, size_t dim);

  Var Forward(Tape& tape, Var x);
  LayerKind kind() const { return LayerKind::kLayerNorm; }
  std::vector<Parameter*> Parameters() { return {&gain_, &bias_}; }

 private:
  Parameter gain_;
  Parameter bias_;
};

// Projects per-agent observation vectors to the model width: GELU(x W + b).
class Embedding {
 public:
  Embedding() = default;
  Embedding(std::string name, size_t obs_dim, size_t width, Rng& rng);

  Var Forward(Tape& tape, Var obs);
  LayerKind kind() const { return LayerKind::kEmbedding; }
  std::vector<Parameter*> Parameters() { return proj_.Parameters(); }

 private:
  Linear proj_;
};

// Single-head scaled dot-product self-attention over groups of tokens. The key
// projection has no bias: a per-row score shift cancels in the softmax.
class SelfAttention {
 public:
  SelfAttention() = default;
  SelfAttention(std::string name, size_t width, Rng& rng);

  // x holds `group` consecutive token rows per sample. One attention matrix
  // per sample is written to `attention` when non-null.
  Var Forward(Tape& tape, Var x, size_t group,
              std::vector<Tensor>* attention = nullptr);
  LayerKind kind() const { return LayerKind::kSelfAttention; }
  std::vector<Parameter*> Parameters();

  Linear& query() { return query_; }
  Linear& key() { return key_; }

 private:
  Linear query_, key_, value_, proj_;
};

// Linear -> GELU -> Linear.
class MlpBlock {
 public:
  MlpBlock() = default;
  MlpBlock(std::string name, size_t width, size_t hidden, Rng& rng);

  Var Forward(Tape& tape, Var x);
  LayerKind kind() const { return LayerKind::kMlpBlock; }
  std::vector<Parameter*> Parameters();

 private:
  Linear fc1_, fc2_;
};

// Post-norm transformer encoder block:
//   h = LN(x + Attn(x)); y = LN(h + MLP(h)).
class EncoderBlock {
 public:
  EncoderBlock() = default;
  EncoderBlock(std::string name, size_t width, Rng& rng);

  Var Forward(Tape& tape, Var x, size_t group,
              std::vector<Tensor>* attention = nullptr);
  std::vector<Parameter*> Parameters();

  SelfAttention& attention() { return attn_; }

 private:
  SelfAttention attn_;
  LayerNorm ln1_, ln2_;
  MlpBlock mlp_;
};

// Feed-forward stack: hidden layers with `act`, linear output layer.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::string name, size_t in, const std::vector<size_t>& hidden,
      size_t out, Activation act, Rng& rng, double output_gain = 1.0);

  Var Forward(Tape& tape, Var x);
  std::vector<Parameter*> Parameters();

 private:
  std::vector<Linear> layers_;
  Activation act_ = Activation::kRelu;
};

// Copies parameter values between structurally identical parameter lists.
void CopyParameterValues(const std::vector<Parameter*>& from,
                         const std::vector<Parameter*>& to);
size_t CountParameters(const std::vector<Parameter*>& params);

}  // namespace maca

#endif  // MACA_NUMERICS_LAYERS_H_
