#ifndef MACA_CRITIC_CRITIC_H_
#define MACA_CRITIC_CRITIC_H_

#include <cstdint>
#include <span>
#include <vector>

#include "maca/numerics/autodiff.h"
#include "maca/numerics/layers.h"
#include "maca/numerics/tensor.h"

namespace maca::critic {

struct CriticConfig {
  size_t obs_dim = 0;
  std::vector<size_t> action_counts;
  size_t width = 64;
  size_t zs_dim = 256;
  size_t num_blocks = 1;
};

// Z holds one row per agent; z_s is the mean of those rows.
struct StateEmbedding {
  Tensor per_agent;
  std::vector<double> pooled;
};

// Row-stochastic n x n agent correlation matrix.
struct AttentionRollout {
  Tensor matrix;
};

// Per-agent action distributions: the live policy for agents in
// `marginalized`, one-hot at the taken action for everyone else.
struct MarginalizedActionDist {
  std::vector<std::vector<double>> rows;
  std::vector<size_t> marginalized;

  // Concatenation of all rows (length sum_i |A_i|).
  std::vector<double> Flatten() const;
};

// Throws std::invalid_argument when G is empty, names an unknown agent, or a
// policy row is not a probability vector.
MarginalizedActionDist MarginalizedDist(
    const std::vector<std::vector<double>>& policies,
    std::span<const size_t> taken, std::vector<size_t> group);

// One-hot rows for a joint action.
MarginalizedActionDist OneHotDist(std::span<const size_t> taken,
                                  std::span<const size_t> action_counts);

// Rollout = R_L ... R_1 with R_l = row_normalize(0.5 A_l + 0.5 I). Throws
// std::invalid_argument if an input is not row-stochastic within 1e-9.
AttentionRollout ComputeAttentionRollout(const std::vector<Tensor>& per_layer);

// Attention-encoder critic. Observations pass through an embedding layer,
// `num_blocks` encoder blocks and an output layer producing per-agent
// embeddings Z; z_s is their mean. The value head is a single affine map over
// [z_s, flattened action distribution], so for a fixed z_s it is affine in
// the distribution and commutes with expectations over sampled actions.
class Critic {
 public:
  Critic(CriticConfig config, uint64_t seed);

  struct Encoded {
    Var pooled;     // B x zs_dim
    Var per_agent;  // (B * n) x zs_dim
    // attention[layer][sample] is n x n.
    std::vector<std::vector<Tensor>> attention;
  };

  // `obs` stacks B samples of n agent rows: (B * n) x obs_dim.
  Encoded EncodeBatch(Tape& tape, const Tensor& obs) const;

  struct EncodeResult {
    StateEmbedding embedding;
    std::vector<Tensor> attention;  // one n x n matrix per layer
  };
  EncodeResult Encode(const std::vector<std::vector<double>>& observations) const;

  // Q over a batch: pooled (B x zs_dim), dists (B x sum |A_i|) -> B x 1.
  Var QBatch(Tape& tape, Var pooled, const Tensor& dists) const;

  // Direct evaluation of the affine head without recording a tape.
  double QValue(std::span<const double> z_s, const MarginalizedActionDist& dist) const;
  double QValue(std::span<const double> z_s, std::span<const double> flat_dist) const;
  // V(s) = Q(s, pi).
  double VValue(std::span<const double> z_s,
                const std::vector<std::vector<double>>& policies) const;

  std::vector<Parameter*> Parameters();
  std::vector<Parameter*> EncoderParameters();
  std::vector<Parameter*> HeadParameters();

  const CriticConfig& config() const { return config_; }
  size_t n_agents() const { return config_.action_counts.size(); }
  size_t dist_dim() const { return dist_dim_; }
  Linear& q_head() { return head_; }
  const Linear& q_head() const { return head_; }

 private:
  CriticConfig config_;
  size_t dist_dim_ = 0;
  // Layers are logically const during evaluation; Leaf() needs mutable
  // Parameter references for gradient accumulation.
  mutable Embedding embed_;
  mutable std::vector<EncoderBlock> blocks_;
  mutable Linear out_;
  mutable Linear head_;
};

}  // namespace maca::critic

#endif  // MACA_CRITIC_CRITIC_H_
