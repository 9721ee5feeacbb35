#ifndef MACA_ADVANTAGE_ADVANTAGE_H_
#define MACA_ADVANTAGE_ADVANTAGE_H_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "maca/critic/critic.h"
#include "maca/envs/trajectory.h"

namespace maca::advantage {

// Mixing weights (psi_Jnt, psi_Ind, psi_Cor) on the 3-simplex.
using Psi = std::array<double, 3>;

inline constexpr double kSimplexTolerance = 1e-9;

// Full uses all three baselines; Jnt/Ind/Cor keep a single one; NoX drops X
// and renormalizes the remaining two by softmax.
enum class Variant { kFull, kJnt, kInd, kCor, kNoJnt, kNoInd, kNoCor };

Variant ParseVariant(std::string_view name);
std::string VariantName(Variant v);
std::vector<Variant> AllVariants();
// True when the variant's weights depend on the coefficient head.
bool UsesCoefficients(Variant v);

struct CorrSet {
  size_t agent = 0;
  std::vector<size_t> members;  // sorted, always contains `agent`
};

// Agents j with rollout(i, j) >= sigma, plus i itself. Throws
// std::invalid_argument for sigma outside [0, 1].
CorrSet ComputeCorrSet(const critic::AttentionRollout& rollout, size_t agent,
                       double sigma);

inline double DefaultSigma(size_t n_agents) {
  return 1.0 / static_cast<double>(n_agents);
}

// E over a_G of Q(s, a), evaluated in one pass through the affine head.
// Throws std::invalid_argument when `agent` is not in `group`.
double KLevelBaseline(const critic::Critic& critic, std::span<const double> z_s,
                      const envs::PolicyRows& policies,
                      std::span<const size_t> taken,
                      const std::vector<size_t>& group, size_t agent);

// psi . (b_jnt, b_ind, b_cor). Throws when psi is off the simplex by more
// than kSimplexTolerance.
double MacaBaseline(double b_jnt, double b_ind, double b_cor, const Psi& psi);

// Applies the variant mask to three logits and softmaxes the survivors.
Psi AblationWeights(Variant variant, std::span<const double, 3> logits);

// Linear map eta from [z_s, z_i] (or z_s alone when shared) to three logits.
// Zero-initialized, so initial weights are uniform.
class CoeffHead {
 public:
  CoeffHead() = default;
  CoeffHead(size_t zs_dim, bool shared);

  std::array<double, 3> Logits(std::span<const double> z_s,
                               std::span<const double> z_i) const;
  Psi Weights(std::span<const double> z_s, std::span<const double> z_i,
              Variant variant) const;

  bool shared() const { return shared_; }
  size_t input_dim() const { return input_dim_; }
  size_t num_params() const { return params_.size(); }
  const std::vector<double>& params() const { return params_; }
  // Layout: weight (input_dim x 3) row-major, then 3 biases.
  void SetParams(std::span<const double> eta);

 private:
  size_t zs_dim_ = 0;
  size_t input_dim_ = 0;
  bool shared_ = false;
  std::vector<double> params_;
};

struct AdvantageRecord {
  double q_taken = 0.0;
  double b_jnt = 0.0;
  double b_ind = 0.0;
  double b_cor = 0.0;
  double b_maca = 0.0;
  double advantage = 0.0;
  Psi psi{};
  size_t corrset_size = 0;
};

struct AdvantageEstimate {
  size_t num_steps = 0;
  size_t n_agents = 0;
  // Indexed t * n_agents + i.
  std::vector<AdvantageRecord> records;
  // One rollout per step.
  std::vector<critic::AttentionRollout> rollouts;

  const AdvantageRecord& at(size_t t, size_t i) const {
    return records[t * n_agents + i];
  }
};

struct AdvantageOptions {
  double sigma = -1.0;  // negative selects 1/n
  Variant variant = Variant::kFull;
};

// MACA advantage Q(s, a) - psi_i . (b_jnt, b_ind_i, b_cor_i) for every agent
// and step, using the policy rows stored at collection time.
AdvantageEstimate ComputeMacaAdvantage(const envs::TrajectoryBatch& batch,
                                       const critic::Critic& critic,
                                       const CoeffHead& coeff,
                                       const AdvantageOptions& options);

struct BaselineStats {
  double mean = 0.0;
  double variance = 0.0;
};

struct AdvantageSummary {
  BaselineStats advantage, b_jnt, b_ind, b_cor, b_maca;
  Psi psi_mean{};
  double corrset_mean_size = 0.0;
  // Largest |sum(psi) - 1| or negative component seen.
  double max_simplex_error = 0.0;
};

AdvantageSummary Summarize(const AdvantageEstimate& estimate);

}  // namespace maca::advantage

#endif  // MACA_ADVANTAGE_ADVANTAGE_H_
