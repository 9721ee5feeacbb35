#include "maca/advantage/advantage.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "maca/numerics/tensor.h"

namespace maca::advantage {

Variant ParseVariant(std::string_view name) {
  if (name == "Full" || name == "MACA") return Variant::kFull;
  if (name == "Jnt") return Variant::kJnt;
  if (name == "Ind") return Variant::kInd;
  if (name == "Cor") return Variant::kCor;
  if (name == "NoJnt") return Variant::kNoJnt;
  if (name == "NoInd") return Variant::kNoInd;
  if (name == "NoCor") return Variant::kNoCor;
  throw std::invalid_argument("unknown variant '" + std::string(name) + "'");
}

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kFull: return "Full";
    case Variant::kJnt: return "Jnt";
    case Variant::kInd: return "Ind";
    case Variant::kCor: return "Cor";
    case Variant::kNoJnt: return "NoJnt";
    case Variant::kNoInd: return "NoInd";
    case Variant::kNoCor: return "NoCor";
  }
  return "?";
}

std::vector<Variant> AllVariants() {
  return {Variant::kFull,  Variant::kJnt,   Variant::kInd,  Variant::kCor,
          Variant::kNoJnt, Variant::kNoInd, Variant::kNoCor};
}

bool UsesCoefficients(Variant v) {
  return v == Variant::kFull || v == Variant::kNoJnt || v == Variant::kNoInd ||
         v == Variant::kNoCor;
}

CorrSet ComputeCorrSet(const critic::AttentionRollout& rollout, size_t agent,
                       double sigma) {
  if (!(sigma >= 0.0 && sigma <= 1.0)) {
    throw std::invalid_argument("CorrSet threshold must lie in [0, 1]");
  }
  const Tensor& m = rollout.matrix;
  if (agent >= m.rows()) throw std::out_of_range("CorrSet: agent index");
  CorrSet out{agent, {}};
  for (size_t j = 0; j < m.cols(); ++j) {
    if (j == agent || m(agent, j) >= sigma) out.members.push_back(j);
  }
  return out;
}

double KLevelBaseline(const critic::Critic& critic, std::span<const double> z_s,
                      const envs::PolicyRows& policies,
                      std::span<const size_t> taken,
                      const std::vector<size_t>& group, size_t agent) {
  if (std::find(group.begin(), group.end(), agent) == group.end()) {
    throw std::invalid_argument(
        "k-level baseline: the agent must be marginalized (agent not in G)");
  }
  return critic.QValue(z_s, critic::MarginalizedDist(policies, taken, group));
}

double MacaBaseline(double b_jnt, double b_ind, double b_cor, const Psi& psi) {
  double total = 0.0;
  for (double w : psi) {
    if (w < -kSimplexTolerance) {
      throw std::invalid_argument("MACA baseline: negative weight");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > kSimplexTolerance) {
    throw std::invalid_argument("MACA baseline: weights off the simplex");
  }
  return psi[0] * b_jnt + psi[1] * b_ind + psi[2] * b_cor;
}

Psi AblationWeights(Variant variant, std::span<const double, 3> logits) {
  std::array<bool, 3> keep{};
  switch (variant) {
    case Variant::kFull: keep = {true, true, true}; break;
    case Variant::kJnt: keep = {true, false, false}; break;
    case Variant::kInd: keep = {false, true, false}; break;
    case Variant::kCor: keep = {false, false, true}; break;
    case Variant::kNoJnt: keep = {false, true, true}; break;
    case Variant::kNoInd: keep = {true, false, true}; break;
    case Variant::kNoCor: keep = {true, true, false}; break;
  }
  std::vector<double> kept;
  for (size_t m = 0; m < 3; ++m) {
    if (keep[m]) kept.push_back(logits[m]);
  }
  const std::vector<double> p = Softmax(kept);
  Psi psi{0.0, 0.0, 0.0};
  size_t k = 0;
  for (size_t m = 0; m < 3; ++m) {
    if (keep[m]) psi[m] = p[k++];
  }
  return psi;
}

CoeffHead::CoeffHead(size_t zs_dim, bool shared)
    : zs_dim_(zs_dim),
      input_dim_(shared ? zs_dim : 2 * zs_dim),
      shared_(shared),
      params_(input_dim_ * 3 + 3, 0.0) {}

std::array<double, 3> CoeffHead::Logits(std::span<const double> z_s,
                                        std::span<const double> z_i) const {
  if (z_s.size() != zs_dim_ || (!shared_ && z_i.size() != zs_dim_)) {
    throw std::invalid_argument("CoeffHead: input dimension mismatch");
  }
  std::array<double, 3> logits{params_[input_dim_ * 3], params_[input_dim_ * 3 + 1],
                               params_[input_dim_ * 3 + 2]};
  for (size_t k = 0; k < input_dim_; ++k) {
    const double x = k < zs_dim_ ? z_s[k] : z_i[k - zs_dim_];
    for (size_t m = 0; m < 3; ++m) logits[m] += x * params_[k * 3 + m];
  }
  return logits;
}

Psi CoeffHead::Weights(std::span<const double> z_s, std::span<const double> z_i,
                       Variant variant) const {
  const auto logits = Logits(z_s, z_i);
  return AblationWeights(variant, logits);
}

void CoeffHead::SetParams(std::span<const double> eta) {
  if (eta.size() != params_.size()) {
    throw std::invalid_argument("CoeffHead: expected " +
                                std::to_string(params_.size()) + " parameters");
  }
  params_.assign(eta.begin(), eta.end());
}

AdvantageEstimate ComputeMacaAdvantage(const envs::TrajectoryBatch& batch,
                                       const critic::Critic& critic,
                                       const CoeffHead& coeff,
                                       const AdvantageOptions& options) {
  const size_t n = critic.n_agents();
  batch.Validate(n);
  const double sigma = options.sigma < 0.0 ? DefaultSigma(n) : options.sigma;
  AdvantageEstimate est;
  est.num_steps = batch.size();
  est.n_agents = n;
  if (batch.empty()) return est;

  const size_t T = batch.size();
  Tensor obs({T * n, critic.config().obs_dim});
  for (size_t t = 0; t < T; ++t) {
    for (size_t i = 0; i < n; ++i) {
      const auto& o = batch.steps[t].observations[i];
      std::copy(o.begin(), o.end(), obs.row(t * n + i).begin());
    }
  }
  Tape tape;
  const auto enc = critic.EncodeBatch(tape, obs);
  const Tensor& pooled = enc.pooled.value();
  const Tensor& per_agent = enc.per_agent.value();

  est.records.resize(T * n);
  est.rollouts.reserve(T);
  std::vector<size_t> everyone(n);
  for (size_t i = 0; i < n; ++i) everyone[i] = i;
  for (size_t t = 0; t < T; ++t) {
    const envs::StepRecord& step = batch.steps[t];
    std::vector<Tensor> layers;
    for (const auto& layer : enc.attention) layers.push_back(layer[t]);
    est.rollouts.push_back(critic::ComputeAttentionRollout(layers));
    const auto z_s = pooled.row(t);
    const double q_taken = critic.QValue(
        z_s, critic::OneHotDist(step.actions, critic.config().action_counts));
    const double b_jnt =
        KLevelBaseline(critic, z_s, step.policies, step.actions, everyone, 0);
    for (size_t i = 0; i < n; ++i) {
      AdvantageRecord& rec = est.records[t * n + i];
      const CorrSet corr = ComputeCorrSet(est.rollouts.back(), i, sigma);
      rec.q_taken = q_taken;
      rec.b_jnt = b_jnt;
      rec.b_ind = KLevelBaseline(critic, z_s, step.policies, step.actions, {i}, i);
      rec.b_cor = corr.members.size() == n
                      ? b_jnt
                      : KLevelBaseline(critic, z_s, step.policies, step.actions,
                                       corr.members, i);
      rec.corrset_size = corr.members.size();
      rec.psi = coeff.Weights(z_s, per_agent.row(t * n + i), options.variant);
      rec.b_maca = MacaBaseline(rec.b_jnt, rec.b_ind, rec.b_cor, rec.psi);
      rec.advantage = rec.q_taken - rec.b_maca;
    }
  }
  return est;
}

namespace {

BaselineStats Stats(const std::vector<double>& v) {
  BaselineStats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  for (double x : v) s.variance += (x - s.mean) * (x - s.mean);
  s.variance /= static_cast<double>(v.size());
  return s;
}

}  // namespace

AdvantageSummary Summarize(const AdvantageEstimate& estimate) {
  AdvantageSummary out;
  std::vector<double> adv, jnt, ind, cor, maca;
  double corr_total = 0.0;
  for (const AdvantageRecord& r : estimate.records) {
    adv.push_back(r.advantage);
    jnt.push_back(r.b_jnt);
    ind.push_back(r.b_ind);
    cor.push_back(r.b_cor);
    maca.push_back(r.b_maca);
    corr_total += static_cast<double>(r.corrset_size);
    double total = 0.0;
    for (size_t m = 0; m < 3; ++m) {
      out.psi_mean[m] += r.psi[m];
      total += r.psi[m];
      out.max_simplex_error = std::max(out.max_simplex_error, -r.psi[m]);
    }
    out.max_simplex_error = std::max(out.max_simplex_error, std::abs(total - 1.0));
  }
  const size_t count = estimate.records.size();
  if (count > 0) {
    for (double& m : out.psi_mean) m /= static_cast<double>(count);
    out.corrset_mean_size = corr_total / static_cast<double>(count);
  }
  out.advantage = Stats(adv);
  out.b_jnt = Stats(jnt);
  out.b_ind = Stats(ind);
  out.b_cor = Stats(cor);
  out.b_maca = Stats(maca);
  return out;
}

}  // namespace maca::advantage
