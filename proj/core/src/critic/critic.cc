#include "maca/critic/critic.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace maca::critic {

namespace {

constexpr double kStochasticTolerance = 1e-9;

void CheckProbabilityRow(std::span<const double> row, size_t agent) {
  double total = 0.0;
  for (double p : row) {
    if (!(p >= 0.0) || !std::isfinite(p)) {
      throw std::invalid_argument("policy row " + std::to_string(agent) +
                                  " has an invalid probability");
    }
    total += p;
  }
  if (std::abs(total - 1.0) > kStochasticTolerance) {
    throw std::invalid_argument("policy row " + std::to_string(agent) +
                                " sums to " + std::to_string(total));
  }
}

}  // namespace

std::vector<double> MarginalizedActionDist::Flatten() const {
  std::vector<double> flat;
  for (const auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  return flat;
}

MarginalizedActionDist MarginalizedDist(
    const std::vector<std::vector<double>>& policies,
    std::span<const size_t> taken, std::vector<size_t> group) {
  const size_t n = policies.size();
  if (group.empty()) {
    throw std::invalid_argument("MarginalizedDist: empty agent subset");
  }
  if (taken.size() != n) {
    throw std::invalid_argument("MarginalizedDist: joint action size mismatch");
  }
  std::sort(group.begin(), group.end());
  group.erase(std::unique(group.begin(), group.end()), group.end());
  std::vector<bool> in_group(n, false);
  for (size_t j : group) {
    if (j >= n) throw std::invalid_argument("MarginalizedDist: agent outside N");
    in_group[j] = true;
  }
  MarginalizedActionDist out;
  out.marginalized = std::move(group);
  out.rows.reserve(n);
  for (size_t j = 0; j < n; ++j) {
    CheckProbabilityRow(policies[j], j);
    if (taken[j] >= policies[j].size()) {
      throw std::invalid_argument("MarginalizedDist: taken action out of range");
    }
    if (in_group[j]) {
      out.rows.push_back(policies[j]);
    } else {
      std::vector<double> one_hot(policies[j].size(), 0.0);
      one_hot[taken[j]] = 1.0;
      out.rows.push_back(std::move(one_hot));
    }
  }
  return out;
}

MarginalizedActionDist OneHotDist(std::span<const size_t> taken,
                                  std::span<const size_t> action_counts) {
  MarginalizedActionDist out;
  for (size_t j = 0; j < taken.size(); ++j) {
    std::vector<double> row(action_counts[j], 0.0);
    row.at(taken[j]) = 1.0;
    out.rows.push_back(std::move(row));
  }
  return out;
}

AttentionRollout ComputeAttentionRollout(const std::vector<Tensor>& per_layer) {
  if (per_layer.empty()) {
    throw std::invalid_argument("attention rollout: no layers");
  }
  const size_t n = per_layer.front().rows();
  Tensor rollout = Tensor::Identity(n);
  for (size_t l = 0; l < per_layer.size(); ++l) {
    const Tensor& a = per_layer[l];
    if (a.rank() != 2 || a.rows() != n || a.cols() != n) {
      throw std::invalid_argument("attention rollout: layer " + std::to_string(l) +
                                  " is not " + std::to_string(n) + "x" +
                                  std::to_string(n));
    }
    Tensor mixed({n, n});
    for (size_t i = 0; i < n; ++i) {
      double row_total = 0.0;
      for (size_t j = 0; j < n; ++j) {
        if (!(a(i, j) >= -kStochasticTolerance)) {
          throw std::invalid_argument("attention rollout: negative weight");
        }
        row_total += a(i, j);
      }
      if (std::abs(row_total - 1.0) > kStochasticTolerance) {
        throw std::invalid_argument("attention rollout: layer " +
                                    std::to_string(l) + " row " +
                                    std::to_string(i) + " is not stochastic");
      }
      double norm = 0.0;
      for (size_t j = 0; j < n; ++j) {
        mixed(i, j) = 0.5 * a(i, j) + (i == j ? 0.5 : 0.0);
        norm += mixed(i, j);
      }
      for (size_t j = 0; j < n; ++j) mixed(i, j) /= norm;
    }
    rollout = MatMul(mixed, rollout);
  }
  return {std::move(rollout)};
}

Critic::Critic(CriticConfig config, uint64_t seed) : config_(std::move(config)) {
  if (config_.obs_dim == 0 || config_.action_counts.empty()) {
    throw std::invalid_argument("Critic: obs_dim and action_counts required");
  }
  for (size_t c : config_.action_counts) dist_dim_ += c;
  Rng rng(seed);
  embed_ = Embedding("critic.embed", config_.obs_dim, config_.width, rng);
  for (size_t b = 0; b < config_.num_blocks; ++b) {
    blocks_.emplace_back("critic.block" + std::to_string(b), config_.width, rng);
  }
  out_ = Linear("critic.out", config_.width, config_.zs_dim, rng);
  head_ = Linear("critic.q_head", config_.zs_dim + dist_dim_, 1, rng, 0.0);
}

Critic::Encoded Critic::EncodeBatch(Tape& tape, const Tensor& obs) const {
  const size_t n = n_agents();
  if (obs.rank() != 2 || obs.cols() != config_.obs_dim || obs.rows() % n != 0 ||
      obs.rows() == 0) {
    throw std::invalid_argument("Critic: observation batch " + obs.ShapeString() +
                                " does not match " + std::to_string(n) +
                                " agents x " + std::to_string(config_.obs_dim));
  }
  Encoded out;
  Var x = embed_.Forward(tape, tape.Constant(obs));
  out.attention.resize(blocks_.size());
  for (size_t b = 0; b < blocks_.size(); ++b) {
    x = blocks_[b].Forward(tape, x, n, &out.attention[b]);
  }
  out.per_agent = Gelu(out_.Forward(tape, x));
  out.pooled = GroupMeanRows(out.per_agent, n);
  return out;
}

Critic::EncodeResult Critic::Encode(
    const std::vector<std::vector<double>>& observations) const {
  if (observations.size() != n_agents()) {
    throw std::invalid_argument("Critic::Encode: expected " +
                                std::to_string(n_agents()) + " observations");
  }
  for (const auto& o : observations) {
    if (o.size() != config_.obs_dim) {
      throw std::invalid_argument("Critic::Encode: observation dimension mismatch");
    }
  }
  Tape tape;
  Encoded enc = EncodeBatch(tape, Tensor::FromRows(observations));
  EncodeResult result;
  result.embedding.per_agent = enc.per_agent.value();
  result.embedding.pooled = enc.pooled.value().RowVector(0);
  for (auto& layer : enc.attention) result.attention.push_back(std::move(layer.front()));
  return result;
}

Var Critic::QBatch(Tape& tape, Var pooled, const Tensor& dists) const {
  if (dists.cols() != dist_dim_ || dists.rows() != pooled.rows()) {
    throw std::invalid_argument("Critic::QBatch: distribution batch " +
                                dists.ShapeString() + " does not match head");
  }
  return head_.Forward(tape, ConcatCols(pooled, tape.Constant(dists)));
}

double Critic::QValue(std::span<const double> z_s,
                      std::span<const double> flat_dist) const {
  if (z_s.size() != config_.zs_dim || flat_dist.size() != dist_dim_) {
    throw std::invalid_argument("Critic::QValue: input shape mismatch");
  }
  const Tensor& w = head_.weight().value;
  double q = head_.bias().value[0];
  for (size_t k = 0; k < z_s.size(); ++k) q += z_s[k] * w[k];
  for (size_t k = 0; k < flat_dist.size(); ++k) q += flat_dist[k] * w[z_s.size() + k];
  return q;
}

double Critic::QValue(std::span<const double> z_s,
                      const MarginalizedActionDist& dist) const {
  return QValue(z_s, dist.Flatten());
}

double Critic::VValue(std::span<const double> z_s,
                      const std::vector<std::vector<double>>& policies) const {
  std::vector<double> flat;
  for (size_t j = 0; j < policies.size(); ++j) {
    CheckProbabilityRow(policies[j], j);
    flat.insert(flat.end(), policies[j].begin(), policies[j].end());
  }
  return QValue(z_s, flat);
}

std::vector<Parameter*> Critic::EncoderParameters() {
  std::vector<Parameter*> out = embed_.Parameters();
  for (EncoderBlock& b : blocks_) {
    auto p = b.Parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  auto p = out_.Parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

std::vector<Parameter*> Critic::HeadParameters() { return head_.Parameters(); }

std::vector<Parameter*> Critic::Parameters() {
  auto out = EncoderParameters();
  auto h = HeadParameters();
  out.insert(out.end(), h.begin(), h.end());
  return out;
}

}  // namespace maca::critic
