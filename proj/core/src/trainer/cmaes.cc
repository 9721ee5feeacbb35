#include "maca/trainer/cmaes.h"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <stdexcept>

namespace maca::trainer {

CmaEs::CmaEs(std::vector<double> mean, double step_size, size_t population,
             uint64_t seed)
    : n_(static_cast<Eigen::Index>(mean.size())), sigma_(step_size), rng_(seed) {
  if (mean.empty()) throw std::invalid_argument("CMA-ES: empty search space");
  if (!(step_size > 0.0)) throw std::invalid_argument("CMA-ES: step size must be positive");
  const double n = static_cast<double>(n_);
  lambda_ = population == 0 ? 4 + static_cast<size_t>(std::floor(3.0 * std::log(n)))
                            : population;
  if (lambda_ < 4) throw std::invalid_argument("CMA-ES: population size must be >= 4");
  mu_ = lambda_ / 2;

  weights_.resize(static_cast<Eigen::Index>(mu_));
  for (size_t i = 0; i < mu_; ++i) {
    weights_[static_cast<Eigen::Index>(i)] =
        std::log(static_cast<double>(mu_) + 0.5) - std::log(static_cast<double>(i + 1));
  }
  weights_ /= weights_.sum();
  mu_eff_ = 1.0 / weights_.squaredNorm();

  c_sigma_ = (mu_eff_ + 2.0) / (n + mu_eff_ + 5.0);
  d_sigma_ = 1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff_ - 1.0) / (n + 1.0)) - 1.0) +
             c_sigma_;
  c_c_ = (4.0 + mu_eff_ / n) / (n + 4.0 + 2.0 * mu_eff_ / n);
  c_1_ = 2.0 / ((n + 1.3) * (n + 1.3) + mu_eff_);
  c_mu_ = std::min(1.0 - c_1_,
                   2.0 * (mu_eff_ - 2.0 + 1.0 / mu_eff_) / ((n + 2.0) * (n + 2.0) + mu_eff_));
  chi_n_ = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  eigen_gap_ = std::max<size_t>(
      1, static_cast<size_t>(static_cast<double>(lambda_) / ((c_1_ + c_mu_) * n * 10.0)));

  mean_ = Eigen::Map<const Eigen::VectorXd>(mean.data(), n_);
  mean_std_ = std::move(mean);
  cov_ = Eigen::MatrixXd::Identity(n_, n_);
  basis_ = Eigen::MatrixXd::Identity(n_, n_);
  scales_ = Eigen::VectorXd::Ones(n_);
  path_sigma_ = Eigen::VectorXd::Zero(n_);
  path_c_ = Eigen::VectorXd::Zero(n_);
}

std::vector<std::vector<double>> CmaEs::Ask() {
  std::vector<std::vector<double>> out(lambda_);
  Eigen::VectorXd z(n_);
  for (auto& x : out) {
    for (Eigen::Index k = 0; k < n_; ++k) z[k] = rng_.Normal();
    const Eigen::VectorXd cand = mean_ + sigma_ * (basis_ * scales_.cwiseProduct(z));
    x.assign(cand.data(), cand.data() + n_);
  }
  return out;
}

void CmaEs::Tell(const std::vector<std::vector<double>>& candidates,
                 const std::vector<double>& fitness) {
  if (candidates.size() != lambda_ || fitness.size() != lambda_) {
    throw std::invalid_argument("CMA-ES: expected one fitness per candidate");
  }
  std::vector<size_t> order(lambda_);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return fitness[a] < fitness[b]; });

  Eigen::MatrixXd steps(n_, static_cast<Eigen::Index>(mu_));
  for (size_t i = 0; i < mu_; ++i) {
    const auto& x = candidates[order[i]];
    if (x.size() != static_cast<size_t>(n_)) {
      throw std::invalid_argument("CMA-ES: candidate dimension mismatch");
    }
    steps.col(static_cast<Eigen::Index>(i)) =
        (Eigen::Map<const Eigen::VectorXd>(x.data(), n_) - mean_) / sigma_;
  }
  const Eigen::VectorXd y_w = steps * weights_;
  mean_ += sigma_ * y_w;

  const Eigen::VectorXd inv_sqrt_y =
      basis_ * (basis_.transpose() * y_w).cwiseQuotient(scales_);
  path_sigma_ = (1.0 - c_sigma_) * path_sigma_ +
                std::sqrt(c_sigma_ * (2.0 - c_sigma_) * mu_eff_) * inv_sqrt_y;
  const double gen = static_cast<double>(generation_ + 1);
  const double ps_norm = path_sigma_.norm() /
                         std::sqrt(1.0 - std::pow(1.0 - c_sigma_, 2.0 * gen));
  const double n = static_cast<double>(n_);
  const bool h_sigma = ps_norm < (1.4 + 2.0 / (n + 1.0)) * chi_n_;
  path_c_ = (1.0 - c_c_) * path_c_;
  if (h_sigma) path_c_ += std::sqrt(c_c_ * (2.0 - c_c_) * mu_eff_) * y_w;

  Eigen::MatrixXd rank_mu = steps * weights_.asDiagonal() * steps.transpose();
  const double delta_h = h_sigma ? 0.0 : c_c_ * (2.0 - c_c_);
  cov_ = (1.0 - c_1_ - c_mu_) * cov_ +
         c_1_ * (path_c_ * path_c_.transpose() + delta_h * cov_) + c_mu_ * rank_mu;

  sigma_ *= std::exp((c_sigma_ / d_sigma_) * (path_sigma_.norm() / chi_n_ - 1.0));
  ++generation_;
  if (generation_ - eigen_generation_ >= eigen_gap_ || !cov_.allFinite()) {
    UpdateEigensystem();
  }
  mean_std_.assign(mean_.data(), mean_.data() + n_);
}

void CmaEs::Step(const std::function<double(std::span<const double>)>& fitness) {
  auto candidates = Ask();
  std::vector<double> f;
  f.reserve(candidates.size());
  for (const auto& c : candidates) f.push_back(fitness(c));
  Tell(candidates, f);
}

void CmaEs::UpdateEigensystem() {
  eigen_generation_ = generation_;
  cov_ = 0.5 * (cov_ + cov_.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov_);
  const bool ok = eig.info() == Eigen::Success && cov_.allFinite() &&
                  eig.eigenvalues().minCoeff() > 0.0 && std::isfinite(sigma_) &&
                  sigma_ > 0.0;
  if (!ok) {
    std::cerr << "warning: CMA-ES covariance lost positive definiteness at "
                 "generation "
              << generation_ << "; resetting\n";
    ++resets_;
    cov_ = Eigen::MatrixXd::Identity(n_, n_);
    basis_ = Eigen::MatrixXd::Identity(n_, n_);
    scales_ = Eigen::VectorXd::Ones(n_);
    path_sigma_.setZero();
    path_c_.setZero();
    if (!std::isfinite(sigma_) || sigma_ <= 0.0) sigma_ = 1.0;
    return;
  }
  basis_ = eig.eigenvectors();
  scales_ = eig.eigenvalues().cwiseSqrt();
}

CoeffOptimState CmaEs::state() const {
  return {mean_std_, cov_, sigma_, generation_, lambda_};
}

}  // namespace maca::trainer
