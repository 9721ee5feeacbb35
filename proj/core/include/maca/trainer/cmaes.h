#ifndef MACA_TRAINER_CMAES_H_
#define MACA_TRAINER_CMAES_H_

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "maca/numerics/random.h"

namespace maca::trainer {

// Snapshot of the search distribution N(mean, step_size^2 * covariance).
struct CoeffOptimState {
  std::vector<double> mean;
  Eigen::MatrixXd covariance;
  double step_size = 0.0;
  size_t generation = 0;
  size_t population = 0;
};

// (mu/mu_w, lambda) CMA-ES with cumulative step-size adaptation and rank-one
// plus rank-mu covariance updates, minimizing fitness.
class CmaEs {
 public:
  // population == 0 selects 4 + floor(3 ln n).
  CmaEs(std::vector<double> mean, double step_size, size_t population,
        uint64_t seed);

  // Samples `population` candidates from the current distribution.
  std::vector<std::vector<double>> Ask();
  // Updates with the candidates returned by the last Ask() and their fitness
  // (lower is better).
  void Tell(const std::vector<std::vector<double>>& candidates,
            const std::vector<double>& fitness);
  // One full generation.
  void Step(const std::function<double(std::span<const double>)>& fitness);

  CoeffOptimState state() const;
  const std::vector<double>& mean() const { return mean_std_; }
  double step_size() const { return sigma_; }
  size_t generation() const { return generation_; }
  size_t population() const { return lambda_; }
  size_t dimension() const { return static_cast<size_t>(n_); }
  // Times the covariance was reset after losing positive definiteness.
  size_t resets() const { return resets_; }

 private:
  void UpdateEigensystem();

  Eigen::Index n_;
  size_t lambda_;
  size_t mu_;
  Eigen::VectorXd weights_;
  double mu_eff_, c_sigma_, d_sigma_, c_c_, c_1_, c_mu_, chi_n_;

  Eigen::VectorXd mean_;
  std::vector<double> mean_std_;
  double sigma_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd basis_;      // eigenvectors B
  Eigen::VectorXd scales_;     // sqrt of eigenvalues D
  Eigen::VectorXd path_sigma_, path_c_;
  size_t generation_ = 0;
  // Eigendecomposition is refreshed every eigen_gap_ generations.
  size_t eigen_gap_ = 1;
  size_t eigen_generation_ = 0;
  size_t resets_ = 0;
  Rng rng_;
};

}  // namespace maca::trainer

#endif  // MACA_TRAINER_CMAES_H_
