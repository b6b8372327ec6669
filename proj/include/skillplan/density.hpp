#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "skillplan/rng.hpp"

namespace skillplan::density {

using Eigen::MatrixXd;
using Eigen::VectorXd;

class DensityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Sigma + floor * I. The result admits a Cholesky factorization for any
/// symmetric input and floor > 0.
MatrixXd regularize(const MatrixXd& sigma, double floor);

constexpr double kDefaultCovarianceFloor = 1e-6;

/// Multivariate Gaussian. Covariance must be symmetric (1e-12) and positive
/// definite; the Cholesky factor is cached at construction.
class Gaussian {
 public:
  Gaussian(VectorXd mean, MatrixXd covariance);

  const VectorXd& mean() const { return mean_; }
  const MatrixXd& covariance() const { return cov_; }
  Eigen::Index dim() const { return mean_.size(); }

  double log_pdf(const VectorXd& x) const;

  VectorXd sample(Rng& rng) const;

 private:
  VectorXd mean_;
  MatrixXd cov_;
  Eigen::LLT<MatrixXd> llt_;
  double log_norm_ = 0.0;  // -0.5 * (d log 2pi + log det)
};

/// Mixture of Gaussians; weights positive and summing to 1 (1e-12).
class Gmm {
 public:
  struct Component {
    double weight;
    Gaussian gaussian;
  };

  explicit Gmm(std::vector<Component> components);

  const std::vector<Component>& components() const { return components_; }
  Eigen::Index dim() const { return components_.front().gaussian.dim(); }
  std::size_t size() const { return components_.size(); }

  double log_pdf(const VectorXd& x) const;

  VectorXd sample(Rng& rng) const;

 private:
  std::vector<Component> components_;
};

/// Samples with unnormalized weights z_j >= 0 and normalized weights
/// zbar_j = z_j / sum z_j.
struct WeightedSamples {
  std::vector<VectorXd> samples;
  VectorXd z;     // unnormalized, >= 0
  VectorXd zbar;  // normalized

  static WeightedSamples from_weights(std::vector<VectorXd> samples, VectorXd z);

  /// Max-shift exponentiation of log weights: z_j = exp(lz_j - max lz). When
  /// every log weight is -inf the weights fall back to uniform and
  /// `degenerate` is set.
  static WeightedSamples from_log_weights(std::vector<VectorXd> samples, const VectorXd& log_z,
                                          bool* degenerate = nullptr);
};

/// Closed-form weighted maximum-likelihood Gaussian:
///   mu = sum zbar_j x_j,  Sigma = sum zbar_j (mu - x_j)(mu - x_j)^T
/// followed by regularize(Sigma, floor).
Gaussian fit_gaussian_weighted(const WeightedSamples& ws, double floor = kDefaultCovarianceFloor);

struct EmOptions {
  int max_iters = 100;
  double tol = 1e-8;  // stop when weighted log-likelihood changes less
  double floor = kDefaultCovarianceFloor;
};

/// Weighted EM. Per-sample weights zbar_j multiply the responsibilities in
/// every M-step; each component covariance is regularized. A component whose
/// soft count collapses is re-seeded at the highest-weight sample.
Gmm fit_gmm_weighted(const WeightedSamples& ws, int k, const Gmm& init, const EmOptions& opts = {});

/// Weighted log-likelihood sum_j zbar_j log p(x_j).
double weighted_log_likelihood(const Gmm& model, const WeightedSamples& ws);

/// k-means++ style seeding (fixed rng), unit covariance scaled to the data
/// spread. Used to initialize demo fits.
Gmm kmeanspp_init(const std::vector<VectorXd>& samples, int k, Rng& rng,
                  double floor = kDefaultCovarianceFloor);

nlohmann::json to_json(const Gaussian& g);
nlohmann::json to_json(const Gmm& g);
Gaussian gaussian_from_json(const nlohmann::json& j);
Gmm gmm_from_json(const nlohmann::json& j);

}  // namespace skillplan::density
