#include "skillplan/density.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

namespace skillplan::density {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

void require(bool cond, const char* msg) {
  if (!cond) throw DensityError(msg);
}

}  // namespace

MatrixXd regularize(const MatrixXd& sigma, double floor) {
  require(sigma.rows() == sigma.cols(), "regularize: matrix not square");
  MatrixXd out = 0.5 * (sigma + sigma.transpose());
  out.diagonal().array() += floor;
  return out;
}

Gaussian::Gaussian(VectorXd mean, MatrixXd covariance)
    : mean_(std::move(mean)), cov_(std::move(covariance)) {
  require(cov_.rows() == mean_.size() && cov_.cols() == mean_.size(),
          "Gaussian: dimension mismatch between mean and covariance");
  require((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, cov_.cwiseAbs().maxCoeff()),
          "Gaussian: covariance not symmetric");
  llt_.compute(cov_);
  require(llt_.info() == Eigen::Success, "Gaussian: covariance not positive definite");
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < cov_.rows(); ++i) log_det += std::log(llt_.matrixL()(i, i));
  log_det *= 2.0;
  log_norm_ = -0.5 * (static_cast<double>(mean_.size()) * kLog2Pi + log_det);
}

double Gaussian::log_pdf(const VectorXd& x) const {
  require(x.size() == mean_.size(), "Gaussian::log_pdf: dimension mismatch");
  const VectorXd d = x - mean_;
  const VectorXd sol = llt_.matrixL().solve(d);
  return log_norm_ - 0.5 * sol.squaredNorm();
}

VectorXd Gaussian::sample(Rng& rng) const {
  VectorXd n(mean_.size());
  for (Eigen::Index i = 0; i < n.size(); ++i) n(i) = rng.gaussian();
  return mean_ + llt_.matrixL() * n;
}

Gmm::Gmm(std::vector<Component> components) : components_(std::move(components)) {
  require(!components_.empty(), "Gmm: no components");
  double total = 0.0;
  for (const auto& c : components_) {
    require(c.weight > 0.0, "Gmm: component weight must be positive");
    require(c.gaussian.dim() == components_.front().gaussian.dim(), "Gmm: mixed dimensions");
    total += c.weight;
  }
  require(std::abs(total - 1.0) <= 1e-12 * components_.size() + 1e-12,
          "Gmm: weights must sum to 1");
}

double Gmm::log_pdf(const VectorXd& x) const {
  std::vector<double> terms(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k)
    terms[k] = std::log(components_[k].weight) + components_[k].gaussian.log_pdf(x);
  return log_sum_exp(terms);
}

VectorXd Gmm::sample(Rng& rng) const {
  std::vector<double> w(components_.size());
  for (std::size_t k = 0; k < w.size(); ++k) w[k] = components_[k].weight;
  return components_[rng.categorical(w)].gaussian.sample(rng);
}

WeightedSamples WeightedSamples::from_weights(std::vector<VectorXd> samples, VectorXd z) {
  require(static_cast<Eigen::Index>(samples.size()) == z.size(),
          "WeightedSamples: sample/weight count mismatch");
  require(z.minCoeff() >= 0.0, "WeightedSamples: negative weight");
  const double total = z.sum();
  require(total > 0.0, "WeightedSamples: all weights are zero");
  WeightedSamples ws;
  ws.samples = std::move(samples);
  ws.z = std::move(z);
  ws.zbar = ws.z / total;
  return ws;
}

WeightedSamples WeightedSamples::from_log_weights(std::vector<VectorXd> samples,
                                                  const VectorXd& log_z, bool* degenerate) {
  const double m = log_z.size() ? log_z.maxCoeff() : -std::numeric_limits<double>::infinity();
  VectorXd z(log_z.size());
  if (!std::isfinite(m)) {
    z.setOnes();
    if (degenerate) *degenerate = true;
  } else {
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = std::exp(log_z(j) - m);
    if (degenerate) *degenerate = false;
  }
  return from_weights(std::move(samples), std::move(z));
}

Gaussian fit_gaussian_weighted(const WeightedSamples& ws, double floor) {
  require(!ws.samples.empty(), "fit_gaussian_weighted: no samples");
  const Eigen::Index d = ws.samples.front().size();
  VectorXd mu = VectorXd::Zero(d);
  for (std::size_t j = 0; j < ws.samples.size(); ++j) mu += ws.zbar(j) * ws.samples[j];
  MatrixXd sigma = MatrixXd::Zero(d, d);
  for (std::size_t j = 0; j < ws.samples.size(); ++j) {
    const VectorXd diff = mu - ws.samples[j];
    sigma += ws.zbar(j) * diff * diff.transpose();
  }
  return Gaussian(mu, regularize(sigma, floor));
}

double weighted_log_likelihood(const Gmm& model, const WeightedSamples& ws) {
  double ll = 0.0;
  for (std::size_t j = 0; j < ws.samples.size(); ++j)
    ll += ws.zbar(j) * model.log_pdf(ws.samples[j]);
  return ll;
}

Gmm fit_gmm_weighted(const WeightedSamples& ws, int k, const Gmm& init, const EmOptions& opts) {
  require(k >= 1, "fit_gmm_weighted: k must be >= 1");
  require(static_cast<int>(ws.samples.size()) >= k, "fit_gmm_weighted: fewer samples than components");
  require(init.size() == static_cast<std::size_t>(k), "fit_gmm_weighted: init has wrong component count");

  const std::size_t n = ws.samples.size();
  const Eigen::Index d = ws.samples.front().size();

  Eigen::Index best_sample = 0;
  ws.zbar.maxCoeff(&best_sample);

  Gmm model = init;
  double prev_ll = weighted_log_likelihood(model, ws);

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    // E-step: responsibilities (log space), scaled by the sample weights.
    MatrixXd resp(n, k);
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<double> lp(k);
      for (int c = 0; c < k; ++c)
        lp[c] = std::log(model.components()[c].weight) +
                model.components()[c].gaussian.log_pdf(ws.samples[j]);
      const double norm = log_sum_exp(lp);
      for (int c = 0; c < k; ++c)
        resp(j, c) = std::isfinite(norm) ? std::exp(lp[c] - norm) : 1.0 / k;
    }

    // M-step with per-sample weights zbar_j.
    std::vector<Gmm::Component> next;
    next.reserve(k);
    VectorXd counts = VectorXd::Zero(k);
    for (int c = 0; c < k; ++c)
      for (std::size_t j = 0; j < n; ++j) counts(c) += ws.zbar(j) * resp(j, c);

    const double count_total = counts.sum();
    for (int c = 0; c < k; ++c) {
      if (counts(c) <= 1e-12) {
        // Re-seed a starved component at the highest-weight sample.
        next.push_back({1.0 / n, Gaussian(ws.samples[best_sample],
                                          regularize(MatrixXd::Zero(d, d), std::max(opts.floor, 1e-4)))});
        continue;
      }
      VectorXd mu = VectorXd::Zero(d);
      for (std::size_t j = 0; j < n; ++j) mu += ws.zbar(j) * resp(j, c) * ws.samples[j];
      mu /= counts(c);
      MatrixXd sigma = MatrixXd::Zero(d, d);
      for (std::size_t j = 0; j < n; ++j) {
        const VectorXd diff = ws.samples[j] - mu;
        sigma += ws.zbar(j) * resp(j, c) * diff * diff.transpose();
      }
      sigma /= counts(c);
      next.push_back({counts(c) / count_total, Gaussian(mu, regularize(sigma, opts.floor))});
    }

    // Renormalize the weights (re-seeded components perturb the sum).
    double wsum = 0.0;
    for (const auto& c : next) wsum += c.weight;
    for (auto& c : next) c.weight /= wsum;

    model = Gmm(std::move(next));
    const double ll = weighted_log_likelihood(model, ws);
    if (std::abs(ll - prev_ll) < opts.tol) {
      prev_ll = ll;
      break;
    }
    prev_ll = ll;
  }
  return model;
}

Gmm kmeanspp_init(const std::vector<VectorXd>& samples, int k, Rng& rng, double floor) {
  require(!samples.empty(), "kmeanspp_init: no samples");
  require(static_cast<int>(samples.size()) >= k, "kmeanspp_init: fewer samples than components");
  const Eigen::Index d = samples.front().size();

  std::vector<VectorXd> centers;
  centers.push_back(samples[rng.index(samples.size())]);
  while (static_cast<int>(centers.size()) < k) {
    std::vector<double> d2(samples.size());
    for (std::size_t j = 0; j < samples.size(); ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, (samples[j] - c).squaredNorm());
      d2[j] = best;
    }
    double total = 0.0;
    for (double v : d2) total += v;
    if (total <= 0.0) {
      centers.push_back(samples[rng.index(samples.size())]);
      continue;
    }
    centers.push_back(samples[rng.categorical(d2)]);
  }

  // Pooled spherical covariance from the data spread.
  VectorXd mean = VectorXd::Zero(d);
  for (const auto& s : samples) mean += s;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (const auto& s : samples) var += (s - mean).squaredNorm();
  var /= static_cast<double>(samples.size() * d);
  var = std::max(var, 1e-4);

  std::vector<Gmm::Component> comps;
  for (int c = 0; c < k; ++c)
    comps.push_back({1.0 / k, Gaussian(centers[c], regularize(var * MatrixXd::Identity(d, d), floor))});
  return Gmm(std::move(comps));
}

nlohmann::json to_json(const Gaussian& g) {
  nlohmann::json j;
  j["mean"] = std::vector<double>(g.mean().data(), g.mean().data() + g.mean().size());
  std::vector<double> cov(g.covariance().size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cov.data(), g.covariance().rows(), g.covariance().cols()) = g.covariance();
  j["cov"] = cov;
  return j;
}

Gaussian gaussian_from_json(const nlohmann::json& j) {
  const auto mean_v = j.at("mean").get<std::vector<double>>();
  const auto cov_v = j.at("cov").get<std::vector<double>>();
  const Eigen::Index d = static_cast<Eigen::Index>(mean_v.size());
  VectorXd mean = Eigen::Map<const VectorXd>(mean_v.data(), d);
  MatrixXd cov = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      cov_v.data(), d, d);
  return Gaussian(std::move(mean), std::move(cov));
}

nlohmann::json to_json(const Gmm& g) {
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : g.components()) {
    nlohmann::json jc = to_json(c.gaussian);
    jc["weight"] = c.weight;
    comps.push_back(jc);
  }
  return nlohmann::json{{"components", comps}};
}

Gmm gmm_from_json(const nlohmann::json& j) {
  std::vector<Gmm::Component> comps;
  for (const auto& jc : j.at("components"))
    comps.push_back({jc.at("weight").get<double>(), gaussian_from_json(jc)});
  return Gmm(std::move(comps));
}

}  // namespace skillplan::density
