#include "skillplan/cem.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace skillplan::cem {

Eigen::Index SurrogateParams::dim() const {
  return std::visit([](const auto& d) { return d.dim(); }, dist);
}

VectorXd SurrogateParams::sample(Rng& rng) const {
  return std::visit([&](const auto& d) { return d.sample(rng); }, dist);
}

double SurrogateParams::log_pdf(const VectorXd& x) const {
  return std::visit([&](const auto& d) { return d.log_pdf(x); }, dist);
}

VectorXd SurrogateParams::mean() const {
  if (is_gaussian()) return std::get<density::Gaussian>(dist).mean();
  const auto& gmm = std::get<density::Gmm>(dist);
  VectorXd m = VectorXd::Zero(gmm.dim());
  for (const auto& c : gmm.components()) m += c.weight * c.gaussian.mean();
  return m;
}

void CemConfig::validate() const {
  if (samples_per_iter < 2) throw CemError("CemConfig: M must be >= 2");
  if (alpha <= 0.0 || alpha >= 1.0) throw CemError("CemConfig: alpha must be in (0, 1)");
  if (max_iters < 0) throw CemError("CemConfig: max_iters must be >= 0");
  if (rejection_budget < 1) throw CemError("CemConfig: rejection budget must be >= 1");
}

double gripper_command(GripperMode mode, double t_norm) {
  switch (mode) {
    case GripperMode::kFree:
      return 0.0;
    case GripperMode::kHeld:
      return 1.0;
    case GripperMode::kClosing:  // close over the last 30% of the action
      return t_norm < 0.7 ? 0.0 : std::min(1.0, (t_norm - 0.7) / 0.3);
    case GripperMode::kOpening:  // open over the first 30%
      return t_norm < 0.3 ? 1.0 - t_norm / 0.3 : 0.0;
  }
  return 0.0;
}

std::optional<Realized> realize(const ActionContext& ctx, const VectorXd& xi,
                                const StartPoint& start, Rng& rng, double noise,
                                sim::Verdict* verdict) {
  Realized out;
  out.xi = xi;
  out.params = dmp::vector_as_params(xi, ctx.joints(), ctx.basis(), ctx.duration);

  sim::RobotState begin = start.state;
  sim::ObjectPoses moved = start.moved;
  if (ctx.event == ActionEvent::kRelease) {
    // The hand opens at the start of a release; the object stays put.
    begin = sim::apply_release(*ctx.scene, begin, nullptr, &moved);
  }

  auto traj = dmp::try_rollout(out.params, begin, *ctx.scene, ctx.dmp_cfg, noise, rng);
  if (!traj) {
    if (verdict) *verdict = {sim::Verdict::kCollision, "ik", -1};
    return std::nullopt;
  }
  out.traj = std::move(*traj);

  const double span = std::max(out.traj.back().t, 1e-12);
  for (auto& step : out.traj) step.u.gripper = gripper_command(ctx.gripper, step.t / span);

  for (const auto& step : out.traj) {
    const sim::Verdict v = sim::check_valid(*ctx.scene, step.s, &moved);
    if (!v.valid()) {
      if (verdict) *verdict = v;
      return std::nullopt;
    }
  }

  out.post_state = out.traj.back().s;
  out.post_moved = moved;
  if (ctx.event == ActionEvent::kGrasp) {
    try {
      out.post_state = sim::apply_grasp(*ctx.scene, out.post_state, ctx.event_object,
                                        ctx.event_frame, ctx.grasp_tol_xy, ctx.grasp_tol_th,
                                        &moved);
    } catch (const sim::SimError&) {
      if (verdict) *verdict = {sim::Verdict::kCollision, "grasp-miss", -1};
      return std::nullopt;
    }
  }

  out.trace = features::trace(ctx.schema, out.traj, *ctx.scene, ctx.objects, &moved);
  return out;
}

SampleBatch sample_valid(const SurrogateParams& v, int M, std::span<const StartPoint> starts,
                         const ActionContext& ctx, const CemConfig& cfg, Rng& rng, bool strict) {
  if (starts.empty()) throw CemError("sample_valid: no start states");

  std::vector<double> start_w(starts.size());
  double max_lp = -std::numeric_limits<double>::infinity();
  for (const auto& s : starts) max_lp = std::max(max_lp, s.log_p);
  for (std::size_t i = 0; i < starts.size(); ++i)
    start_w[i] = std::isfinite(max_lp) ? std::exp(starts[i].log_p - max_lp) : 1.0;

  SampleBatch batch;
  batch.samples.reserve(M);
  for (int slot = 0; slot < M; ++slot) {
    Rng slot_rng = rng.derive(0x510700 + static_cast<std::uint64_t>(slot));
    bool accepted = false;
    for (int attempt = 0; attempt < cfg.rejection_budget; ++attempt) {
      const std::size_t si = slot_rng.categorical(start_w);
      const VectorXd xi = v.sample(slot_rng);
      auto r = realize(ctx, xi, starts[si], slot_rng, cfg.noise);
      if (r) {
        batch.samples.push_back(std::move(*r));
        batch.start_index.push_back(static_cast<int>(si));
        accepted = true;
        break;
      }
      ++batch.rejections;
    }
    if (!accepted && strict)
      throw CemError("sample_valid: rejection budget exhausted (" +
                     std::to_string(batch.rejections) + " rejected draws)");
  }
  if (batch.samples.empty() && strict) throw CemError("sample_valid: no valid samples");
  return batch;
}

VectorXd weigh_log(const std::vector<features::FeatureTrace>& traces,
                   const density::Gmm& expert) {
  if (traces.empty()) throw CemError("weigh: no traces");
  VectorXd log_z(traces.size());
  std::vector<double> lp;
  for (std::size_t j = 0; j < traces.size(); ++j) {
    lp.clear();
    lp.reserve(traces[j].steps.size());
    for (const auto& step : traces[j].steps) lp.push_back(expert.log_pdf(step.x));
    log_z(j) = log_sum_exp(lp);
  }
  return log_z;
}

density::WeightedSamples weigh(const std::vector<features::FeatureTrace>& traces,
                               const density::Gmm& expert, std::vector<VectorXd> xis,
                               bool* degenerate) {
  const VectorXd log_z = weigh_log(traces, expert);
  return density::WeightedSamples::from_log_weights(std::move(xis), log_z, degenerate);
}

namespace {

density::Gaussian blend_gaussian(const density::Gaussian& a, const density::Gaussian& b,
                                 double alpha) {
  return density::Gaussian((1.0 - alpha) * a.mean() + alpha * b.mean(),
                           (1.0 - alpha) * a.covariance() + alpha * b.covariance());
}

}  // namespace

SurrogateParams update(const SurrogateParams& v, const density::WeightedSamples& ws, double alpha,
                       double floor) {
  if (v.is_gaussian()) {
    const auto& cur = std::get<density::Gaussian>(v.dist);
    const density::Gaussian star = density::fit_gaussian_weighted(ws, floor);
    return SurrogateParams{blend_gaussian(cur, star, alpha)};
  }
  const auto& cur = std::get<density::Gmm>(v.dist);
  const int k = static_cast<int>(cur.size());
  const density::Gmm star = density::fit_gmm_weighted(ws, k, cur, {.floor = floor});
  std::vector<density::Gmm::Component> comps;
  comps.reserve(k);
  double wsum = 0.0;
  for (int c = 0; c < k; ++c) {
    const double w =
        (1.0 - alpha) * cur.components()[c].weight + alpha * star.components()[c].weight;
    comps.push_back(
        {w, blend_gaussian(cur.components()[c].gaussian, star.components()[c].gaussian, alpha)});
    wsum += w;
  }
  for (auto& c : comps) c.weight /= wsum;
  return SurrogateParams{density::Gmm(std::move(comps))};
}

CemResult optimize(const density::Gmm& expert, const SurrogateParams& v0,
                   const StartPoint& start, const ActionContext& ctx, const CemConfig& cfg,
                   std::uint64_t seed) {
  cfg.validate();
  CemResult result;
  result.v_final = v0;

  const Rng base(seed);
  const std::vector<StartPoint> starts = {start};
  double prev_mean = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 0;; ++iter) {
    // Stream layout matches the tree planner's single-action base case.
    Rng iter_rng = base.derive(0xCE30000 + static_cast<std::uint64_t>(iter)).derive(0);
    SampleBatch batch = sample_valid(result.v_final, cfg.samples_per_iter, starts, ctx, cfg,
                                     iter_rng, /*strict=*/true);

    std::vector<features::FeatureTrace> traces;
    std::vector<VectorXd> xis;
    traces.reserve(batch.samples.size());
    for (const auto& r : batch.samples) {
      traces.push_back(r.trace);
      xis.push_back(r.xi);
    }
    const VectorXd log_z = weigh_log(traces, expert);
    for (Eigen::Index j = 0; j < log_z.size(); ++j) {
      if (log_z(j) > result.best_log_z) {
        result.best_log_z = log_z(j);
        result.best = batch.samples[j];
      }
    }

    bool degenerate = false;
    const density::WeightedSamples ws =
        density::WeightedSamples::from_log_weights(std::move(xis), log_z, &degenerate);

    CemIterationReport report;
    report.iteration = iter;
    report.mean_log_likelihood = log_z.mean();
    report.ess = 1.0 / ws.zbar.squaredNorm();
    report.rejections = batch.rejections;

    if (cfg.max_iters == 0) {
      report.updated = result.v_final;
      result.reports.push_back(std::move(report));
      break;
    }

    result.v_final = update(result.v_final, ws, cfg.alpha, cfg.floor);
    report.updated = result.v_final;
    result.reports.push_back(std::move(report));

    const double mean = log_z.mean();
    if (iter > 0) {
      const double rel = std::abs(mean - prev_mean) / std::max(1.0, std::abs(prev_mean));
      if (rel < cfg.tol) {
        result.converged = true;
        break;
      }
    }
    prev_mean = mean;
    if (iter + 1 >= cfg.max_iters) break;
  }
  return result;
}

std::string reports_csv(const std::vector<CemIterationReport>& reports) {
  std::ostringstream out;
  out.precision(17);
  out << "iteration,mean_log_likelihood,ess,rejections\n";
  for (const auto& r : reports)
    out << r.iteration << "," << r.mean_log_likelihood << "," << r.ess << "," << r.rejections
        << "\n";
  return out.str();
}

nlohmann::json to_json(const SurrogateParams& v) {
  nlohmann::json j;
  if (v.is_gaussian()) {
    j["kind"] = "gaussian";
    j["dist"] = density::to_json(std::get<density::Gaussian>(v.dist));
  } else {
    j["kind"] = "gmm";
    j["dist"] = density::to_json(std::get<density::Gmm>(v.dist));
  }
  return j;
}

SurrogateParams surrogate_from_json(const nlohmann::json& j) {
  if (j.at("kind").get<std::string>() == "gaussian")
    return SurrogateParams{density::gaussian_from_json(j.at("dist"))};
  return SurrogateParams{density::gmm_from_json(j.at("dist"))};
}

}  // namespace skillplan::cem
