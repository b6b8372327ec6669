#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "skillplan/density.hpp"
#include "skillplan/dmp.hpp"
#include "skillplan/features.hpp"
#include "skillplan/rng.hpp"
#include "skillplan/sim.hpp"

namespace skillplan::cem {

using Eigen::VectorXd;

class CemError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Surrogate distribution over flattened trajectory parameters.
struct SurrogateParams {
  std::variant<density::Gaussian, density::Gmm> dist;

  bool is_gaussian() const { return std::holds_alternative<density::Gaussian>(dist); }
  Eigen::Index dim() const;
  VectorXd sample(Rng& rng) const;
  VectorXd mean() const;
  double log_pdf(const VectorXd& x) const;
};

struct CemConfig {
  int samples_per_iter = 200;      // M
  double alpha = 0.5;              // step size in (0, 1)
  int max_iters = 15;
  double tol = 1e-3;               // relative change of mean expert log-likelihood
  int rejection_budget = 50;       // resample attempts per slot (total <= budget * M)
  double floor = density::kDefaultCovarianceFloor;
  double noise = 0.0;              // control noise std passed to rollouts

  void validate() const;
};

struct CemIterationReport {
  int iteration = 0;
  double mean_log_likelihood = 0.0;  // mean over samples of log z_j
  double ess = 0.0;                  // 1 / sum zbar^2
  int rejections = 0;
  SurrogateParams updated;
};

/// How the gripper command evolves over an action.
enum class GripperMode { kFree, kHeld, kClosing, kOpening };
double gripper_command(GripperMode mode, double t_norm);

/// End-of-action (or, for releases, start-of-action) world event.
enum class ActionEvent { kNone, kGrasp, kRelease };

/// Everything needed to realize a parameter vector as a validated trajectory
/// for one grounded action in one scene.
struct ActionContext {
  const sim::Scene* scene = nullptr;
  features::FeatureSchema schema;
  std::vector<std::string> objects;  // role-bound scene object names
  dmp::DmpConfig dmp_cfg;
  double duration = 2.0;
  GripperMode gripper = GripperMode::kFree;
  ActionEvent event = ActionEvent::kNone;
  std::string event_object;  // grasped object
  std::string event_frame;   // bound grasp frame ("" = any)
  double grasp_tol_xy = 0.04;
  double grasp_tol_th = 0.6;

  int joints() const { return scene->arm.dof(); }
  int basis() const { return dmp_cfg.basis_count; }
  int param_dim() const { return dmp::param_dim(joints(), basis()); }
};

/// A candidate start state for an action (with moved-object overrides carried
/// along the recursion) and its unnormalized log probability.
struct StartPoint {
  sim::RobotState state;
  sim::ObjectPoses moved;
  double log_p = 0.0;
};

/// A validated sample: parameters, trajectory (gripper filled), feature
/// trace, and the world state handed to successor actions.
struct Realized {
  VectorXd xi;
  dmp::TrajectoryParams params;
  dmp::Trajectory traj;
  features::FeatureTrace trace;
  sim::RobotState post_state;
  sim::ObjectPoses post_moved;
};

/// Roll out and validate one parameter vector; nullopt when IK fails, any
/// step collides or exceeds limits, or the action's grasp event misses.
std::optional<Realized> realize(const ActionContext& ctx, const VectorXd& xi,
                                const StartPoint& start, Rng& rng, double noise,
                                sim::Verdict* verdict = nullptr);

struct SampleBatch {
  std::vector<Realized> samples;
  std::vector<int> start_index;  // which StartPoint each sample used
  int rejections = 0;
};

/// Draw valid (xi, tau) pairs until M are accepted or the per-slot budget is
/// exhausted. With `strict`, fewer than M accepted samples is an error.
SampleBatch sample_valid(const SurrogateParams& v, int M, std::span<const StartPoint> starts,
                         const ActionContext& ctx, const CemConfig& cfg, Rng& rng,
                         bool strict = true);

/// log z_j = log sum_i p_d(x_{i,j}) for each trace (log-sum-exp over steps).
VectorXd weigh_log(const std::vector<features::FeatureTrace>& traces, const density::Gmm& expert);

/// WeightedSamples from traces and their parameter vectors; all-underflow
/// falls back to uniform weights and sets `degenerate`.
density::WeightedSamples weigh(const std::vector<features::FeatureTrace>& traces,
                               const density::Gmm& expert, std::vector<VectorXd> xis,
                               bool* degenerate = nullptr);

/// Re-fit to the weighted samples, then blend with step size alpha:
/// mean' = (1-a) mean + a mean*, cov' = (1-a) cov + a cov* (per component for
/// mixtures, matched by index).
SurrogateParams update(const SurrogateParams& v, const density::WeightedSamples& ws, double alpha,
                       double floor = density::kDefaultCovarianceFloor);

struct CemResult {
  SurrogateParams v_final;
  std::optional<Realized> best;  // highest-likelihood valid trajectory seen
  double best_log_z = -std::numeric_limits<double>::infinity();
  std::vector<CemIterationReport> reports;
  bool converged = false;
};

/// Iterative cross-entropy optimization of the surrogate toward the expert
/// feature density under the environment constraints.
CemResult optimize(const density::Gmm& expert, const SurrogateParams& v0,
                   const StartPoint& start, const ActionContext& ctx, const CemConfig& cfg,
                   std::uint64_t seed);

std::string reports_csv(const std::vector<CemIterationReport>& reports);

nlohmann::json to_json(const SurrogateParams& v);
SurrogateParams surrogate_from_json(const nlohmann::json& j);

}  // namespace skillplan::cem
