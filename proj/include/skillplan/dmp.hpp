#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "skillplan/features.hpp"
#include "skillplan/rng.hpp"
#include "skillplan/sim.hpp"

namespace skillplan::dmp {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// One critically damped transformation system per joint, driven by a shared
/// exponentially decaying phase. Forcing is a normalized Gaussian basis over
/// the phase, scaled by (goal - start).
struct DmpConfig {
  int basis_count = 5;
  double spring = 100.0;
  double damping = 20.0;  // critical: damping^2 = 4 * spring
  double dt = 0.02;
  double phase_decay = 4.0;

  std::vector<double> centers() const;  // strictly decreasing in phase
  std::vector<double> widths() const;
  void validate() const;
};

/// Trajectory parameters xi: per-joint basis weights plus an end-effector
/// goal pose (mapped to a joint goal via IK at rollout time).
struct TrajectoryParams {
  MatrixXd weights;  // joints x basis
  PlanarPose goal;
  double duration = 2.0;
};

using Trajectory = std::vector<features::Step>;

/// Flatten to [weights (row-major), goal.x, goal.y, goal.theta].
VectorXd params_as_vector(const TrajectoryParams& params);
TrajectoryParams vector_as_params(const VectorXd& v, int joints, int basis, double duration);
inline int param_dim(int joints, int basis) { return joints * basis + 3; }

/// Integrate the DMP from `start`. Controls are commanded joint velocities
/// (plus Gaussian noise of std `noise` when nonzero). Validity is judged
/// separately. Returns nullopt when IK for the goal pose fails.
std::optional<Trajectory> try_rollout(const TrajectoryParams& params, const sim::RobotState& start,
                                      const sim::Scene& scene, const DmpConfig& cfg,
                                      double noise, Rng& rng);

/// Throwing wrapper around try_rollout.
Trajectory rollout(const TrajectoryParams& params, const sim::RobotState& start,
                   const sim::Scene& scene, const DmpConfig& cfg, double noise, Rng& rng);

/// Valid iff every step passes sim::check_valid.
sim::Verdict is_valid(const Trajectory& traj, const sim::Scene& scene,
                      const sim::ObjectPoses* moved = nullptr);

/// Least-squares fit of basis weights to a recorded joint trajectory
/// (uniform time grid assumed). Used to seed surrogates from demonstrations.
MatrixXd fit_weights(const std::vector<VectorXd>& joints, double duration, const DmpConfig& cfg);

std::string to_csv(const Trajectory& traj);

}  // namespace skillplan::dmp
