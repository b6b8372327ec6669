#include "skillplan/dmp.hpp"

#include <cmath>
#include <sstream>

namespace skillplan::dmp {

std::vector<double> DmpConfig::centers() const {
  std::vector<double> cs(basis_count);
  for (int b = 0; b < basis_count; ++b) {
    const double frac = basis_count > 1 ? static_cast<double>(b) / (basis_count - 1) : 0.0;
    cs[b] = std::exp(-phase_decay * frac);
  }
  return cs;
}

std::vector<double> DmpConfig::widths() const {
  const std::vector<double> cs = centers();
  std::vector<double> hs(basis_count);
  for (int b = 0; b + 1 < basis_count; ++b) {
    const double gap = cs[b] - cs[b + 1];
    hs[b] = 1.0 / (2.0 * gap * gap);
  }
  if (basis_count > 1) hs[basis_count - 1] = hs[basis_count - 2];
  else hs[0] = 1.0;
  return hs;
}

void DmpConfig::validate() const {
  if (basis_count < 1) throw sim::SimError("DmpConfig: basis_count must be >= 1");
  if (dt <= 0.0 || spring <= 0.0 || phase_decay <= 0.0)
    throw sim::SimError("DmpConfig: dt, spring, phase_decay must be positive");
  if (std::abs(damping * damping - 4.0 * spring) > 1e-9)
    throw sim::SimError("DmpConfig: critical damping requires damping^2 = 4*spring");
}

namespace {

double forcing(const DmpConfig& cfg, const std::vector<double>& cs, const std::vector<double>& hs,
               const Eigen::RowVectorXd& w, double phase) {
  double num = 0.0, den = 0.0;
  for (int b = 0; b < cfg.basis_count; ++b) {
    const double psi = std::exp(-hs[b] * (phase - cs[b]) * (phase - cs[b]));
    num += psi * w(b);
    den += psi;
  }
  return den > 1e-300 ? (num / den) * phase : 0.0;
}

}  // namespace

VectorXd params_as_vector(const TrajectoryParams& params) {
  const int joints = static_cast<int>(params.weights.rows());
  const int basis = static_cast<int>(params.weights.cols());
  VectorXd v(param_dim(joints, basis));
  for (int j = 0; j < joints; ++j)
    for (int b = 0; b < basis; ++b) v(j * basis + b) = params.weights(j, b);
  v(joints * basis + 0) = params.goal.x;
  v(joints * basis + 1) = params.goal.y;
  v(joints * basis + 2) = params.goal.theta;
  return v;
}

TrajectoryParams vector_as_params(const VectorXd& v, int joints, int basis, double duration) {
  if (v.size() != param_dim(joints, basis))
    throw sim::SimError("vector_as_params: dimension mismatch");
  TrajectoryParams p;
  p.weights.resize(joints, basis);
  for (int j = 0; j < joints; ++j)
    for (int b = 0; b < basis; ++b) p.weights(j, b) = v(j * basis + b);
  p.goal = PlanarPose(v(joints * basis + 0), v(joints * basis + 1), v(joints * basis + 2));
  p.duration = duration;
  return p;
}

std::optional<Trajectory> try_rollout(const TrajectoryParams& params, const sim::RobotState& start,
                                      const sim::Scene& scene, const DmpConfig& cfg,
                                      double noise, Rng& rng) {
  cfg.validate();
  const int dof = scene.arm.dof();
  if (params.weights.rows() != dof) throw sim::SimError("rollout: weights/joint mismatch");
  if (params.duration <= 0.0) throw sim::SimError("rollout: duration must be positive");

  const auto goal_q = sim::try_inverse_kinematics(scene.arm, params.goal, start.q);
  if (!goal_q) return std::nullopt;

  const std::vector<double> cs = cfg.centers();
  const std::vector<double> hs = cfg.widths();
  const double tau = params.duration;
  const int n_steps = static_cast<int>(std::round(params.duration / cfg.dt));

  Trajectory traj;
  traj.reserve(n_steps + 1);

  VectorXd y = start.q;
  VectorXd v = start.qd * tau;  // scaled velocity state
  double phase = 1.0;

  sim::RobotState state = start;
  for (int i = 0; i <= n_steps; ++i) {
    VectorXd vdot(dof);
    for (int j = 0; j < dof; ++j) {
      const double f =
          forcing(cfg, cs, hs, params.weights.row(j), phase) * ((*goal_q)(j) - start.q(j));
      vdot(j) = (cfg.spring * ((*goal_q)(j) - y(j)) - cfg.damping * v(j) + f) / tau;
    }
    const VectorXd v_next = v + cfg.dt * vdot;
    VectorXd u_cmd = v_next / tau;  // semi-implicit: applied over [t_i, t_i + dt]
    if (noise > 0.0)
      for (int j = 0; j < dof; ++j) u_cmd(j) += noise * rng.gaussian();

    state.q = y;
    state.qd = u_cmd;
    traj.push_back({i * cfg.dt, state, sim::Control{u_cmd, 0.0}});
    if (i == n_steps) break;

    y += cfg.dt * u_cmd;
    v = v_next;
    phase += cfg.dt * (-cfg.phase_decay * phase / tau);
  }
  return traj;
}

Trajectory rollout(const TrajectoryParams& params, const sim::RobotState& start,
                   const sim::Scene& scene, const DmpConfig& cfg, double noise, Rng& rng) {
  auto traj = try_rollout(params, start, scene, cfg, noise, rng);
  if (!traj) throw sim::SimError("rollout: IK failed for goal pose");
  return *traj;
}

sim::Verdict is_valid(const Trajectory& traj, const sim::Scene& scene,
                      const sim::ObjectPoses* moved) {
  for (const auto& step : traj) {
    const sim::Verdict v = sim::check_valid(scene, step.s, moved);
    if (!v.valid()) return v;
  }
  return {};
}

MatrixXd fit_weights(const std::vector<VectorXd>& joints, double duration, const DmpConfig& cfg) {
  if (joints.size() < 3) throw sim::SimError("fit_weights: need at least 3 samples");
  const int n = static_cast<int>(joints.size());
  const int dof = static_cast<int>(joints.front().size());
  const double dt = duration / (n - 1);
  const double tau = duration;
  const std::vector<double> cs = cfg.centers();
  const std::vector<double> hs = cfg.widths();

  // Basis activation matrix over the phase trajectory.
  MatrixXd A(n, cfg.basis_count);
  double phase = 1.0;
  for (int i = 0; i < n; ++i) {
    double den = 0.0;
    for (int b = 0; b < cfg.basis_count; ++b) {
      const double psi = std::exp(-hs[b] * (phase - cs[b]) * (phase - cs[b]));
      A(i, b) = psi;
      den += psi;
    }
    if (den > 1e-300) A.row(i) *= phase / den;
    phase += dt * (-cfg.phase_decay * phase / tau);
  }

  MatrixXd weights(dof, cfg.basis_count);
  const MatrixXd AtA =
      A.transpose() * A + 1e-8 * MatrixXd::Identity(cfg.basis_count, cfg.basis_count);
  const Eigen::LDLT<MatrixXd> solver(AtA);

  for (int j = 0; j < dof; ++j) {
    const double y0 = joints.front()(j);
    const double g = joints.back()(j);
    const double scale = g - y0;
    VectorXd f_target(n);
    for (int i = 0; i < n; ++i) {
      const double y = joints[i](j);
      const double yd = (joints[std::min(i + 1, n - 1)](j) - joints[std::max(i - 1, 0)](j)) /
                        ((std::min(i + 1, n - 1) - std::max(i - 1, 0)) * dt);
      const double ydd =
          i > 0 && i < n - 1
              ? (joints[i + 1](j) - 2.0 * joints[i](j) + joints[i - 1](j)) / (dt * dt)
              : 0.0;
      f_target(i) = tau * tau * ydd - cfg.spring * (g - y) + cfg.damping * tau * yd;
    }
    if (std::abs(scale) < 1e-6) {
      weights.row(j).setZero();
    } else {
      weights.row(j) = solver.solve(A.transpose() * (f_target / scale)).transpose();
    }
  }
  return weights;
}

std::string to_csv(const Trajectory& traj) {
  std::ostringstream out;
  out.precision(17);
  if (traj.empty()) return "time\n";
  const int dof = static_cast<int>(traj.front().s.q.size());
  out << "time";
  for (int j = 0; j < dof; ++j) out << ",q" << j;
  for (int j = 0; j < dof; ++j) out << ",u" << j;
  out << ",gripper\n";
  for (const auto& step : traj) {
    out << step.t;
    for (int j = 0; j < dof; ++j) out << "," << step.s.q(j);
    for (int j = 0; j < dof; ++j) out << "," << step.u.qd_cmd(j);
    out << "," << step.u.gripper << "\n";
  }
  return out.str();
}

}  // namespace skillplan::dmp
