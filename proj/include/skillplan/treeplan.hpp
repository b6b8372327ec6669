#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "skillplan/cem.hpp"
#include "skillplan/demos.hpp"
#include "skillplan/pddl.hpp"

namespace skillplan::treeplan {

class PlanError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using StartSet = std::vector<cem::StartPoint>;
using demos::ActionPrior;

struct PlannerConfig {
  int horizon = 5;  // H
  cem::CemConfig cem;
  dmp::DmpConfig dmp_cfg;
  double eps = 0.01;          // policy/prior floor
  int exec_tries = 30;        // fallback samples per action when the mean rollout fails
  double v0_spread = 1.0;     // scale on surrogate initialization stddevs
  double v0_weight_std_floor = 0.5;
  double v0_xy_std_floor = 0.04;
  double v0_theta_std_floor = 0.2;
  double grasp_tol_xy = 0.04;
  double grasp_tol_th = 0.6;
  std::optional<std::vector<int>> restrict_edges;  // "no options": fixed path
  bool record_qv = false;  // keep Q/V and policy snapshots for validation
};

/// One Eq.-style value propagation record (log domain), kept when record_qv.
struct QVRecord {
  int iteration;
  int state;
  std::vector<double> log_prior;  // per available action
  std::vector<double> log_q;
  double log_v;
};

struct PolicyRecord {
  int iteration;
  int state;
  std::vector<double> pi;
};

struct ExecutedAction {
  int edge;
  std::string signature;
  cem::Realized realized;
};

struct PlanResult {
  bool failed = false;
  std::string failure_reason;
  std::vector<int> path;  // chosen edges, initial state toward a goal
  std::vector<std::string> path_signatures;
  std::vector<ExecutedAction> execution;
  std::vector<double> v_history;  // log V(w0, s0) per iteration
  bool converged = false;

  std::map<int, std::vector<cem::CemIterationReport>> reports;  // per edge
  std::map<int, cem::SurrogateParams> surrogates;               // final v per edge
  std::map<int, std::optional<cem::Realized>> best;             // best valid sample per edge
  std::map<int, double> best_log_z;

  std::vector<long> allocated_per_iter;  // sum over the tree of allocated M'
  std::vector<long> accepted_per_iter;   // accepted rollouts
  std::vector<QVRecord> qv_records;
  std::vector<PolicyRecord> policy_records;
};

/// Largest-remainder rounding of pi * M; every action with pi > eps gets at
/// least one sample. Total <= M + |actions|.
std::vector<int> allocate(const std::vector<double>& pi, int M, double eps = 1e-9);

/// Uniformly random root-to-goal path (edge ids), for the no-options mode.
std::vector<int> random_goal_path(const pddl::TaskGraph& graph, Rng& rng);

/// Action context and initial surrogate for one edge: demo-mean DMP weights,
/// goal re-expressed through the relevant object's pose in this scene, broad
/// diagonal covariance. Exposed for the single-action reduction and tools.
std::pair<cem::ActionContext, cem::SurrogateParams> action_setup(const pddl::TaskGraph& graph,
                                                                 int edge,
                                                                 const demos::ExpertModel& model,
                                                                 const sim::Scene& scene,
                                                                 const PlannerConfig& cfg);

/// Recursive sampling planner over the task graph: per-action surrogates
/// refined by cross-entropy updates, action choice by iteratively reweighted
/// policies over expert priors and downstream values.
PlanResult plan(const pddl::TaskGraph& graph, const demos::ExpertModel& model,
                const sim::Scene& scene, const sim::RobotState& s0, const PlannerConfig& cfg,
                std::uint64_t seed);

nlohmann::json to_json(const PlanResult& result, const pddl::TaskGraph& graph);

}  // namespace skillplan::treeplan
