#include "skillplan/treeplan.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <nlohmann/json.hpp>

namespace skillplan::treeplan {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_mean_exp(std::span<const double> xs) {
  if (xs.empty()) return kNegInf;
  return log_sum_exp(xs) - std::log(static_cast<double>(xs.size()));
}

}  // namespace

std::vector<int> allocate(const std::vector<double>& pi, int M, double eps) {
  const int n = static_cast<int>(pi.size());
  std::vector<int> counts(n, 0);
  std::vector<std::pair<double, int>> remainders(n);
  int used = 0;
  for (int i = 0; i < n; ++i) {
    const double raw = pi[i] * M;
    counts[i] = static_cast<int>(std::floor(raw));
    remainders[i] = {raw - counts[i], i};
    used += counts[i];
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (int r = 0; r < M - used && r < n; ++r) ++counts[remainders[r].second];
  for (int i = 0; i < n; ++i)
    if (pi[i] > eps && counts[i] == 0) counts[i] = 1;
  return counts;
}

std::pair<cem::ActionContext, cem::SurrogateParams> action_setup(const pddl::TaskGraph& graph,
                                                                 int edge,
                                                                 const demos::ExpertModel& model,
                                                                 const sim::Scene& scene,
                                                                 const PlannerConfig& cfg) {
  const pddl::GroundedAction& ga = graph.edges.at(edge);
  const demos::SkillModel& sm = model.skill(ga.skill_id);

  cem::ActionContext ctx;
  ctx.scene = &scene;
  ctx.schema = sm.schema;
  ctx.dmp_cfg = cfg.dmp_cfg;
  ctx.gripper = sm.gripper;
  ctx.event = sm.event;
  ctx.grasp_tol_xy = cfg.grasp_tol_xy;
  ctx.grasp_tol_th = cfg.grasp_tol_th;

  const auto arg_of = [&](const std::string& param) {
    const auto it = std::find(sm.param_names.begin(), sm.param_names.end(), param);
    if (it == sm.param_names.end())
      throw PlanError("model for " + ga.skill_id + " lacks parameter " + param);
    return ga.args.at(std::distance(sm.param_names.begin(), it));
  };
  for (const auto& role : sm.schema.roles) ctx.objects.push_back(arg_of(role));
  if (!sm.event_object_param.empty()) ctx.event_object = arg_of(sm.event_object_param);
  if (!sm.event_frame_param.empty()) ctx.event_frame = arg_of(sm.event_frame_param);

  const demos::VariantNominal& nominal = sm.nominal(ga.args);
  if (nominal.count == 0)
    throw PlanError("model for " + ga.skill_id + " carries no demonstration statistics");
  ctx.duration = nominal.mean_duration;

  // Surrogate initialization: demo-mean DMP weights; goal re-expressed in the
  // current scene through the relevant object's pose (and the demo grasp
  // offset when the action manipulates a held object).
  const sim::SceneObject& rel_obj = scene.object(ctx.objects.front());
  PlanarPose goal = rel_obj.pose.compose(nominal.mean_offset);
  if (nominal.mean_grasp_offset &&
      (sm.gripper == cem::GripperMode::kHeld || sm.gripper == cem::GripperMode::kOpening))
    goal = goal.compose(nominal.mean_grasp_offset->inverse());

  dmp::TrajectoryParams mean_params;
  mean_params.weights = nominal.mean_weights;
  mean_params.goal = goal;
  mean_params.duration = nominal.mean_duration;
  const Eigen::VectorXd mu = dmp::params_as_vector(mean_params);

  const int wdim = static_cast<int>(nominal.mean_weights.size());
  Eigen::VectorXd sd(mu.size());
  const double wstd = std::max(nominal.weight_std, cfg.v0_weight_std_floor) * cfg.v0_spread;
  for (int i = 0; i < wdim; ++i) sd(i) = wstd;
  sd(wdim + 0) = (nominal.offset_std(0) + cfg.v0_xy_std_floor) * cfg.v0_spread;
  sd(wdim + 1) = (nominal.offset_std(1) + cfg.v0_xy_std_floor) * cfg.v0_spread;
  sd(wdim + 2) = (nominal.offset_std(2) + cfg.v0_theta_std_floor) * cfg.v0_spread;
  cem::SurrogateParams v0{
      density::Gaussian(mu, Eigen::MatrixXd(sd.array().square().matrix().asDiagonal()))};
  return {std::move(ctx), std::move(v0)};
}

std::vector<int> random_goal_path(const pddl::TaskGraph& graph, Rng& rng) {
  std::vector<std::vector<int>> paths;
  std::vector<int> current;
  std::vector<bool> visited(graph.states.size(), false);
  const std::function<void(int)> dfs = [&](int state) {
    if (graph.is_goal(state)) {
      paths.push_back(current);
      return;
    }
    visited[state] = true;
    for (int eid : graph.actions_from(state)) {
      const int next = graph.edges[eid].target;
      if (visited[next]) continue;
      current.push_back(eid);
      dfs(next);
      current.pop_back();
    }
    visited[state] = false;
  };
  dfs(graph.initial);
  if (paths.empty()) throw PlanError("no root-to-goal path in the task graph");
  return paths[rng.index(paths.size())];
}

namespace {

class Planner {
 public:
  Planner(const pddl::TaskGraph& graph, const demos::ExpertModel& model, const sim::Scene& scene,
          const PlannerConfig& cfg, std::uint64_t seed)
      : graph_(graph), model_(model), scene_(scene), cfg_(cfg), base_(seed) {
    edges_.resize(graph.edges.size());
    nodes_.resize(graph.states.size());
  }

  PlanResult run(const sim::RobotState& s0);

 private:
  struct EdgeState {
    bool init = false;
    cem::ActionContext ctx;
    cem::SurrogateParams v{density::Gaussian(Eigen::VectorXd::Zero(1),
                                             Eigen::MatrixXd::Identity(1, 1))};
    std::vector<cem::CemIterationReport> reports;
    std::optional<cem::Realized> best;
    double best_log_z = kNegInf;
  };

  struct NodeState {
    bool init = false;
    std::vector<int> edges;
    std::vector<double> pi;
    std::vector<double> prior;
  };

  EdgeState& edge_state(int eid);
  NodeState& node_state(int sid);

  /// Alg.-style recursive sampling; returns log V aligned with `starts`.
  std::vector<double> sample_action(int eid, const StartSet& starts, int horizon, int M, Rng rng,
                                    int iteration, bool do_update);

  void update_policy(NodeState& ns, const std::vector<double>& score, int iteration, int sid);

  std::optional<cem::Realized> execute_action(int eid, const cem::StartPoint& start, Rng& rng);

  const pddl::TaskGraph& graph_;
  const demos::ExpertModel& model_;
  const sim::Scene& scene_;
  PlannerConfig cfg_;
  Rng base_;
  std::vector<EdgeState> edges_;
  std::vector<NodeState> nodes_;
  PlanResult result_;
};

Planner::EdgeState& Planner::edge_state(int eid) {
  EdgeState& es = edges_[eid];
  if (es.init) return es;
  auto [ctx, v0] = action_setup(graph_, eid, model_, scene_, cfg_);
  es.ctx = std::move(ctx);
  es.v = std::move(v0);
  es.init = true;
  return es;
}

Planner::NodeState& Planner::node_state(int sid) {
  NodeState& ns = nodes_[sid];
  if (ns.init) return ns;
  for (int eid : graph_.actions_from(sid)) {
    if (cfg_.restrict_edges &&
        std::find(cfg_.restrict_edges->begin(), cfg_.restrict_edges->end(), eid) ==
            cfg_.restrict_edges->end())
      continue;
    ns.edges.push_back(eid);
  }
  const int n = static_cast<int>(ns.edges.size());
  if (n > 0) {
    ns.pi.assign(n, 1.0 / n);
    std::vector<std::string> sigs;
    sigs.reserve(n);
    for (int eid : ns.edges) sigs.push_back(graph_.edges[eid].signature());
    ns.prior = model_.prior.lookup(graph_.states[sid].key(), sigs, cfg_.eps);
  }
  ns.init = true;
  return ns;
}

void Planner::update_policy(NodeState& ns, const std::vector<double>& score, int iteration,
                            int sid) {
  const int n = static_cast<int>(ns.edges.size());
  double m = kNegInf;
  for (double s : score) m = std::max(m, s);
  if (std::isfinite(m)) {
    std::vector<double> target(n);
    double total = 0.0;
    for (int c = 0; c < n; ++c) {
      target[c] = std::exp(score[c] - m);
      total += target[c];
    }
    for (int c = 0; c < n; ++c)
      ns.pi[c] = (1.0 - cfg_.cem.alpha) * ns.pi[c] + cfg_.cem.alpha * target[c] / total;
  }
  // Floor and renormalize.
  double total = 0.0;
  for (int c = 0; c < n; ++c) {
    ns.pi[c] = std::max(ns.pi[c], cfg_.eps);
    total += ns.pi[c];
  }
  for (int c = 0; c < n; ++c) ns.pi[c] /= total;
  if (cfg_.record_qv) result_.policy_records.push_back({iteration, sid, ns.pi});
}

std::vector<double> Planner::sample_action(int eid, const StartSet& starts, int horizon, int M,
                                           Rng rng, int iteration, bool do_update) {
  EdgeState& es = edge_state(eid);
  result_.allocated_per_iter[iteration] += M;

  cem::SampleBatch batch =
      cem::sample_valid(es.v, M, starts, es.ctx, cfg_.cem, rng, /*strict=*/false);
  result_.accepted_per_iter[iteration] += static_cast<long>(batch.samples.size());

  std::vector<double> out(starts.size(), kNegInf);
  if (batch.samples.empty()) {
    cem::CemIterationReport report;
    report.iteration = iteration;
    report.mean_log_likelihood = kNegInf;
    report.ess = 0.0;
    report.rejections = batch.rejections;
    report.updated = es.v;
    es.reports.push_back(std::move(report));
    return out;  // zero valid samples: no value contribution this iteration
  }

  const int n = static_cast<int>(batch.samples.size());
  std::vector<features::FeatureTrace> traces;
  std::vector<Eigen::VectorXd> xis;
  traces.reserve(n);
  xis.reserve(n);
  for (const auto& r : batch.samples) {
    traces.push_back(r.trace);
    xis.push_back(r.xi);
  }
  const Eigen::VectorXd log_feat = cem::weigh_log(traces, model_.skill(graph_.edges[eid].skill_id).gmm);

  // Downstream value per sample (log V of the successor state at the sample's
  // final robot state). Leaves and goal states carry value 1.
  Eigen::VectorXd log_v_future = Eigen::VectorXd::Zero(n);
  const int w_next = graph_.edges[eid].target;
  if (horizon > 0 && !graph_.is_goal(w_next)) {
    NodeState& ns = node_state(w_next);
    if (!ns.edges.empty()) {
      const double norm = log_sum_exp(std::span<const double>(log_feat.data(), n));
      StartSet child_starts(n);
      for (int j = 0; j < n; ++j) {
        child_starts[j].state = batch.samples[j].post_state;
        child_starts[j].moved = batch.samples[j].post_moved;
        const double lw = std::isfinite(norm) ? log_feat(j) - norm : 0.0;
        child_starts[j].log_p = starts[batch.start_index[j]].log_p + lw;
      }

      const std::vector<int> counts = allocate(ns.pi, M);
      std::vector<std::vector<double>> log_q(ns.edges.size());
      for (std::size_t c = 0; c < ns.edges.size(); ++c) {
        if (counts[c] <= 0) continue;
        log_q[c] = sample_action(ns.edges[c], child_starts, horizon - 1, counts[c],
                                 rng.derive(0xC411D00 + c), iteration, do_update);
      }

      std::vector<double> score(ns.edges.size(), kNegInf);
      for (std::size_t c = 0; c < ns.edges.size(); ++c) {
        if (log_q[c].empty()) continue;
        score[c] = std::log(ns.prior[c]) + log_mean_exp(log_q[c]);
      }

      for (int j = 0; j < n; ++j) {
        std::vector<double> terms;
        terms.reserve(ns.edges.size());
        for (std::size_t c = 0; c < ns.edges.size(); ++c)
          if (!log_q[c].empty()) terms.push_back(std::log(ns.prior[c]) + log_q[c][j]);
        log_v_future(j) = log_sum_exp(terms);
        if (cfg_.record_qv) {
          QVRecord rec;
          rec.iteration = iteration;
          rec.state = w_next;
          for (std::size_t c = 0; c < ns.edges.size(); ++c) {
            if (log_q[c].empty()) continue;
            rec.log_prior.push_back(std::log(ns.prior[c]));
            rec.log_q.push_back(log_q[c][j]);
          }
          rec.log_v = log_v_future(j);
          result_.qv_records.push_back(std::move(rec));
        }
      }
      update_policy(ns, score, iteration, w_next);
    }
  }

  const Eigen::VectorXd log_z = log_feat + log_v_future;
  for (int j = 0; j < n; ++j) {
    if (log_z(j) > es.best_log_z) {
      es.best_log_z = log_z(j);
      es.best = batch.samples[j];
    }
  }

  bool degenerate = false;
  const density::WeightedSamples ws =
      density::WeightedSamples::from_log_weights(std::move(xis), log_z, &degenerate);

  cem::CemIterationReport report;
  report.iteration = iteration;
  report.mean_log_likelihood = log_z.mean();
  report.ess = 1.0 / ws.zbar.squaredNorm();
  report.rejections = batch.rejections;

  if (do_update) es.v = cem::update(es.v, ws, cfg_.cem.alpha, cfg_.cem.floor);
  report.updated = es.v;
  es.reports.push_back(std::move(report));

  // Per-start average of z over the trajectories drawn from that start;
  // starts the batch never drew fall back to the overall average.
  std::vector<std::vector<double>> per_start(starts.size());
  for (int j = 0; j < n; ++j) per_start[batch.start_index[j]].push_back(log_z(j));
  const double overall = log_mean_exp(std::span<const double>(log_z.data(), n));
  for (std::size_t k = 0; k < starts.size(); ++k)
    out[k] = per_start[k].empty() ? overall : log_mean_exp(per_start[k]);
  return out;
}

std::optional<cem::Realized> Planner::execute_action(int eid, const cem::StartPoint& start,
                                                     Rng& rng) {
  EdgeState& es = edge_state(eid);
  const density::Gmm& expert = model_.skill(graph_.edges[eid].skill_id).gmm;

  const auto score_of = [&](const cem::Realized& r) {
    std::vector<double> lp;
    lp.reserve(r.trace.steps.size());
    for (const auto& step : r.trace.steps) lp.push_back(expert.log_pdf(step.x));
    return log_sum_exp(lp);
  };

  Rng mean_rng = rng.derive(0);
  auto mean_try = cem::realize(es.ctx, es.v.mean(), start, mean_rng, 0.0);
  if (mean_try) return mean_try;

  std::optional<cem::Realized> best;
  double best_score = kNegInf;
  for (int t = 0; t < cfg_.exec_tries; ++t) {
    Rng try_rng = rng.derive(1 + t);
    const Eigen::VectorXd xi = es.v.sample(try_rng);
    auto r = cem::realize(es.ctx, xi, start, try_rng, 0.0);
    if (!r) continue;
    const double s = score_of(*r);
    if (s > best_score) {
      best_score = s;
      best = std::move(r);
    }
  }
  return best;
}

PlanResult Planner::run(const sim::RobotState& s0) {
  const int max_iters = std::max(cfg_.cem.max_iters, 1);
  result_.allocated_per_iter.assign(max_iters, 0);
  result_.accepted_per_iter.assign(max_iters, 0);

  NodeState& root = node_state(graph_.initial);
  if (graph_.is_goal(graph_.initial)) {
    // Empty task: the initial predicate state already satisfies the goal.
    return std::move(result_);
  }
  if (root.edges.empty()) {
    result_.failed = true;
    result_.failure_reason = "no actions available from the initial state";
    return std::move(result_);
  }

  const StartSet start0 = {{s0, {}, 0.0}};
  const bool do_update = cfg_.cem.max_iters > 0;
  double prev_v = std::numeric_limits<double>::quiet_NaN();

  for (int iter = 0;; ++iter) {
    const Rng iter_rng = base_.derive(0xCE30000 + static_cast<std::uint64_t>(iter));
    std::vector<double> log_q(root.edges.size(), kNegInf);
    for (std::size_t k = 0; k < root.edges.size(); ++k) {
      log_q[k] = sample_action(root.edges[k], start0, cfg_.horizon, cfg_.cem.samples_per_iter,
                               iter_rng.derive(k), iter, do_update)[0];
    }

    std::vector<double> terms(root.edges.size());
    std::vector<double> score(root.edges.size());
    for (std::size_t k = 0; k < root.edges.size(); ++k) {
      terms[k] = std::log(root.prior[k]) + log_q[k];
      score[k] = terms[k];
    }
    const double log_v = log_sum_exp(terms);
    result_.v_history.push_back(log_v);
    if (cfg_.record_qv) {
      QVRecord rec;
      rec.iteration = iter;
      rec.state = graph_.initial;
      for (std::size_t k = 0; k < root.edges.size(); ++k) {
        rec.log_prior.push_back(std::log(root.prior[k]));
        rec.log_q.push_back(log_q[k]);
      }
      rec.log_v = log_v;
      result_.qv_records.push_back(std::move(rec));
    }
    update_policy(root, score, iter, graph_.initial);

    if (!do_update) break;
    if (iter > 0 && std::isfinite(log_v) && std::isfinite(prev_v)) {
      const double rel = std::abs(log_v - prev_v) / std::max(1.0, std::abs(prev_v));
      if (rel < cfg_.cem.tol) {
        result_.converged = true;
        break;
      }
    }
    prev_v = log_v;
    if (iter + 1 >= cfg_.cem.max_iters) break;
  }

  if (result_.v_history.empty() || !std::isfinite(result_.v_history.back())) {
    result_.failed = true;
    result_.failure_reason = "no action sequence with nonzero probability";
  }

  // Extract the action path by argmax policy down the tree.
  int state = graph_.initial;
  std::size_t guard = 0;
  while (!graph_.is_goal(state) && guard++ <= graph_.states.size()) {
    NodeState& ns = node_state(state);
    if (ns.edges.empty()) {
      if (!result_.failed) {
        result_.failed = true;
        result_.failure_reason = "policy reached a dead-end state w" + std::to_string(state);
      }
      break;
    }
    const std::size_t k =
        std::distance(ns.pi.begin(), std::max_element(ns.pi.begin(), ns.pi.end()));
    result_.path.push_back(ns.edges[k]);
    result_.path_signatures.push_back(graph_.edges[ns.edges[k]].signature());
    state = graph_.edges[ns.edges[k]].target;
  }
  if (!graph_.is_goal(state) && !result_.failed) {
    result_.failed = true;
    result_.failure_reason = "policy walk did not reach a goal state";
  }

  // Executable chain: roll out each chosen action's surrogate mean from the
  // realized state, falling back to sampled candidates.
  if (!result_.failed) {
    const Rng exec_base = base_.derive(0xE8EC);
    cem::StartPoint cursor{s0, {}, 0.0};
    for (std::size_t step = 0; step < result_.path.size(); ++step) {
      const int eid = result_.path[step];
      Rng act_rng = exec_base.derive(step);
      auto realized = execute_action(eid, cursor, act_rng);
      if (!realized) {
        result_.failed = true;
        result_.failure_reason =
            "execution infeasible at " + graph_.edges[eid].signature();
        break;
      }
      cursor.state = realized->post_state;
      cursor.moved = realized->post_moved;
      result_.execution.push_back({eid, graph_.edges[eid].signature(), std::move(*realized)});
    }
  }

  for (std::size_t eid = 0; eid < edges_.size(); ++eid) {
    if (!edges_[eid].init) continue;
    result_.reports[static_cast<int>(eid)] = edges_[eid].reports;
    result_.surrogates.emplace(static_cast<int>(eid), edges_[eid].v);
    result_.best[static_cast<int>(eid)] = edges_[eid].best;
    result_.best_log_z[static_cast<int>(eid)] = edges_[eid].best_log_z;
  }
  return std::move(result_);
}

}  // namespace

PlanResult plan(const pddl::TaskGraph& graph, const demos::ExpertModel& model,
                const sim::Scene& scene, const sim::RobotState& s0, const PlannerConfig& cfg,
                std::uint64_t seed) {
  cfg.cem.validate();
  Planner planner(graph, model, scene, cfg, seed);
  return planner.run(s0);
}

nlohmann::json to_json(const PlanResult& result, const pddl::TaskGraph& graph) {
  nlohmann::json j;
  j["failed"] = result.failed;
  j["failure_reason"] = result.failure_reason;
  j["path"] = result.path;
  j["path_signatures"] = result.path_signatures;
  j["v_history"] = result.v_history;
  j["converged"] = result.converged;
  nlohmann::json exec = nlohmann::json::array();
  for (const auto& ea : result.execution) {
    nlohmann::json je;
    je["edge"] = ea.edge;
    je["signature"] = ea.signature;
    je["xi"] = std::vector<double>(ea.realized.xi.data(),
                                   ea.realized.xi.data() + ea.realized.xi.size());
    je["duration"] = ea.realized.params.duration;
    exec.push_back(je);
  }
  j["execution"] = exec;
  nlohmann::json surrogate = nlohmann::json::object();
  for (const auto& [eid, v] : result.surrogates)
    surrogate[graph.edges[eid].signature()] = cem::to_json(v);
  j["surrogates"] = surrogate;
  return j;
}

}  // namespace skillplan::treeplan
