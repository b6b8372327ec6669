#include "skillplan/demos.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace skillplan::demos {

std::vector<double> ActionPrior::lookup(const std::string& state_key,
                                        const std::vector<std::string>& signatures, double eps,
                                        bool* warned) const {
  if (warned) *warned = false;
  std::vector<double> p(signatures.size(), 0.0);

  const auto it = by_state.find(state_key);
  bool any = false;
  if (it != by_state.end()) {
    for (std::size_t i = 0; i < signatures.size(); ++i) {
      const auto f = it->second.find(signatures[i]);
      if (f != it->second.end()) {
        p[i] = f->second;
        any = true;
      }
    }
  }
  if (!any) {
    if (warned) *warned = true;
    std::fill(p.begin(), p.end(), 1.0 / signatures.size());
  }

  // Epsilon floor over the full action set, then renormalize.
  double total = 0.0;
  for (auto& v : p) {
    v = std::max(v, eps);
    total += v;
  }
  for (auto& v : p) v /= total;

  // User overrides replace entries where they apply.
  double override_mass = 0.0;
  double rest_mass = 0.0;
  std::vector<int> overridden(signatures.size(), -1);
  for (std::size_t i = 0; i < signatures.size(); ++i) {
    for (std::size_t o = 0; o < overrides.size(); ++o)
      if (overrides[o].first == signatures[i]) overridden[i] = static_cast<int>(o);
    if (overridden[i] >= 0)
      override_mass += overrides[overridden[i]].second;
    else
      rest_mass += p[i];
  }
  if (override_mass > 0.0 && override_mass < 1.0 + 1e-9) {
    for (std::size_t i = 0; i < signatures.size(); ++i) {
      if (overridden[i] >= 0)
        p[i] = overrides[overridden[i]].second;
      else
        p[i] = rest_mass > 0.0 ? p[i] / rest_mass * (1.0 - override_mass) : 0.0;
    }
    double t2 = 0.0;
    for (double v : p) t2 += v;
    for (auto& v : p) v /= t2;
  }
  return p;
}

std::string SkillModel::variant_key(const std::vector<std::string>& args) const {
  std::string key;
  for (int idx : constant_roles) {
    if (!key.empty()) key += "+";
    key += args.at(idx);
  }
  return key;
}

const VariantNominal& SkillModel::nominal(const std::vector<std::string>& args) const {
  const auto it = variants.find(variant_key(args));
  return it != variants.end() ? it->second : pooled;
}

const SkillModel& ExpertModel::skill(const std::string& id) const {
  const auto it = skills.find(id);
  if (it == skills.end()) throw DemoError("expert model has no skill: " + id);
  return it->second;
}

// ---------------------------------------------------------------------------
// Scripted demonstrator.

namespace {

double min_jerk(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }

PlanarPose resolve_waypoint(const sim::Scene& scene, const Waypoint& wp,
                            const sim::RobotState& state, const sim::ObjectPoses& moved) {
  PlanarPose target;
  if (wp.ref_object.empty()) {
    target = wp.pose;
  } else {
    const sim::FkResult fk = sim::forward_kinematics(scene.arm, state.q);
    const PlanarPose obj = sim::object_world_pose(scene, state, fk.ee, wp.ref_object, &moved);
    target = obj.compose(wp.pose);
  }
  if (wp.manip_frame && state.attached) {
    // Pose refers to the held object; convert to the end effector.
    target = target.compose(state.attached->offset.inverse());
  }
  return target;
}

}  // namespace

Demonstration script_demo(const sim::Scene& scene, const WaypointProgram& program, Rng& rng,
                          double noise, double dt) {
  Demonstration demo;
  demo.scene = scene;

  sim::RobotState state = sim::RobotState::at(
      Eigen::Map<const Eigen::VectorXd>(scene.arm.home.data(), scene.arm.home.size()));
  sim::ObjectPoses moved;

  for (const auto& seg : program) {
    DemoSegment out;
    out.schema = seg.schema;
    out.args = seg.args;
    out.skill_id = seg.schema;
    out.pre_state = seg.pre_state;
    out.post_state = seg.post_state;
    out.duration = seg.duration;
    out.moved = moved;

    sim::RobotState begin = state;
    if (seg.event == cem::ActionEvent::kRelease)
      begin = sim::apply_release(scene, begin, nullptr, &moved);

    // Joint-space knots: current config plus one IK solution per waypoint.
    std::vector<Eigen::VectorXd> knots = {begin.q};
    for (const auto& wp : seg.waypoints) {
      PlanarPose target = resolve_waypoint(scene, wp, begin, moved);
      if (noise > 0.0) {
        target = PlanarPose(target.x + noise * rng.gaussian(), target.y + noise * rng.gaussian(),
                            target.theta + 0.5 * noise * rng.gaussian());
      }
      const auto q = sim::try_inverse_kinematics(scene.arm, target, knots.back());
      if (!q) throw DemoError("script_demo: infeasible waypoint for " + seg.schema);
      knots.push_back(*q);
    }

    const int n_steps = std::max(2, static_cast<int>(std::round(seg.duration / dt)));
    const int pieces = static_cast<int>(knots.size()) - 1;
    out.traj.reserve(n_steps + 1);
    for (int i = 0; i <= n_steps; ++i) {
      const double t = i * dt;
      const double s_total = static_cast<double>(i) / n_steps * pieces;
      const int piece = std::min(static_cast<int>(s_total), pieces - 1);
      const double s = min_jerk(std::clamp(s_total - piece, 0.0, 1.0));
      Eigen::VectorXd q = knots[piece] + s * (knots[piece + 1] - knots[piece]);

      sim::RobotState st = begin;
      st.q = q;
      st.qd = Eigen::VectorXd::Zero(q.size());
      sim::Control u;
      u.qd_cmd = Eigen::VectorXd::Zero(q.size());
      u.gripper = cem::gripper_command(seg.gripper, static_cast<double>(i) / n_steps);
      out.traj.push_back({t, st, u});
    }
    // Finite-difference executed velocities.
    for (std::size_t i = 0; i + 1 < out.traj.size(); ++i) {
      out.traj[i].u.qd_cmd = (out.traj[i + 1].s.q - out.traj[i].s.q) / dt;
      out.traj[i].s.qd = out.traj[i].u.qd_cmd;
    }

    const sim::Verdict verdict = dmp::is_valid(out.traj, scene, &moved);
    if (!verdict.valid())
      throw DemoError("script_demo: demonstration for " + seg.schema + " is invalid (" +
                      verdict.entity + ")");

    state = out.traj.back().s;
    if (seg.event == cem::ActionEvent::kGrasp)
      state = sim::apply_grasp(scene, state, seg.event_object, seg.event_frame, 0.05, 0.8, &moved);

    out.feature_objects = seg.feature_objects;
    out.trace = features::trace(seg.schema_features, out.traj, scene, seg.feature_objects, &moved);
    demo.segments.push_back(std::move(out));
  }
  return demo;
}

// ---------------------------------------------------------------------------
// Expert fitting.

namespace {

struct SegmentStats {
  Eigen::MatrixXd weights;
  PlanarPose offset;
  double duration;
  std::optional<PlanarPose> grasp_offset;
};

SegmentStats segment_stats(const DemoSegment& seg, const sim::Scene& scene,
                           const std::vector<std::string>& objects, const dmp::DmpConfig& dmp_cfg) {
  SegmentStats st;
  std::vector<Eigen::VectorXd> joints;
  joints.reserve(seg.traj.size());
  for (const auto& step : seg.traj) joints.push_back(step.s.q);
  st.weights = dmp::fit_weights(joints, seg.duration, dmp_cfg);
  st.duration = seg.duration;

  const auto& last = seg.traj.back();
  const sim::FkResult fk = sim::forward_kinematics(scene.arm, last.s.q);
  const PlanarPose manip = last.s.attached ? fk.ee.compose(last.s.attached->offset) : fk.ee;
  const PlanarPose obj =
      sim::object_world_pose(scene, last.s, fk.ee, objects.front(), &seg.moved);
  st.offset = obj.relative(manip);
  if (seg.traj.front().s.attached) st.grasp_offset = seg.traj.front().s.attached->offset;
  return st;
}

VariantNominal summarize(const std::vector<SegmentStats>& stats) {
  VariantNominal out;
  out.count = static_cast<int>(stats.size());
  if (stats.empty()) return out;

  out.mean_weights = Eigen::MatrixXd::Zero(stats[0].weights.rows(), stats[0].weights.cols());
  for (const auto& s : stats) out.mean_weights += s.weights;
  out.mean_weights /= static_cast<double>(stats.size());

  double wvar = 0.0;
  for (const auto& s : stats) wvar += (s.weights - out.mean_weights).squaredNorm();
  wvar /= std::max<double>(1.0, static_cast<double>(stats.size()) * stats[0].weights.size());
  out.weight_std = std::sqrt(wvar);

  double sx = 0.0, sy = 0.0, cs = 0.0, sn = 0.0, dur = 0.0;
  for (const auto& s : stats) {
    sx += s.offset.x;
    sy += s.offset.y;
    cs += std::cos(s.offset.theta);
    sn += std::sin(s.offset.theta);
    dur += s.duration;
  }
  const double n = static_cast<double>(stats.size());
  out.mean_offset = PlanarPose(sx / n, sy / n, std::atan2(sn, cs));
  out.mean_duration = dur / n;

  Eigen::Vector3d var = Eigen::Vector3d::Zero();
  for (const auto& s : stats) {
    var(0) += (s.offset.x - out.mean_offset.x) * (s.offset.x - out.mean_offset.x);
    var(1) += (s.offset.y - out.mean_offset.y) * (s.offset.y - out.mean_offset.y);
    const double dth = wrap_angle(s.offset.theta - out.mean_offset.theta);
    var(2) += dth * dth;
  }
  out.offset_std = (var / n).cwiseSqrt();

  int n_grasp = 0;
  double gx = 0.0, gy = 0.0, gc = 0.0, gs = 0.0;
  for (const auto& s : stats) {
    if (!s.grasp_offset) continue;
    ++n_grasp;
    gx += s.grasp_offset->x;
    gy += s.grasp_offset->y;
    gc += std::cos(s.grasp_offset->theta);
    gs += std::sin(s.grasp_offset->theta);
  }
  if (n_grasp > 0)
    out.mean_grasp_offset = PlanarPose(gx / n_grasp, gy / n_grasp, std::atan2(gs, gc));
  return out;
}

}  // namespace

ActionPrior fit_action_prior(const std::vector<Demonstration>& demos,
                             const std::vector<std::pair<std::string, double>>& overrides) {
  ActionPrior prior;
  std::map<std::string, int> state_counts;
  std::map<std::string, std::map<std::string, int>> action_counts;
  for (const auto& demo : demos) {
    for (const auto& seg : demo.segments) {
      pddl::GroundedAction ga;
      ga.schema = seg.schema;
      ga.args = seg.args;
      ++state_counts[seg.pre_state];
      ++action_counts[seg.pre_state][ga.signature()];
    }
  }
  for (const auto& [state, total] : state_counts)
    for (const auto& [sig, count] : action_counts[state])
      prior.by_state[state][sig] = static_cast<double>(count) / total;
  prior.overrides = overrides;
  return prior;
}

ExpertModel fit_expert(const std::vector<Demonstration>& demos, const FitConfig& cfg) {
  if (!cfg.domain) throw DemoError("fit_expert: config must carry the domain");
  ExpertModel model;

  // Group segments per skill.
  std::map<std::string, std::vector<std::pair<const Demonstration*, const DemoSegment*>>> by_skill;
  for (const auto& demo : demos)
    for (const auto& seg : demo.segments) by_skill[seg.skill_id].push_back({&demo, &seg});

  for (const auto& [skill_id, segs] : by_skill) {
    const pddl::ActionSchema* act = cfg.domain->find_action(skill_id);
    if (!act) throw DemoError("fit_expert: demo uses unknown action " + skill_id);

    SkillModel sm;
    sm.schema = features::derive_schema(*cfg.domain, skill_id);
    for (const auto& p : act->parameters) sm.param_names.push_back(p.name);
    for (std::size_t i = 0; i < act->parameters.size(); ++i) {
      const bool is_constant_typed = std::any_of(
          cfg.domain->constants.begin(), cfg.domain->constants.end(),
          [&](const pddl::TypedName& c) {
            return cfg.domain->type_is_a(c.type, act->parameters[i].type) ||
                   c.type == act->parameters[i].type;
          });
      const bool is_scene_typed = cfg.domain->type_is_a(act->parameters[i].type, "link") ||
                                  cfg.domain->type_is_a(act->parameters[i].type, "node") ||
                                  cfg.domain->type_is_a(act->parameters[i].type, "other");
      if (is_constant_typed && !is_scene_typed) sm.constant_roles.push_back(static_cast<int>(i));
    }

    // Gripper mode and world event from the schema's holding literals.
    bool adds_hold = false, dels_hold = false, pre_hold = false;
    std::string held_param;
    for (const auto& lit : act->effect) {
      if (lit.atom.predicate != "holding" && lit.atom.predicate != "hand-occupied") continue;
      if (lit.negated) {
        dels_hold = true;
      } else {
        adds_hold = true;
        if (lit.atom.predicate == "holding" && !lit.atom.args.empty())
          held_param = lit.atom.args.front();
      }
    }
    for (const auto& lit : act->precondition)
      if (!lit.negated &&
          (lit.atom.predicate == "holding" || lit.atom.predicate == "hand-occupied"))
        pre_hold = true;
    if (adds_hold) {
      sm.gripper = cem::GripperMode::kClosing;
      sm.event = cem::ActionEvent::kGrasp;
      sm.event_object_param = held_param;
      if (!sm.constant_roles.empty())
        sm.event_frame_param = act->parameters[sm.constant_roles.front()].name;
    } else if (dels_hold) {
      sm.gripper = cem::GripperMode::kOpening;
      sm.event = cem::ActionEvent::kRelease;
    } else if (pre_hold) {
      sm.gripper = cem::GripperMode::kHeld;
    }

    // Pool every trace step as a feature sample; uniform weights.
    std::vector<Eigen::VectorXd> samples;
    for (const auto& [demo, seg] : segs)
      for (const auto& step : seg->trace.steps) samples.push_back(step.x);
    if (samples.empty()) throw DemoError("fit_expert: skill " + skill_id + " has no feature data");

    const int k = std::max(1, std::min(cfg.k, static_cast<int>(samples.size())));
    Rng rng(mix_seed(cfg.seed, std::hash<std::string>{}(skill_id)));
    const density::Gmm init = density::kmeanspp_init(samples, k, rng, cfg.floor);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(samples.size()));
    const density::WeightedSamples ws =
        density::WeightedSamples::from_weights(std::move(samples), ones);
    sm.gmm = density::fit_gmm_weighted(ws, k, init, {.floor = cfg.floor});

    // Per-variant and pooled demo statistics.
    std::map<std::string, std::vector<SegmentStats>> variant_stats;
    std::vector<SegmentStats> pooled_stats;
    for (const auto& [demo, seg] : segs) {
      std::vector<std::string> objects;
      for (const auto& role : sm.schema.roles) {
        const auto it = std::find(sm.param_names.begin(), sm.param_names.end(), role);
        objects.push_back(seg->args.at(std::distance(sm.param_names.begin(), it)));
      }
      SegmentStats st = segment_stats(*seg, demo->scene, objects, cfg.dmp_cfg);
      variant_stats[sm.variant_key(seg->args)].push_back(st);
      pooled_stats.push_back(std::move(st));
    }
    for (const auto& [key, stats] : variant_stats) sm.variants[key] = summarize(stats);
    sm.pooled = summarize(pooled_stats);

    model.skills.emplace(skill_id, std::move(sm));
  }

  model.prior = fit_action_prior(demos, cfg.prior_overrides);
  for (const auto& demo : demos)
    if (!demo.scene_ref.empty()) model.demo_files.push_back(demo.scene_ref);
  return model;
}

ExpertModel augment(const ExpertModel& model, const std::vector<Demonstration>& pool,
                    const std::vector<Demonstration>& additions, const FitConfig& cfg) {
  std::vector<Demonstration> combined = pool;
  combined.insert(combined.end(), additions.begin(), additions.end());
  ExpertModel out = fit_expert(combined, cfg);
  out.augmented_from = model.augmented_from;
  for (const auto& add : additions) out.augmented_from.push_back(add.scene_ref);
  out.augmentation_rounds = model.augmentation_rounds + (additions.empty() ? 0 : 1);
  return out;
}

// ---------------------------------------------------------------------------
// Serialization.

namespace {

nlohmann::json pose_json(const PlanarPose& p) { return nlohmann::json::array({p.x, p.y, p.theta}); }

PlanarPose pose_from(const nlohmann::json& j) {
  return PlanarPose(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

nlohmann::json traj_json(const dmp::Trajectory& traj) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : traj) {
    nlohmann::json row;
    row["t"] = step.t;
    row["q"] = std::vector<double>(step.s.q.data(), step.s.q.data() + step.s.q.size());
    row["qd"] = std::vector<double>(step.s.qd.data(), step.s.qd.data() + step.s.qd.size());
    row["u"] = std::vector<double>(step.u.qd_cmd.data(), step.u.qd_cmd.data() + step.u.qd_cmd.size());
    row["gripper"] = step.u.gripper;
    steps.push_back(row);
  }
  return steps;
}

dmp::Trajectory traj_from(const nlohmann::json& j, const std::optional<sim::Attachment>& attach) {
  dmp::Trajectory traj;
  for (const auto& row : j) {
    features::Step step;
    step.t = row.at("t").get<double>();
    const auto q = row.at("q").get<std::vector<double>>();
    const auto qd = row.at("qd").get<std::vector<double>>();
    const auto u = row.at("u").get<std::vector<double>>();
    step.s.q = Eigen::Map<const Eigen::VectorXd>(q.data(), q.size());
    step.s.qd = Eigen::Map<const Eigen::VectorXd>(qd.data(), qd.size());
    step.s.attached = attach;
    step.u.qd_cmd = Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
    step.u.gripper = row.at("gripper").get<double>();
    traj.push_back(std::move(step));
  }
  return traj;
}

nlohmann::json nominal_json(const VariantNominal& n) {
  nlohmann::json j;
  std::vector<double> w(n.mean_weights.size());
  Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
      w.data(), n.mean_weights.rows(), n.mean_weights.cols()) = n.mean_weights;
  j["weights"] = w;
  j["weights_rows"] = n.mean_weights.rows();
  j["weight_std"] = n.weight_std;
  j["offset"] = pose_json(n.mean_offset);
  j["offset_std"] = {n.offset_std(0), n.offset_std(1), n.offset_std(2)};
  j["duration"] = n.mean_duration;
  j["count"] = n.count;
  if (n.mean_grasp_offset) j["grasp_offset"] = pose_json(*n.mean_grasp_offset);
  return j;
}

VariantNominal nominal_from(const nlohmann::json& j) {
  VariantNominal n;
  const auto w = j.at("weights").get<std::vector<double>>();
  const Eigen::Index rows = j.at("weights_rows").get<Eigen::Index>();
  const Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(w.size()) / rows : 0;
  n.mean_weights =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          w.data(), rows, cols);
  n.weight_std = j.at("weight_std").get<double>();
  n.mean_offset = pose_from(j.at("offset"));
  n.offset_std = Eigen::Vector3d(j.at("offset_std").at(0).get<double>(),
                                 j.at("offset_std").at(1).get<double>(),
                                 j.at("offset_std").at(2).get<double>());
  n.mean_duration = j.at("duration").get<double>();
  n.count = j.at("count").get<int>();
  if (j.contains("grasp_offset")) n.mean_grasp_offset = pose_from(j.at("grasp_offset"));
  return n;
}

}  // namespace

nlohmann::json to_json(const Demonstration& demo) {
  nlohmann::json j;
  j["scene_ref"] = demo.scene_ref;
  j["scene"] = sim::to_json(demo.scene);
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& seg : demo.segments) {
    nlohmann::json js;
    js["schema"] = seg.schema;
    js["args"] = seg.args;
    js["skill"] = seg.skill_id;
    js["pre_state"] = seg.pre_state;
    js["post_state"] = seg.post_state;
    js["duration"] = seg.duration;
    js["steps"] = traj_json(seg.traj);
    if (!seg.traj.empty() && seg.traj.front().s.attached) {
      js["attach"] = {{"object", seg.traj.front().s.attached->object},
                      {"offset", pose_json(seg.traj.front().s.attached->offset)}};
    }
    nlohmann::json moved = nlohmann::json::object();
    for (const auto& [name, pose] : seg.moved) moved[name] = pose_json(pose);
    js["moved"] = moved;
    js["schema_features"] = features::to_json(seg.trace.schema);
    js["feature_objects"] = seg.feature_objects;
    segs.push_back(js);
  }
  j["segments"] = segs;
  return j;
}

Demonstration demonstration_from_json(const nlohmann::json& j) {
  Demonstration demo;
  demo.scene_ref = j.value("scene_ref", "");
  demo.scene = sim::scene_from_json(j.at("scene"));
  for (const auto& js : j.at("segments")) {
    DemoSegment seg;
    seg.schema = js.at("schema").get<std::string>();
    seg.args = js.at("args").get<std::vector<std::string>>();
    seg.skill_id = js.at("skill").get<std::string>();
    seg.pre_state = js.at("pre_state").get<std::string>();
    seg.post_state = js.at("post_state").get<std::string>();
    seg.duration = js.at("duration").get<double>();
    std::optional<sim::Attachment> attach;
    if (js.contains("attach")) {
      attach = sim::Attachment{js.at("attach").at("object").get<std::string>(),
                               pose_from(js.at("attach").at("offset"))};
    }
    seg.traj = traj_from(js.at("steps"), attach);
    for (const auto& [name, pose] : js.at("moved").items()) seg.moved[name] = pose_from(pose);
    const features::FeatureSchema schema = features::schema_from_json(js.at("schema_features"));
    seg.feature_objects = js.at("feature_objects").get<std::vector<std::string>>();
    // The trace is recomputed from the trajectory rather than stored.
    seg.trace = features::trace(schema, seg.traj, demo.scene, seg.feature_objects, &seg.moved);
    demo.segments.push_back(std::move(seg));
  }
  return demo;
}

void save_demonstration(const Demonstration& demo, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DemoError("cannot write demo file: " + path);
  out << to_json(demo).dump(1) << "\n";
}

Demonstration load_demonstration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DemoError("cannot open demo file: " + path);
  nlohmann::json j;
  in >> j;
  return demonstration_from_json(j);
}

nlohmann::json to_json(const ExpertModel& model) {
  nlohmann::json j;
  nlohmann::json skills;
  for (const auto& [id, sm] : model.skills) {
    nlohmann::json js;
    js["schema"] = features::to_json(sm.schema);
    js["params"] = sm.param_names;
    js["constant_roles"] = sm.constant_roles;
    js["gripper"] = static_cast<int>(sm.gripper);
    js["event"] = static_cast<int>(sm.event);
    js["event_object_param"] = sm.event_object_param;
    js["event_frame_param"] = sm.event_frame_param;
    js["gmm"] = density::to_json(sm.gmm);
    nlohmann::json variants;
    for (const auto& [key, nominal] : sm.variants) variants[key] = nominal_json(nominal);
    js["variants"] = variants;
    js["pooled"] = nominal_json(sm.pooled);
    skills[id] = js;
  }
  j["skills"] = skills;

  nlohmann::json prior;
  for (const auto& [state, actions] : model.prior.by_state) {
    nlohmann::json row;
    for (const auto& [sig, p] : actions) row[sig] = p;
    prior[state] = row;
  }
  j["prior"] = prior;
  nlohmann::json overrides = nlohmann::json::array();
  for (const auto& [sig, p] : model.prior.overrides) overrides.push_back({{"action", sig}, {"p", p}});
  j["prior_overrides"] = overrides;
  j["provenance"] = {{"demo_files", model.demo_files},
                     {"augmented_from", model.augmented_from},
                     {"augmentation_rounds", model.augmentation_rounds}};
  return j;
}

ExpertModel model_from_json(const nlohmann::json& j) {
  ExpertModel model;
  for (const auto& [id, js] : j.at("skills").items()) {
    SkillModel sm;
    sm.schema = features::schema_from_json(js.at("schema"));
    sm.param_names = js.at("params").get<std::vector<std::string>>();
    sm.constant_roles = js.at("constant_roles").get<std::vector<int>>();
    sm.gripper = static_cast<cem::GripperMode>(js.at("gripper").get<int>());
    sm.event = static_cast<cem::ActionEvent>(js.at("event").get<int>());
    sm.event_object_param = js.at("event_object_param").get<std::string>();
    sm.event_frame_param = js.at("event_frame_param").get<std::string>();
    sm.gmm = density::gmm_from_json(js.at("gmm"));
    for (const auto& [key, jn] : js.at("variants").items()) sm.variants[key] = nominal_from(jn);
    sm.pooled = nominal_from(js.at("pooled"));
    model.skills.emplace(id, std::move(sm));
  }
  for (const auto& [state, row] : j.at("prior").items())
    for (const auto& [sig, p] : row.items()) model.prior.by_state[state][sig] = p.get<double>();
  for (const auto& o : j.value("prior_overrides", nlohmann::json::array()))
    model.prior.overrides.emplace_back(o.at("action").get<std::string>(), o.at("p").get<double>());
  const auto prov = j.value("provenance", nlohmann::json::object());
  model.demo_files = prov.value("demo_files", std::vector<std::string>{});
  model.augmented_from = prov.value("augmented_from", std::vector<std::string>{});
  model.augmentation_rounds = prov.value("augmentation_rounds", 0);
  return model;
}

void save_model(const ExpertModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DemoError("cannot write model file: " + path);
  out << to_json(model).dump(1) << "\n";
}

ExpertModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DemoError("cannot open model file: " + path);
  nlohmann::json j;
  in >> j;
  return model_from_json(j);
}

}  // namespace skillplan::demos
