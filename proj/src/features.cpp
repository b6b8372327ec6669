#include "skillplan/features.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

namespace skillplan::features {

std::vector<std::string> FeatureSchema::coordinate_names() const {
  std::vector<std::string> names = {"gripper"};
  static const char* block[] = {"t",  "px", "py", "pz", "rx", "ry", "rz",
                                "rw", "pn", "vx", "vy", "vz", "vn"};
  for (const auto& role : roles)
    for (const char* b : block) names.push_back(role + "." + b);
  return names;
}

FeatureSchema derive_schema(const pddl::Domain& dom, const std::string& action_name) {
  const pddl::ActionSchema* act = dom.find_action(action_name);
  if (!act) throw pddl::GroundError("derive_schema: unknown action " + action_name);

  const auto is_scene_type = [&](const std::string& t) {
    return dom.type_is_a(t, "link") || dom.type_is_a(t, "node") || dom.type_is_a(t, "other");
  };
  const auto held = [&](const std::string& param) {
    for (const auto& lit : act->precondition)
      if (!lit.negated && lit.atom.predicate == "holding" &&
          std::find(lit.atom.args.begin(), lit.atom.args.end(), param) != lit.atom.args.end())
        return true;
    return false;
  };

  FeatureSchema schema;
  schema.skill_id = action_name;
  for (const auto& p : act->parameters)
    if (is_scene_type(p.type) && !held(p.name)) schema.roles.push_back(p.name);
  if (schema.roles.empty()) {
    // Fall back to all scene-typed parameters (an action over only the held
    // object still relates the manipulation frame to it).
    for (const auto& p : act->parameters)
      if (is_scene_type(p.type)) schema.roles.push_back(p.name);
  }
  return schema;
}

namespace {

// 13-coordinate block for the manipulation frame relative to one object.
void fill_block(Eigen::Ref<VectorXd> block, double t_norm, const PlanarPose& rel) {
  const double half = 0.5 * rel.theta;
  double rz = std::sin(half), rw = std::cos(half);
  if (rw < 0.0) {  // canonical double-cover representative
    rz = -rz;
    rw = -rw;
  }
  block(0) = t_norm;
  block(1) = rel.x;
  block(2) = rel.y;
  block(3) = 0.0;  // planar embedding
  block(4) = 0.0;
  block(5) = 0.0;
  block(6) = rz;
  block(7) = rw;
  block(8) = rel.position().norm();
  block.segment(9, 4).setZero();  // velocities defined along traces
}

PlanarPose manipulation_frame(const sim::Scene& scene, const sim::RobotState& s) {
  const sim::FkResult fk = forward_kinematics(scene.arm, s.q);
  if (s.attached) return fk.ee.compose(s.attached->offset);
  return fk.ee;
}

}  // namespace

VectorXd extract(const FeatureSchema& schema, double t_norm, const sim::RobotState& s,
                 const sim::Control& u, const sim::Scene& scene,
                 const std::vector<std::string>& objects, const sim::ObjectPoses* moved) {
  if (objects.size() != schema.roles.size())
    throw sim::SimError("extract: role/object count mismatch for skill " + schema.skill_id);
  const PlanarPose frame = manipulation_frame(scene, s);
  const sim::FkResult fk = forward_kinematics(scene.arm, s.q);

  VectorXd x(schema.dim());
  x(0) = u.gripper;
  for (std::size_t r = 0; r < objects.size(); ++r) {
    const PlanarPose obj = sim::object_world_pose(scene, s, fk.ee, objects[r], moved);
    // Manipulation frame expressed in the object frame.
    const PlanarPose rel = obj.relative(frame);
    fill_block(x.segment(1 + FeatureSchema::kBlock * static_cast<Eigen::Index>(r),
                         FeatureSchema::kBlock),
               t_norm, rel);
  }
  return x;
}

FeatureTrace trace(const FeatureSchema& schema, const std::vector<Step>& steps,
                   const sim::Scene& scene, const std::vector<std::string>& objects,
                   const sim::ObjectPoses* moved) {
  if (steps.empty()) throw sim::SimError("trace: empty trajectory");
  FeatureTrace out;
  out.schema = schema;
  const double t0 = steps.front().t;
  const double tN = steps.back().t;
  const double span = std::max(tN - t0, 1e-12);

  for (const auto& step : steps) {
    const double t_norm = (step.t - t0) / span;
    out.steps.push_back({step.t, extract(schema, t_norm, step.s, step.u, scene, objects, moved)});
  }

  // Central differences of the relative position; one-sided at endpoints.
  const int n = static_cast<int>(out.steps.size());
  for (std::size_t r = 0; r < schema.roles.size(); ++r) {
    const Eigen::Index off = 1 + FeatureSchema::kBlock * static_cast<Eigen::Index>(r);
    for (int i = 0; i < n; ++i) {
      const int lo = std::max(i - 1, 0), hi = std::min(i + 1, n - 1);
      const double dt = out.steps[hi].t - out.steps[lo].t;
      if (dt <= 0.0) continue;
      const Eigen::Vector2d v =
          (out.steps[hi].x.segment(off + 1, 2) - out.steps[lo].x.segment(off + 1, 2)) / dt;
      out.steps[i].x(off + 9) = v.x();
      out.steps[i].x(off + 10) = v.y();
      out.steps[i].x(off + 11) = 0.0;
      out.steps[i].x(off + 12) = v.norm();
    }
  }
  return out;
}

std::string to_csv(const FeatureTrace& trace) {
  std::ostringstream out;
  out.precision(17);
  out << "time";
  for (const auto& name : trace.schema.coordinate_names()) out << "," << name;
  out << "\n";
  for (const auto& step : trace.steps) {
    out << step.t;
    for (Eigen::Index i = 0; i < step.x.size(); ++i) out << "," << step.x(i);
    out << "\n";
  }
  return out.str();
}

nlohmann::json to_json(const FeatureSchema& schema) {
  return nlohmann::json{{"skill", schema.skill_id}, {"roles", schema.roles}};
}

FeatureSchema schema_from_json(const nlohmann::json& j) {
  FeatureSchema s;
  s.skill_id = j.at("skill").get<std::string>();
  s.roles = j.at("roles").get<std::vector<std::string>>();
  return s;
}

}  // namespace skillplan::features
