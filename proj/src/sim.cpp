#include "skillplan/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "skillplan/rng.hpp"

namespace skillplan::sim {

double ArmModel::reach() const {
  double r = 0.0;
  for (double l : link_lengths) r += l;
  return r;
}

bool ArmModel::within_limits(const VectorXd& q, int* violated) const {
  for (int i = 0; i < dof(); ++i) {
    if (q(i) < joint_limits[i].first || q(i) > joint_limits[i].second) {
      if (violated) *violated = i;
      return false;
    }
  }
  return true;
}

void ArmModel::validate() const {
  if (link_lengths.empty()) throw SimError("arm has no links");
  if (link_radii.size() != link_lengths.size()) throw SimError("arm radii/lengths mismatch");
  if (joint_limits.size() != link_lengths.size()) throw SimError("arm limits/lengths mismatch");
  for (double l : link_lengths)
    if (l <= 0.0) throw SimError("link length must be positive");
  for (const auto& [lo, hi] : joint_limits)
    if (lo >= hi) throw SimError("joint limits must satisfy lo < hi");
}

const SceneObject* Scene::find_object(const std::string& name) const {
  for (const auto& o : objects)
    if (o.name == name) return &o;
  return nullptr;
}

const SceneObject& Scene::object(const std::string& name) const {
  const SceneObject* o = find_object(name);
  if (!o) throw SimError("unknown scene object: " + name);
  return *o;
}

void Scene::validate() const {
  arm.validate();
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i].radius <= 0.0) throw SimError("object radius must be positive");
    for (std::size_t j = i + 1; j < objects.size(); ++j)
      if (objects[i].name == objects[j].name)
        throw SimError("duplicate object name: " + objects[i].name);
  }
  for (const auto& c : circles)
    if (c.radius <= 0.0) throw SimError("obstacle radius must be positive");
  for (const auto& r : rects)
    if (r.box.hi.x() <= r.box.lo.x() || r.box.hi.y() <= r.box.lo.y())
      throw SimError("rect obstacle extents must be positive");
}

FkResult forward_kinematics(const ArmModel& arm, const VectorXd& q) {
  if (q.size() != arm.dof()) throw SimError("forward_kinematics: wrong joint count");
  FkResult out;
  out.points.reserve(arm.dof() + 1);
  double x = arm.base.x, y = arm.base.y, th = arm.base.theta;
  out.points.emplace_back(x, y);
  for (int i = 0; i < arm.dof(); ++i) {
    th += q(i);
    x += arm.link_lengths[i] * std::cos(th);
    y += arm.link_lengths[i] * std::sin(th);
    out.points.emplace_back(x, y);
  }
  out.ee = PlanarPose(x, y, th);
  return out;
}

namespace {

// Task-space error (x, y, wrapped theta) of FK(q) relative to target.
Eigen::Vector3d pose_error(const ArmModel& arm, const VectorXd& q, const PlanarPose& target) {
  const FkResult fk = forward_kinematics(arm, q);
  return Eigen::Vector3d(target.x - fk.ee.x, target.y - fk.ee.y,
                         wrap_angle(target.theta - fk.ee.theta));
}

Eigen::MatrixXd jacobian(const ArmModel& arm, const VectorXd& q) {
  const FkResult fk = forward_kinematics(arm, q);
  Eigen::MatrixXd J(3, arm.dof());
  for (int i = 0; i < arm.dof(); ++i) {
    // Joint i rotates everything from point i onward about points[i].
    J(0, i) = -(fk.ee.y - fk.points[i].y());
    J(1, i) = fk.ee.x - fk.points[i].x();
    J(2, i) = 1.0;
  }
  return J;
}

std::optional<VectorXd> dls_solve(const ArmModel& arm, const PlanarPose& target, VectorXd q) {
  constexpr int kMaxIters = 200;
  constexpr double kLambda2 = 0.0025;  // damping^2
  constexpr double kStepClamp = 0.5;
  for (int it = 0; it < kMaxIters; ++it) {
    const Eigen::Vector3d e = pose_error(arm, q, target);
    if (e.head<2>().norm() < 1e-10 && std::abs(e(2)) < 1e-10) {
      for (int i = 0; i < q.size(); ++i) q(i) = wrap_angle(q(i));
      return q;
    }
    const Eigen::MatrixXd J = jacobian(arm, q);
    const Eigen::Matrix3d JJt = J * J.transpose() + kLambda2 * Eigen::Matrix3d::Identity();
    VectorXd dq = J.transpose() * JJt.ldlt().solve(e);
    const double n = dq.norm();
    if (n > kStepClamp) dq *= kStepClamp / n;
    q += dq;
  }
  return std::nullopt;
}

}  // namespace

std::optional<VectorXd> try_inverse_kinematics(const ArmModel& arm, const PlanarPose& target,
                                               const VectorXd& seed) {
  const Vec2 rel = target.position() - arm.base.position();
  if (rel.norm() > arm.reach() + 1e-9) return std::nullopt;

  const auto accept = [&](const std::optional<VectorXd>& q) -> std::optional<VectorXd> {
    if (!q) return std::nullopt;
    if (!arm.within_limits(*q)) return std::nullopt;
    const Eigen::Vector3d e = pose_error(arm, *q, target);
    if (e.head<2>().norm() > 1e-6 || std::abs(e(2)) > 1e-6) return std::nullopt;
    return q;
  };

  if (auto q = accept(dls_solve(arm, target, seed))) return q;

  // Deterministic restarts seeded from the target pose bits.
  std::uint64_t h = 0x5bd1e995;
  const auto fold = [&h](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix_seed(h, bits);
  };
  fold(target.x);
  fold(target.y);
  fold(target.theta);
  Rng rng(h);
  for (int attempt = 0; attempt < 16; ++attempt) {
    VectorXd q0(arm.dof());
    for (int i = 0; i < arm.dof(); ++i)
      q0(i) = rng.uniform(arm.joint_limits[i].first, arm.joint_limits[i].second);
    if (auto q = accept(dls_solve(arm, target, q0))) return q;
  }
  return std::nullopt;
}

VectorXd inverse_kinematics(const ArmModel& arm, const PlanarPose& target, const VectorXd& seed) {
  const Vec2 rel = target.position() - arm.base.position();
  if (rel.norm() > arm.reach() + 1e-9)
    throw SimError("inverse_kinematics: target beyond reach");
  auto q = try_inverse_kinematics(arm, target, seed);
  if (!q) throw SimError("inverse_kinematics: no limit-respecting solution found");
  return *q;
}

Verdict check_valid(const Scene& scene, const RobotState& s, const ObjectPoses* moved) {
  int joint = -1;
  if (!scene.arm.within_limits(s.q, &joint)) return {Verdict::kJointLimit, "", joint};

  const FkResult fk = forward_kinematics(scene.arm, s.q);

  // Workspace containment.
  for (const auto& p : fk.points)
    if (!scene.bounds.contains(p)) return {Verdict::kCollision, "workspace", -1};

  std::optional<Vec2> held_center;
  double held_radius = 0.0;
  std::string held_name;
  if (s.attached) {
    const PlanarPose obj_pose = fk.ee.compose(s.attached->offset);
    held_center = obj_pose.position();
    held_radius = scene.object(s.attached->object).radius;
    held_name = s.attached->object;
    if (!scene.bounds.contains(*held_center)) return {Verdict::kCollision, "workspace", -1};
  }

  const auto capsule_hits_circle = [&](const Vec2& c, double r, double margin) {
    for (int i = 0; i < scene.arm.dof(); ++i) {
      if (point_segment_distance(c, fk.points[i], fk.points[i + 1]) <
          r + scene.arm.link_radii[i] + margin)
        return true;
    }
    return false;
  };

  for (const auto& ob : scene.circles) {
    if (capsule_hits_circle(ob.center, ob.radius, 0.0)) return {Verdict::kCollision, ob.name, -1};
    if (held_center && (*held_center - ob.center).norm() < ob.radius + held_radius)
      return {Verdict::kCollision, ob.name, -1};
  }
  for (const auto& ob : scene.rects) {
    for (int i = 0; i < scene.arm.dof(); ++i)
      if (segment_aabb_distance(fk.points[i], fk.points[i + 1], ob.box) < scene.arm.link_radii[i])
        return {Verdict::kCollision, ob.name, -1};
    if (held_center && point_aabb_distance(*held_center, ob.box) < held_radius)
      return {Verdict::kCollision, ob.name, -1};
  }
  for (const auto& obj : scene.objects) {
    if (obj.name == held_name) continue;
    PlanarPose pose = obj.pose;
    if (moved) {
      auto it = moved->find(obj.name);
      if (it != moved->end()) pose = it->second;
    }
    if (capsule_hits_circle(pose.position(), obj.radius, 0.0))
      return {Verdict::kCollision, obj.name, -1};
    if (held_center && (*held_center - pose.position()).norm() < obj.radius + held_radius)
      return {Verdict::kCollision, obj.name, -1};
  }
  return {};
}

RobotState apply_grasp(const Scene& scene, const RobotState& s, const std::string& object,
                       const std::string& frame, double tol_xy, double tol_th,
                       const ObjectPoses* moved) {
  if (s.attached) throw SimError("apply_grasp: already holding " + s.attached->object);
  const SceneObject& obj = scene.object(object);
  const FkResult fk = forward_kinematics(scene.arm, s.q);
  PlanarPose obj_pose = obj.pose;
  if (moved) {
    auto it = moved->find(object);
    if (it != moved->end()) obj_pose = it->second;
  }

  bool ok = false;
  for (const auto& [fname, fpose] : obj.frames) {
    if (!frame.empty() && fname != frame) continue;
    const PlanarPose world_frame = obj_pose.compose(fpose);
    if (fk.ee.approx_equal(world_frame, tol_xy, tol_th)) {
      ok = true;
      break;
    }
  }
  if (!ok)
    throw SimError("apply_grasp: end effector not within tolerance of a grasp frame of " + object +
                   (frame.empty() ? "" : " (frame " + frame + ")"));

  RobotState out = s;
  out.attached = Attachment{object, fk.ee.relative(obj_pose)};
  return out;
}

RobotState apply_release(const Scene& scene, const RobotState& s, bool* warned,
                         ObjectPoses* moved) {
  if (warned) *warned = false;
  if (!s.attached) {
    if (warned) *warned = true;  // release with empty hands: flagged no-op
    return s;
  }
  if (moved) {
    const FkResult fk = forward_kinematics(scene.arm, s.q);
    (*moved)[s.attached->object] = fk.ee.compose(s.attached->offset);
  }
  RobotState out = s;
  out.attached.reset();
  return out;
}

// ---------------------------------------------------------------------------

namespace {

PlanarPose pose_from_json(const nlohmann::json& j) {
  return PlanarPose(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

nlohmann::json pose_to_json(const PlanarPose& p) {
  return nlohmann::json::array({p.x, p.y, p.theta});
}

}  // namespace

Scene scene_from_json(const nlohmann::json& j) {
  Scene scene;
  const auto& ja = j.at("arm");
  scene.arm.base = pose_from_json(ja.at("base"));
  scene.arm.link_lengths = ja.at("lengths").get<std::vector<double>>();
  scene.arm.link_radii = ja.at("radii").get<std::vector<double>>();
  for (const auto& lim : ja.at("limits"))
    scene.arm.joint_limits.emplace_back(lim.at(0).get<double>(), lim.at(1).get<double>());
  scene.arm.home = ja.value("home", std::vector<double>(scene.arm.link_lengths.size(), 0.0));

  for (const auto& jo : j.value("objects", nlohmann::json::array())) {
    SceneObject obj;
    obj.name = jo.at("name").get<std::string>();
    obj.category = jo.value("category", "other");
    obj.pose = pose_from_json(jo.at("pose"));
    obj.radius = jo.value("radius", 0.05);
    for (const auto& [k, v] : jo.value("frames", nlohmann::json::object()).items())
      obj.frames[k] = pose_from_json(v);
    scene.objects.push_back(std::move(obj));
  }
  const auto& jobs = j.value("obstacles", nlohmann::json::object());
  int n = 0;
  for (const auto& c : jobs.value("circles", nlohmann::json::array())) {
    CircleObstacle ob;
    ob.center = Vec2(c.at(0).get<double>(), c.at(1).get<double>());
    ob.radius = c.at(2).get<double>();
    ob.name = "circle" + std::to_string(n++);
    scene.circles.push_back(ob);
  }
  n = 0;
  for (const auto& r : jobs.value("rects", nlohmann::json::array())) {
    RectObstacle ob;
    ob.box.lo = Vec2(r.at(0).get<double>(), r.at(1).get<double>());
    ob.box.hi = Vec2(r.at(2).get<double>(), r.at(3).get<double>());
    ob.name = "rect" + std::to_string(n++);
    scene.rects.push_back(ob);
  }
  const auto& b = j.at("bounds");
  scene.bounds.lo = Vec2(b.at(0).get<double>(), b.at(1).get<double>());
  scene.bounds.hi = Vec2(b.at(2).get<double>(), b.at(3).get<double>());
  scene.validate();
  return scene;
}

nlohmann::json to_json(const Scene& scene) {
  nlohmann::json j;
  nlohmann::json ja;
  ja["base"] = pose_to_json(scene.arm.base);
  ja["lengths"] = scene.arm.link_lengths;
  ja["radii"] = scene.arm.link_radii;
  nlohmann::json lims = nlohmann::json::array();
  for (const auto& [lo, hi] : scene.arm.joint_limits) lims.push_back({lo, hi});
  ja["limits"] = lims;
  ja["home"] = scene.arm.home;
  j["arm"] = ja;

  nlohmann::json jos = nlohmann::json::array();
  for (const auto& o : scene.objects) {
    nlohmann::json jo;
    jo["name"] = o.name;
    jo["category"] = o.category;
    jo["pose"] = pose_to_json(o.pose);
    jo["radius"] = o.radius;
    nlohmann::json frames;
    for (const auto& [k, v] : o.frames) frames[k] = pose_to_json(v);
    jo["frames"] = frames;
    jos.push_back(jo);
  }
  j["objects"] = jos;

  nlohmann::json obs;
  nlohmann::json circles = nlohmann::json::array();
  for (const auto& c : scene.circles) circles.push_back({c.center.x(), c.center.y(), c.radius});
  obs["circles"] = circles;
  nlohmann::json rects = nlohmann::json::array();
  for (const auto& r : scene.rects)
    rects.push_back({r.box.lo.x(), r.box.lo.y(), r.box.hi.x(), r.box.hi.y()});
  obs["rects"] = rects;
  j["obstacles"] = obs;
  j["bounds"] = {scene.bounds.lo.x(), scene.bounds.lo.y(), scene.bounds.hi.x(),
                 scene.bounds.hi.y()};
  return j;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SimError("cannot open scene file: " + path);
  nlohmann::json j;
  in >> j;
  return scene_from_json(j);
}

void save_scene(const Scene& scene, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw SimError("cannot write scene file: " + path);
  out << to_json(scene).dump(2) << "\n";
}

}  // namespace skillplan::sim
