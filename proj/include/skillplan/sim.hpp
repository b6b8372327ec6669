#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "skillplan/geometry.hpp"

namespace skillplan::sim {

using Eigen::VectorXd;

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Serial planar chain. Joint limits in radians, lo < hi per joint.
struct ArmModel {
  PlanarPose base;
  std::vector<double> link_lengths;   // meters, > 0
  std::vector<double> link_radii;     // collision capsule radii
  std::vector<std::pair<double, double>> joint_limits;
  std::vector<double> home;           // start configuration

  int dof() const { return static_cast<int>(link_lengths.size()); }
  double reach() const;
  bool within_limits(const VectorXd& q, int* violated = nullptr) const;
  void validate() const;
};

struct SceneObject {
  std::string name;
  std::string category;  // link | node | other
  PlanarPose pose;
  double radius = 0.05;  // circular collision footprint
  std::map<std::string, PlanarPose> frames;  // named grasp/mate poses in object frame
};

struct CircleObstacle {
  std::string name;
  Vec2 center;
  double radius;
};

struct RectObstacle {
  std::string name;
  Aabb box;
};

struct Scene {
  ArmModel arm;
  std::vector<SceneObject> objects;
  std::vector<CircleObstacle> circles;
  std::vector<RectObstacle> rects;
  Aabb bounds;

  const SceneObject* find_object(const std::string& name) const;
  const SceneObject& object(const std::string& name) const;
  void validate() const;
};

struct Attachment {
  std::string object;
  PlanarPose offset;  // object pose in end-effector frame
};

/// Robot state s: joint positions/velocities plus an optional held object.
struct RobotState {
  VectorXd q;
  VectorXd qd;
  std::optional<Attachment> attached;

  static RobotState at(const VectorXd& q0) {
    RobotState s;
    s.q = q0;
    s.qd = VectorXd::Zero(q0.size());
    return s;
  }
};

/// Control u: commanded joint velocities plus gripper command in [0,1].
struct Control {
  VectorXd qd_cmd;
  double gripper = 0.0;
};

/// World-frame poses for objects that have moved (e.g. after a release);
/// objects not listed stay at their scene pose.
using ObjectPoses = std::map<std::string, PlanarPose>;

inline PlanarPose object_world_pose(const Scene& scene, const RobotState& s,
                                    const PlanarPose& ee, const std::string& name,
                                    const ObjectPoses* moved = nullptr) {
  if (s.attached && s.attached->object == name) return ee.compose(s.attached->offset);
  if (moved) {
    auto it = moved->find(name);
    if (it != moved->end()) return it->second;
  }
  return scene.object(name).pose;
}

struct FkResult {
  PlanarPose ee;
  std::vector<Vec2> points;  // base joint, each joint, end effector (dof+1 points)
};

FkResult forward_kinematics(const ArmModel& arm, const VectorXd& q);

/// Damped-least-squares IK from `seed`, falling back to deterministic
/// pseudo-random restarts. Returns nullopt when no in-limit solution is found.
std::optional<VectorXd> try_inverse_kinematics(const ArmModel& arm, const PlanarPose& target,
                                               const VectorXd& seed);

/// Throwing wrapper: FK(result) matches target within 1e-6 and respects limits.
VectorXd inverse_kinematics(const ArmModel& arm, const PlanarPose& target, const VectorXd& seed);

struct Verdict {
  enum Kind { kValid, kCollision, kJointLimit } kind = kValid;
  std::string entity;  // colliding obstacle/object name, or "workspace"
  int joint = -1;      // offending joint for kJointLimit

  bool valid() const { return kind == kValid; }
};

/// Collision = any arm-link capsule or attached-object footprint intersects
/// any obstacle or non-attached object; plus joint-limit and workspace checks.
Verdict check_valid(const Scene& scene, const RobotState& s, const ObjectPoses* moved = nullptr);

/// Attach `object` if the end effector is within tolerance of one of its
/// declared grasp frames (the named frame when `frame` is nonempty).
RobotState apply_grasp(const Scene& scene, const RobotState& s, const std::string& object,
                       const std::string& frame = "", double tol_xy = 0.04, double tol_th = 0.6,
                       const ObjectPoses* moved = nullptr);

/// Detach the held object; a release with empty hands is a flagged no-op.
RobotState apply_release(const Scene& scene, const RobotState& s, bool* warned = nullptr,
                         ObjectPoses* moved = nullptr);

Scene scene_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Scene& scene);
Scene load_scene(const std::string& path);
void save_scene(const Scene& scene, const std::string& path);

}  // namespace skillplan::sim
