#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "skillplan/pddl.hpp"
#include "skillplan/sim.hpp"

namespace skillplan::features {

using Eigen::VectorXd;

/// Which scene objects an action's features relate the manipulation frame to.
/// One 13-coordinate block per role, prefixed by the gripper command:
///   [gripper, (t, px, py, pz, rx, ry, rz, rw, |p|, vx, vy, vz, |v|) per role]
struct FeatureSchema {
  std::string skill_id;
  std::vector<std::string> roles;  // action parameter names bound to scene objects

  static constexpr int kBlock = 13;
  int dim() const { return 1 + kBlock * static_cast<int>(roles.size()); }
  std::vector<std::string> coordinate_names() const;
};

/// Derive the schema from an action: parameters whose type is a scene-object
/// category (link/node/other), minus any parameter held in the hand (appears
/// in a positive `holding` precondition).
FeatureSchema derive_schema(const pddl::Domain& dom, const std::string& action_name);

struct TimedFeature {
  double t = 0.0;  // seconds
  VectorXd x;
};

struct FeatureTrace {
  FeatureSchema schema;
  std::vector<TimedFeature> steps;  // timestamps strictly increasing
};

/// Feature sample at one instant. The velocity block is zero here; velocities
/// are defined along traces (central finite differences, see trace()).
/// `objects` maps each schema role to a scene object name.
VectorXd extract(const FeatureSchema& schema, double t_norm, const sim::RobotState& s,
                 const sim::Control& u, const sim::Scene& scene,
                 const std::vector<std::string>& objects,
                 const sim::ObjectPoses* moved = nullptr);

struct Step {
  double t;
  sim::RobotState s;
  sim::Control u;
};

/// One feature per step; the time coordinate is normalized to [0,1] over the
/// action and velocities come from central differences of the relative
/// position (one-sided at the endpoints).
FeatureTrace trace(const FeatureSchema& schema, const std::vector<Step>& steps,
                   const sim::Scene& scene, const std::vector<std::string>& objects,
                   const sim::ObjectPoses* moved = nullptr);

std::string to_csv(const FeatureTrace& trace);

nlohmann::json to_json(const FeatureSchema& schema);
FeatureSchema schema_from_json(const nlohmann::json& j);

}  // namespace skillplan::features
