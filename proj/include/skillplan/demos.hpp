#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "skillplan/cem.hpp"
#include "skillplan/density.hpp"
#include "skillplan/dmp.hpp"
#include "skillplan/features.hpp"
#include "skillplan/pddl.hpp"
#include "skillplan/sim.hpp"

namespace skillplan::demos {

class DemoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One demonstrated action: grounded binding, predicate states before/after,
/// the executed trajectory and its feature trace.
struct DemoSegment {
  std::string schema;
  std::vector<std::string> args;
  std::string skill_id;
  std::string pre_state;   // canonical predicate-state key
  std::string post_state;
  double duration = 2.0;
  dmp::Trajectory traj;
  features::FeatureTrace trace;
  std::vector<std::string> feature_objects;  // role-bound scene objects
  sim::ObjectPoses moved;  // object pose overrides in effect during the segment
};

struct Demonstration {
  std::string scene_ref;
  sim::Scene scene;
  std::vector<DemoSegment> segments;
};

/// Demonstrated action frequencies per predicate state, with optional user
/// overrides. Stored over demonstrated actions only; the epsilon floor over
/// the full action set is applied at lookup time.
struct ActionPrior {
  std::map<std::string, std::map<std::string, double>> by_state;  // state key -> signature -> p
  std::vector<std::pair<std::string, double>> overrides;          // signature -> probability

  /// p_d(a|w) over `signatures`: demonstrated frequencies, epsilon floor on
  /// the rest, renormalized. A state with no demonstrations yields a uniform
  /// prior (and sets `warned`).
  std::vector<double> lookup(const std::string& state_key,
                             const std::vector<std::string>& signatures, double eps,
                             bool* warned = nullptr) const;
};

/// Demo statistics backing surrogate initialization for one action variant.
struct VariantNominal {
  Eigen::MatrixXd mean_weights;  // joints x basis
  double weight_std = 0.5;
  PlanarPose mean_offset;        // manipulation-frame goal in the relevant object's frame
  Eigen::Vector3d offset_std = Eigen::Vector3d::Zero();
  double mean_duration = 2.0;
  std::optional<PlanarPose> mean_grasp_offset;  // held-object pose in EE frame
  int count = 0;
};

struct SkillModel {
  features::FeatureSchema schema;
  std::vector<std::string> param_names;   // schema parameter order
  std::vector<int> constant_roles;        // parameter indices bound to domain constants
  cem::GripperMode gripper = cem::GripperMode::kFree;
  cem::ActionEvent event = cem::ActionEvent::kNone;
  std::string event_object_param;
  std::string event_frame_param;
  density::Gmm gmm{std::vector<density::Gmm::Component>{
      {1.0, density::Gaussian(Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Identity(1, 1))}}};
  std::map<std::string, VariantNominal> variants;  // key: joined constant bindings
  VariantNominal pooled;

  std::string variant_key(const std::vector<std::string>& args) const;
  const VariantNominal& nominal(const std::vector<std::string>& args) const;
};

struct ExpertModel {
  std::map<std::string, SkillModel> skills;
  ActionPrior prior;
  std::vector<std::string> demo_files;  // provenance: training pool, for refits
  std::vector<std::string> augmented_from;
  int augmentation_rounds = 0;

  const SkillModel& skill(const std::string& id) const;
};

// ---------------------------------------------------------------------------
// Scripted demonstrator (stands in for teleoperation).

struct Waypoint {
  std::string ref_object;  // "" = world frame
  PlanarPose pose;         // end-effector (or in-hand object) pose in the ref frame
  bool manip_frame = false;
};

struct ProgramSegment {
  std::string schema;
  std::vector<std::string> args;
  std::string pre_state;
  std::string post_state;
  std::vector<Waypoint> waypoints;
  double duration = 2.0;
  cem::GripperMode gripper = cem::GripperMode::kFree;
  cem::ActionEvent event = cem::ActionEvent::kNone;
  std::string event_object;
  std::string event_frame;
  features::FeatureSchema schema_features;
  std::vector<std::string> feature_objects;
};

using WaypointProgram = std::vector<ProgramSegment>;

/// Execute a waypoint program with minimum-jerk joint interpolation and
/// Gaussian waypoint jitter of std `noise` (meters / half radians).
Demonstration script_demo(const sim::Scene& scene, const WaypointProgram& program, Rng& rng,
                          double noise, double dt = 0.02);

// ---------------------------------------------------------------------------

struct FitConfig {
  int k = 3;                         // GMM components per skill
  double eps = 0.01;                 // prior floor
  std::uint64_t seed = 0;
  double floor = density::kDefaultCovarianceFloor;
  const pddl::Domain* domain = nullptr;
  std::vector<std::pair<std::string, double>> prior_overrides;
  dmp::DmpConfig dmp_cfg;
};

/// Pool feature traces per skill, fit GMMs (weighted EM, uniform weights),
/// fit the action prior from segment counts, and record per-variant demo
/// statistics for surrogate initialization.
ExpertModel fit_expert(const std::vector<Demonstration>& demos, const FitConfig& cfg);

/// Refit with extra demonstrations appended to the training pool.
ExpertModel augment(const ExpertModel& model, const std::vector<Demonstration>& pool,
                    const std::vector<Demonstration>& additions, const FitConfig& cfg);

/// Empirical action frequencies per predicate state (counting formula),
/// plus user overrides.
ActionPrior fit_action_prior(const std::vector<Demonstration>& demos,
                             const std::vector<std::pair<std::string, double>>& overrides = {});

nlohmann::json to_json(const Demonstration& demo);
Demonstration demonstration_from_json(const nlohmann::json& j);
void save_demonstration(const Demonstration& demo, const std::string& path);
Demonstration load_demonstration(const std::string& path);

nlohmann::json to_json(const ExpertModel& model);
ExpertModel model_from_json(const nlohmann::json& j);
void save_model(const ExpertModel& model, const std::string& path);
ExpertModel load_model(const std::string& path);

}  // namespace skillplan::demos
