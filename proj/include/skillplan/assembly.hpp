#pragma once

#include <string>
#include <vector>

#include "skillplan/demos.hpp"
#include "skillplan/pddl.hpp"
#include "skillplan/sim.hpp"

/// Built-in structure-assembly task: a planar arm picks up a bar-shaped
/// "link" piece by one of three faces and mates it onto one of two "node"
/// pieces. Ships as the default domain for the CLI, the demo scripts, and
/// the experiment harness.
namespace skillplan::assembly {

const std::string& domain_text();
const std::string& problem_text();

struct Task {
  pddl::Domain domain;
  pddl::Problem problem;
  pddl::TaskGraph graph;
};

Task make_task();

/// Hand-authored obstacle-free scene used for demos and tests.
sim::Scene canonical_scene();

struct SceneGenOptions {
  int max_obstacles = 2;
  double obstacle_prob = 0.6;  // chance of each candidate obstacle
  bool obstacles_near_faces = true;
  int max_tries = 400;
};

/// Randomized scene with one link and two nodes (plus optional obstacles),
/// rejection-sampled so the arm's home pose is valid and at least one grasp
/// face and one mate target stay feasible.
sim::Scene make_scene(std::uint64_t seed, const SceneGenOptions& opts = {});

/// Waypoint program for one full task execution in `scene`: approach and
/// grasp `face`, then align/place/release onto `node`.
demos::WaypointProgram demo_program(const Task& task, const sim::Scene& scene,
                                    const std::string& face, const std::string& node);

/// Scripted demo corpus: three grasp variants over each training scene.
std::vector<demos::Demonstration> make_demo_suite(const Task& task,
                                                  const std::vector<sim::Scene>& scenes,
                                                  std::uint64_t seed, double noise);

/// Obstacle-free training scenes (canonical plus generated variants).
std::vector<sim::Scene> training_scenes(int count, std::uint64_t seed);

/// Find an edge by signature leaving `state`; -1 when absent.
int find_edge(const pddl::TaskGraph& graph, int state, const std::string& schema,
              const std::vector<std::string>& args);

}  // namespace skillplan::assembly
