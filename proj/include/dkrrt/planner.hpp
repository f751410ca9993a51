#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dkrrt/debris.hpp"
#include "dkrrt/koopman.hpp"
#include "dkrrt/manipulator.hpp"

namespace dkrrt {

/// Extra collision radius at prediction step k: c0 + c1 * k * dt.
struct InflationSchedule {
  double c0 = 0.02;  // m
  double c1 = 0.05;  // m/s

  double at(Index k, double dt) const { return c0 + c1 * static_cast<double>(k) * dt; }
};

/**
 * Predicted obstacle spheres on a uniform time grid starting at t0. Step 0 is
 * the current estimate. Queries between grid points interpolate linearly.
 */
struct ObstaclePrediction {
  double t0 = 0.0;
  double dt = 0.05;
  std::vector<std::vector<Sphere>> steps;  // [step][obstacle], radii already inflated
  Index source_version = 0;
  bool fallback = false;  // some obstacle used constant-velocity extrapolation

  Index horizon() const { return static_cast<Index>(steps.size()); }
  Index obstacle_count() const { return steps.empty() ? 0 : static_cast<Index>(steps.front().size()); }
  double t_end() const { return t0 + dt * static_cast<double>(std::max<Index>(0, horizon() - 1)); }
  /// Throws HorizonExceeded outside [t0, t_end].
  std::vector<Sphere> at(double t) const;

  /// Largest center speed and radius growth rate over the horizon.
  double max_center_speed() const;
  double max_radius_rate() const;

  /// Spheres held fixed for `steps` grid points, inflated by the schedule.
  static ObstaclePrediction frozen(const std::vector<Sphere>& spheres, double t0, double dt, Index steps,
                                   const InflationSchedule& inflation = {});
  /// Exact future positions of a scripted field (no inflation unless given).
  static ObstaclePrediction from_field(const DebrisField& field, double t0, double dt, Index steps,
                                       const InflationSchedule& inflation = {0.0, 0.0});
};

/// Learned motion model for one obstacle: the first three state coordinates are its position.
struct ObstacleModel {
  LiftedOperator op;
  Dictionary dict = Dictionary::identity(3);
  VectorXd input;  // constant input applied every step (e.g. [1] for an affine bias)
};

struct ObstacleTrack {
  VectorXd state;  // current state estimate, leading entries are the position
  Vec3 velocity = Vec3::Zero();  // finite-difference estimate for the fallback
  double radius = 0.1;
};

/// Rolls each obstacle forward with its model; radius at step k = radius + inflation(k).
/// A diverging rollout falls back to constant-velocity extrapolation and sets the flag.
ObstaclePrediction predict_obstacles(const std::vector<ObstacleModel>& models,
                                     const std::vector<ObstacleTrack>& current, Index horizon_steps,
                                     const InflationSchedule& inflation, double t0, double dt,
                                     Index version = 0);

/// Signed surface distance between a capsule (segment a-b, radius r) and a sphere.
double capsule_sphere_distance(const Vec3& a, const Vec3& b, double r, const Sphere& s);

/// Smallest capsule-to-sphere clearance of the arm at configuration q.
double arm_clearance(const ManipulatorModel& model, const VectorXd& q, const std::vector<Sphere>& spheres);

/// Samples the straight edge at `resolution` points (both ends included when resolution >= 2,
/// only q_b when resolution == 1) and tests each against the interpolated prediction.
bool edge_collides(const ManipulatorModel& model, const VectorXd& q_a, double t_a, const VectorXd& q_b,
                   double t_b, const ObstaclePrediction& pred, Index resolution);

/**
 * Sampled check with a clearance margin covering the worst-case motion of any
 * arm point and obstacle between neighbouring samples, so a false result also
 * holds for every intermediate time.
 */
bool edge_collides_conservative(const ManipulatorModel& model, const VectorXd& q_a, double t_a,
                                const VectorXd& q_b, double t_b, const ObstaclePrediction& pred,
                                Index resolution);

struct PlanQuery {
  VectorXd start;
  double t_start = 0.0;
  Vec3 goal = Vec3::Zero();     // end-effector target [m]
  double goal_tolerance = 0.05;  // m
  Index max_nodes = 5000;
  double step_size = 0.2;        // rad
  double goal_bias = 0.05;
  double wait_probability = 0.1;  // chance of extending by holding still
  double min_speed_fraction = 0.3;
  Index resolution = 10;          // samples per edge
  std::uint64_t seed = 0;

  void validate(const ManipulatorModel& model) const;
};

struct PlanNode {
  VectorXd q;
  double t = 0.0;
  Index parent = -1;
};

struct PlanResult {
  bool success = false;
  std::vector<PlanNode> path;  // root to goal
  std::vector<PlanNode> tree;
  Index iterations = 0;
  std::string reason;  // empty on success

  Index tree_size() const { return static_cast<Index>(tree.size()); }
};

/// Time-augmented RRT against predicted obstacles.
PlanResult plan_rrt(const PlanQuery& query, const ObstaclePrediction& pred, const ManipulatorModel& model);

/// Root-to-node path through the tree.
std::vector<PlanNode> tree_branch(const std::vector<PlanNode>& tree, Index leaf);

/**
 * Evasive fallback after a failed query: the tree node from which holding still
 * stays collision-free until the end of the prediction (closest to the goal),
 * otherwise the latest-arriving node. Returns the branch to it.
 */
std::vector<PlanNode> escape_branch(const PlanResult& failed, const PlanQuery& query,
                                    const ObstaclePrediction& pred, const ManipulatorModel& model,
                                    Index candidates = 20);

/// Damped least-squares position IK from a seed; nullopt if it does not converge.
std::optional<VectorXd> solve_position_ik(const ManipulatorModel& model, const Vec3& target,
                                          const VectorXd& seed, double tolerance, int iterations = 200);

/// Piecewise-linear reference along a path, held at the ends.
VectorXd path_position(const std::vector<PlanNode>& path, double t);
VectorXd path_velocity(const std::vector<PlanNode>& path, double t);

}  // namespace dkrrt
