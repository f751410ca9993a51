#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dkrrt/debris.hpp"
#include "dkrrt/manipulator.hpp"
#include "dkrrt/planner.hpp"

namespace dkrrt {

enum class Method {
  DkRrt,     // learned obstacle models, refit online
  Frozen,    // learned once at the end of warm-up, never refit
  Reactive,  // obstacles assumed to stay at their last observed position
};

std::string method_name(Method m);

/// Independent 64-bit seed for stream `stream` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);
/// Accepts "dk_rrt", "frozen", "reactive"; throws Config otherwise.
Method parse_method(const std::string& s);

/// Online obstacle learner: per obstacle, an affine position model
/// p' = A p + b fitted by EDMD (identity dictionary, constant unit input).
struct LearnerConfig {
  Index window = 200;         // observation samples kept per obstacle
  Index refit_period = 10;    // control cycles between refits
  double tol_rel = 2e-2;      // pseudo-inverse truncation; drops noise-only directions
  Index horizon_steps = 100;  // prediction steps of control_dt
  InflationSchedule inflation;
  double observation_noise = 0.01;  // std of the observed positions [m]

  void validate() const;
};

struct TrackingGains {
  double kp = 2500.0;  // 1/s^2
  double kd = 100.0;   // 1/s
};

struct Scene {
  std::string name = "scene";
  ManipulatorModel robot = ManipulatorModel::default_arm();
  DebrisField field;
  VectorXd start;
  Vec3 goal = Vec3::Zero();
  double goal_tolerance = 0.05;  // m
  double time_limit = 20.0;      // s, including warm-up
  double warmup = 1.0;           // s the robot holds still while observing
  double control_dt = 0.05;
  double sim_dt = 1e-3;
  Index replan_period = 10;      // cycles between periodic replans
  LearnerConfig learner;
  TrackingGains gains;
  PlanQuery planner;  // template: budget, step, bias, resolution (start/goal/seed filled per call)

  void validate() const;
};

struct ExecutionOptions {
  bool timing = true;               // false zeroes wall-clock fields
  bool record_trajectory = false;   // one sample per control cycle
};

struct TrajectorySample {
  double t = 0.0;
  VectorXd q;
  VectorXd qd;
  Vec3 ee = Vec3::Zero();
  std::vector<double> clearance;  // per obstacle, against the true debris
};

struct ExecutionReport {
  bool success = false;
  std::string outcome;           // goal | collision | time_limit
  double execution_error = 0.0;  // mean ||q - q_plan(t)|| [rad]
  double planning_ms = 0.0;
  double training_ms = 0.0;
  double min_clearance = 0.0;    // m, capped at kClearanceCap
  double finish_time = 0.0;      // s
  Index cycles = 0;
  Index plans = 0;               // successful planner calls
  Index failed_plans = 0;
  Index refits = 0;
  bool fallback_used = false;    // some prediction used constant-velocity extrapolation
  std::vector<TrajectorySample> trajectory;
};

inline constexpr double kClearanceCap = 1e3;

/// Observe, maybe refit, predict, maybe replan, then simulate one control cycle
/// under computed-torque PD tracking; stops at the goal, a collision or the time limit.
ExecutionReport execute_with_replanning(const Scene& scene, Method method, std::uint64_t seed,
                                        const ExecutionOptions& options = {});

/// Same loop with zero-prediction obstacles.
ExecutionReport plan_reactive_baseline(const Scene& scene, std::uint64_t seed,
                                       const ExecutionOptions& options = {});

/// "t,q1..qn,qd1..qdn,ee_x,ee_y,ee_z,clear1..clearK" with a schema line.
void write_trajectory_csv(const std::vector<TrajectorySample>& traj, std::ostream& os);

/// Obstacle model fitted on a window of positions; fewer than 3 samples gives nullopt.
std::optional<ObstacleModel> fit_obstacle_model(const std::vector<Vec3>& window, double dt, double tol_rel);

}  // namespace dkrrt
