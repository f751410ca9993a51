#include "dkrrt/execution.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>

#include "dkrrt/error.hpp"

namespace dkrrt {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

ObstacleModel stationary_model() {
  ObstacleModel m;
  m.op.Gamma = MatrixXd::Identity(3, 3);
  m.op.Delta = MatrixXd::Zero(3, 1);
  m.op.Pi = MatrixXd::Identity(3, 3);
  m.op.dict_id = m.dict.id();
  m.input = VectorXd::Ones(1);
  return m;
}

// does the part of the plan after time t collide under the prediction?
bool remaining_collides(const ManipulatorModel& robot, const std::vector<PlanNode>& plan, double t,
                        const ObstaclePrediction& pred, Index resolution) {
  VectorXd q_prev = path_position(plan, t);
  double t_prev = t;
  for (const auto& node : plan) {
    if (node.t <= t) continue;
    if (node.t > pred.t_end()) break;
    if (edge_collides_conservative(robot, q_prev, t_prev, node.q, node.t, pred, resolution)) return true;
    q_prev = node.q;
    t_prev = node.t;
  }
  // the final configuration is held until the goal is confirmed
  const double hold_end = std::min(pred.t_end(), std::max(t, plan.back().t) + 1.0);
  return hold_end > t_prev && edge_collides_conservative(robot, q_prev, t_prev, q_prev, hold_end, pred, resolution);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  // splitmix64 over the pair
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(base) ^ stream);
}

std::string method_name(Method m) {
  switch (m) {
    case Method::DkRrt: return "dk_rrt";
    case Method::Frozen: return "frozen";
    case Method::Reactive: return "reactive";
  }
  return "unknown";
}

Method parse_method(const std::string& s) {
  if (s == "dk_rrt") return Method::DkRrt;
  if (s == "frozen") return Method::Frozen;
  if (s == "reactive") return Method::Reactive;
  throw Error(ErrorKind::Config, "unknown method '" + s + "' (expected dk_rrt, frozen or reactive)");
}

void LearnerConfig::validate() const {
  require(window >= 3, ErrorKind::Config, "learner window must be >= 3");
  require(refit_period >= 1, ErrorKind::Config, "refit period must be >= 1");
  require(tol_rel > 0.0 && tol_rel < 1.0, ErrorKind::Config, "learner tol_rel must lie in (0, 1)");
  require(horizon_steps >= 2, ErrorKind::Config, "prediction horizon must be >= 2 steps");
  require(inflation.c0 >= 0.0 && inflation.c1 >= 0.0, ErrorKind::Config, "inflation must be non-negative");
  require(observation_noise >= 0.0, ErrorKind::Config, "observation noise must be non-negative");
}

void Scene::validate() const {
  robot.validate();
  field.validate();
  learner.validate();
  require(start.size() == robot.dof(), ErrorKind::Config, "start must have one entry per joint");
  require(goal_tolerance > 0.0, ErrorKind::Config, "goal tolerance must be positive");
  require(time_limit >= 0.0 && warmup >= 0.0, ErrorKind::Config, "time limit and warm-up must be >= 0");
  require(sim_dt > 0.0 && control_dt >= sim_dt, ErrorKind::Config, "need 0 < sim_dt <= control_dt");
  const double ratio = control_dt / sim_dt;
  require(std::abs(ratio - std::round(ratio)) < 1e-9 * ratio, ErrorKind::Config,
          "control_dt must be a multiple of sim_dt");
  require(replan_period >= 1, ErrorKind::Config, "replan period must be >= 1");
  require(gains.kp > 0.0 && gains.kd > 0.0, ErrorKind::Config, "tracking gains must be positive");
}

std::optional<ObstacleModel> fit_obstacle_model(const std::vector<Vec3>& window, double dt, double tol_rel) {
  if (window.size() < 3) return std::nullopt;
  std::vector<VectorXd> xs(window.begin(), window.end());
  const std::vector<VectorXd> us(xs.size() - 1, VectorXd::Ones(1));
  const Trajectory traj = Trajectory::from_vectors(xs, us, dt);
  ObstacleModel m;
  m.dict = Dictionary::identity(3);
  m.op = fit_edmd(build_snapshots(std::span(&traj, 1)), m.dict, FitOptions{tol_rel, 0.0});
  m.input = VectorXd::Ones(1);
  return m;
}

ExecutionReport execute_with_replanning(const Scene& scene, Method method, std::uint64_t seed,
                                        const ExecutionOptions& options) {
  scene.validate();
  const auto& robot = scene.robot;
  const Index n = robot.dof();
  const std::size_t k_obs = scene.field.obstacles.size();
  const auto& lc = scene.learner;

  ExecutionReport rep;
  rep.min_clearance = kClearanceCap;
  rep.outcome = "time_limit";
  if (scene.time_limit <= 0.0) return rep;

  std::mt19937_64 rng(derive_seed(seed, 0));
  std::normal_distribution<double> noise(0.0, 1.0);

  VectorXd q = scene.start, qd = VectorXd::Zero(n);
  std::vector<std::deque<Vec3>> windows(k_obs);
  std::vector<std::optional<ObstacleModel>> models(k_obs);
  Index version = 0;
  bool frozen_fitted = false;
  std::vector<PlanNode> plan{{scene.start, 0.0, -1}};
  bool holding = true;  // no committed path to the goal
  Index last_plan_cycle = 0;

  const auto cycles = static_cast<Index>(std::ceil(scene.time_limit / scene.control_dt - 1e-9));
  const auto substeps = static_cast<Index>(std::llround(scene.control_dt / scene.sim_dt));
  double err_sum = 0.0;
  Index err_count = 0;
  Index sim_step = 0;

  auto refit_all = [&] {
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < k_obs; ++i)
      models[i] = fit_obstacle_model({windows[i].begin(), windows[i].end()}, scene.control_dt, lc.tol_rel);
    ++version;
    ++rep.refits;
    rep.training_ms += ms_since(t0);
  };

  auto record = [&](double t) {
    if (!options.record_trajectory) return;
    TrajectorySample s{t, q, qd, end_effector(robot, q), {}};
    const auto segs = link_segments(robot, q);
    for (const auto& sp : debris_positions(scene.field, t)) {
      double best = kClearanceCap;
      for (const auto& seg : segs)
        best = std::min(best, capsule_sphere_distance(seg.a, seg.b, robot.capsule_radius, sp));
      s.clearance.push_back(best);
    }
    rep.trajectory.push_back(std::move(s));
  };

  auto finish = [&](const std::string& outcome, double t) {
    record(t);
    rep.outcome = outcome;
    rep.success = outcome == "goal";
    rep.finish_time = t;
    rep.execution_error = err_count > 0 ? err_sum / static_cast<double>(err_count) : 0.0;
    if (!options.timing) rep.planning_ms = rep.training_ms = 0.0;
    return rep;
  };

  for (Index c = 0; c < cycles; ++c) {
    const double t = static_cast<double>(c) * scene.control_dt;
    rep.cycles = c + 1;
    const auto truth = debris_positions(scene.field, t);

    for (std::size_t i = 0; i < k_obs; ++i) {
      Vec3 obs = truth[i].center;
      for (int j = 0; j < 3; ++j) obs(j) += lc.observation_noise * noise(rng);
      windows[i].push_back(obs);
      while (static_cast<Index>(windows[i].size()) > lc.window) windows[i].pop_front();
    }

    record(t);

    const bool warm = t + 1e-9 >= scene.warmup;
    if (method == Method::DkRrt && c % lc.refit_period == 0) refit_all();
    if (method == Method::Frozen && warm && !frozen_fitted) {
      refit_all();
      frozen_fitted = true;
    }

    if (warm && k_obs > 0) {
      std::vector<ObstacleTrack> tracks;
      std::vector<ObstacleModel> use;
      for (std::size_t i = 0; i < k_obs; ++i) {
        const auto& w = windows[i];
        const std::size_t lag = std::min<std::size_t>(5, w.size() - 1);
        Vec3 vel = Vec3::Zero();
        if (lag > 0) vel = (w.back() - w[w.size() - 1 - lag]) / (static_cast<double>(lag) * scene.control_dt);
        tracks.push_back({VectorXd(w.back()), vel, scene.field.obstacles[i].radius});
        use.push_back(method != Method::Reactive && models[i] ? *models[i] : stationary_model());
      }
      const auto pred =
          predict_obstacles(use, tracks, lc.horizon_steps, lc.inflation, t, scene.control_dt, version);
      rep.fallback_used = rep.fallback_used || pred.fallback;

      const bool blocked = !holding && remaining_collides(robot, plan, t, pred, scene.planner.resolution);
      const bool refresh = c - last_plan_cycle >= scene.replan_period;
      if (holding || blocked || refresh) {
        PlanQuery query = scene.planner;
        query.start = q.cwiseMax(robot.q_min()).cwiseMin(robot.q_max());
        query.t_start = t;
        query.goal = scene.goal;
        query.goal_tolerance = scene.goal_tolerance;
        query.seed = derive_seed(seed, static_cast<std::uint64_t>(c) + 1);
        const auto t0 = Clock::now();
        const auto res = plan_rrt(query, pred, robot);
        rep.planning_ms += ms_since(t0);
        last_plan_cycle = c;
        if (res.success) {
          ++rep.plans;
          // a routine refresh only switches to a path that arrives sooner
          if (holding || blocked || res.path.back().t < plan.back().t) plan = res.path;
          holding = false;
        } else {
          ++rep.failed_plans;
          if (holding || blocked) {
            auto escape = escape_branch(res, query, pred, robot);
            if (escape.empty()) escape.assign(1, {q, t, -1});
            plan = std::move(escape);
            holding = true;
          }
        }
      }
    } else if (warm && holding) {
      // nothing to avoid: plan once against an empty prediction
      PlanQuery query = scene.planner;
      query.start = q.cwiseMax(robot.q_min()).cwiseMin(robot.q_max());
      query.t_start = t;
      query.goal = scene.goal;
      query.goal_tolerance = scene.goal_tolerance;
      query.seed = derive_seed(seed, static_cast<std::uint64_t>(c) + 1);
      const auto pred = ObstaclePrediction::frozen({}, t, scene.control_dt, lc.horizon_steps);
      const auto t0 = Clock::now();
      const auto res = plan_rrt(query, pred, robot);
      rep.planning_ms += ms_since(t0);
      if (res.success) {
        plan = res.path;
        holding = false;
        last_plan_cycle = c;
        ++rep.plans;
      } else {
        ++rep.failed_plans;
      }
    }

    for (Index s = 0; s < substeps; ++s, ++sim_step) {
      const double ts = t + static_cast<double>(s) * scene.sim_dt;
      const VectorXd q_ref = path_position(plan, ts);
      const VectorXd qd_ref = path_velocity(plan, ts);
      const VectorXd a = scene.gains.kp * (q_ref - q) + scene.gains.kd * (qd_ref - qd);
      const VectorXd tau = mass_matrix(robot, q) * a + bias_torque(robot, q, qd);
      VectorXd x(2 * n);
      x << q, qd;
      auto f = [&](double, const VectorXd& xs) {
        VectorXd dx(2 * n);
        dx << xs.tail(n), forward_dynamics(robot, xs.head(n), xs.tail(n), tau);
        return dx;
      };
      x = rk4_step(f, ts, x, scene.sim_dt);
      if (!x.allFinite() || x.norm() > Rk4Options{}.divergence_bound)
        throw StepError(ErrorKind::Divergence, static_cast<long>(sim_step), "robot simulation diverged");
      q = x.head(n);
      qd = x.tail(n);
      const double t_next = ts + scene.sim_dt;

      if (t_next > scene.warmup) {
        err_sum += (q - path_position(plan, t_next)).norm();
        ++err_count;
      }
      if (k_obs > 0) {
        const double clear = arm_clearance(robot, q, debris_positions(scene.field, t_next));
        rep.min_clearance = std::min(rep.min_clearance, clear);
        if (clear < 0.0) return finish("collision", t_next);
      }
      if ((end_effector(robot, q) - scene.goal).norm() <= scene.goal_tolerance) return finish("goal", t_next);
    }
  }
  return finish("time_limit", static_cast<double>(cycles) * scene.control_dt);
}

ExecutionReport plan_reactive_baseline(const Scene& scene, std::uint64_t seed, const ExecutionOptions& options) {
  return execute_with_replanning(scene, Method::Reactive, seed, options);
}

void write_trajectory_csv(const std::vector<TrajectorySample>& traj, std::ostream& os) {
  const Index n = traj.empty() ? 0 : traj.front().q.size();
  const std::size_t k = traj.empty() ? 0 : traj.front().clearance.size();
  os << "# schema: trajectory/v1\nt";
  for (Index j = 1; j <= n; ++j) os << ",q" << j;
  for (Index j = 1; j <= n; ++j) os << ",qd" << j;
  os << ",ee_x,ee_y,ee_z";
  for (std::size_t i = 1; i <= k; ++i) os << ",clear" << i;
  os << '\n';
  os << std::fixed << std::setprecision(9);
  for (const auto& s : traj) {
    os << s.t;
    for (Index j = 0; j < n; ++j) os << ',' << s.q(j);
    for (Index j = 0; j < n; ++j) os << ',' << s.qd(j);
    os << ',' << s.ee.x() << ',' << s.ee.y() << ',' << s.ee.z();
    for (double c : s.clearance) os << ',' << c;
    os << '\n';
  }
}

}  // namespace dkrrt
