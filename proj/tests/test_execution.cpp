#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "dkrrt/error.hpp"
#include "dkrrt/execution.hpp"

using namespace dkrrt;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

Scene reach_scene() {
  Scene s;
  s.name = "reach";
  s.start = vec({0.0, 0.4, -0.9, 0.0, 0.5, 0.0});
  s.goal = end_effector(s.robot, vec({1.4, 0.3, -0.6, 0.0, 0.3, 0.0}));
  s.time_limit = 10.0;
  s.warmup = 0.5;
  s.planner.max_nodes = 1500;
  return s;
}

}  // namespace

TEST_CASE("empty debris field reaches the goal with small tracking error") {
  const Scene s = reach_scene();
  for (Method m : {Method::DkRrt, Method::Frozen, Method::Reactive}) {
    const auto r = execute_with_replanning(s, m, 3);
    CHECK(r.success);
    CHECK(r.outcome == "goal");
    MESSAGE(method_name(m) << " execution error " << r.execution_error << " at t " << r.finish_time);
    CHECK(r.execution_error < 1e-2);
    CHECK(r.min_clearance == kClearanceCap);
    CHECK(r.finish_time < s.time_limit);
  }
  CHECK(plan_reactive_baseline(s, 3).success);
}

TEST_CASE("zero time limit runs no cycles") {
  Scene s = reach_scene();
  s.time_limit = 0.0;
  const auto r = execute_with_replanning(s, Method::DkRrt, 0);
  CHECK_FALSE(r.success);
  CHECK(r.cycles == 0);
  CHECK(r.outcome == "time_limit");
  CHECK(r.plans == 0);
}

TEST_CASE("identical seeds give identical reports") {
  Scene s = reach_scene();
  s.field.obstacles.push_back({0.1, BallisticMotion{Vec3(0.6, 1.2, 0.3), Vec3(0.0, -0.2, 0.0)}});
  const ExecutionOptions opts{false, true};
  const auto a = execute_with_replanning(s, Method::DkRrt, 5, opts);
  const auto b = execute_with_replanning(s, Method::DkRrt, 5, opts);
  CHECK(a.outcome == b.outcome);
  CHECK(a.execution_error == b.execution_error);
  CHECK(a.min_clearance == b.min_clearance);
  CHECK(a.planning_ms == 0.0);
  CHECK(a.training_ms == 0.0);
  std::ostringstream ta, tb;
  write_trajectory_csv(a.trajectory, ta);
  write_trajectory_csv(b.trajectory, tb);
  CHECK(ta.str() == tb.str());
  CHECK(a.refits > 0);
}

TEST_CASE("frozen ablation fits once, online learner keeps refitting") {
  Scene s = reach_scene();
  s.field.obstacles.push_back({0.1, BallisticMotion{Vec3(1.5, -1.0, 1.2), Vec3(0.0, 0.1, 0.0)}});
  const auto frozen = execute_with_replanning(s, Method::Frozen, 1);
  const auto dk = execute_with_replanning(s, Method::DkRrt, 1);
  const auto reactive = execute_with_replanning(s, Method::Reactive, 1);
  CHECK(frozen.refits == 1);
  CHECK(reactive.refits == 0);
  CHECK(dk.refits == (dk.cycles + s.learner.refit_period - 1) / s.learner.refit_period);
}

TEST_CASE("obstacle model fit recovers ballistic motion") {
  const Vec3 p0(0.3, -0.2, 0.5), v(0.4, 0.1, -0.2);
  const double dt = 0.05;
  std::vector<Vec3> w;
  for (int k = 0; k < 40; ++k) w.push_back(p0 + v * (k * dt));
  const auto m = fit_obstacle_model(w, dt, 1e-10);
  REQUIRE(m.has_value());
  // samples on one line do not pin down the operator, only its action along the line
  const auto p = predict_obstacles({*m}, {{VectorXd(w.back()), Vec3::Zero(), 0.1}}, 20, {0.0, 0.0}, 0.0, dt);
  for (Index k = 0; k < 20; ++k)
    CHECK((p.steps[static_cast<std::size_t>(k)][0].center - (w.back() + v * (k * dt))).norm() < 1e-9);
  CHECK_FALSE(fit_obstacle_model({p0, p0 + v * dt}, dt, 1e-10).has_value());
}

TEST_CASE("noise-only directions are truncated for a parked obstacle") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.01);
  const Vec3 c(0.6, 0.4, 0.3);
  std::vector<Vec3> w;
  for (int k = 0; k < 200; ++k) w.push_back(c + Vec3(n(rng), n(rng), n(rng)));
  const auto m = fit_obstacle_model(w, 0.05, 2e-2);
  REQUIRE(m.has_value());
  CHECK(m->op.rank_deficient);
  const auto p = predict_obstacles({*m}, {{VectorXd(w.back()), Vec3::Zero(), 0.1}}, 100, {}, 0.0, 0.05);
  // the prediction settles near the mean instead of wandering
  CHECK((p.steps.back()[0].center - c).norm() < 0.03);
}

TEST_CASE("method names round-trip") {
  for (Method m : {Method::DkRrt, Method::Frozen, Method::Reactive}) CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("rrt_star"), Error);
}

TEST_CASE("invalid scenes are rejected") {
  Scene s = reach_scene();
  s.sim_dt = 0.003;
  CHECK_THROWS_AS(execute_with_replanning(s, Method::DkRrt, 0), Error);
  s = reach_scene();
  s.start = vec({0.0, 0.0});
  CHECK_THROWS_AS(execute_with_replanning(s, Method::DkRrt, 0), Error);
  s = reach_scene();
  s.learner.window = 2;
  CHECK_THROWS_AS(execute_with_replanning(s, Method::DkRrt, 0), Error);
}

TEST_CASE("simulator divergence propagates") {
  Scene s = reach_scene();
  s.sim_dt = 0.05;  // one integration step per cycle against a very stiff loop
  s.gains.kp = 1e6;
  s.gains.kd = 2e3;
  try {
    (void)execute_with_replanning(s, Method::DkRrt, 0);
    FAIL("expected divergence");
  } catch (const StepError& e) {
    CHECK(e.kind() == ErrorKind::Divergence);
  }
}

TEST_CASE("trajectory CSV layout") {
  TrajectorySample s{0.5, vec({0.1, 0.2}), vec({0.0, -1.0}), Vec3(1, 2, 3), {0.25}};
  std::ostringstream os;
  write_trajectory_csv({s}, os);
  CHECK(os.str() ==
        "# schema: trajectory/v1\n"
        "t,q1,q2,qd1,qd2,ee_x,ee_y,ee_z,clear1\n"
        "0.500000000,0.100000000,0.200000000,0.000000000,-1.000000000,1.000000000,2.000000000,3.000000000,"
        "0.250000000\n");
}

TEST_CASE("derived seeds separate streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(7, 3) == derive_seed(7, 3));
}
