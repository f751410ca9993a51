#include <doctest.h>

#include <cmath>
#include <random>

#include "dkrrt/error.hpp"
#include "dkrrt/planner.hpp"

using namespace dkrrt;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

// independent dense check: brute-force segment sampling, no shared helper
double dense_point_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  double best = (p - a).norm();
  for (int i = 1; i <= 200; ++i) best = std::min(best, (p - (a + (b - a) * (i / 200.0))).norm());
  return best;
}

bool dense_collides(const ManipulatorModel& m, const VectorXd& qa, double ta, const VectorXd& qb, double tb,
                    const ObstaclePrediction& pred, int samples) {
  for (int i = 0; i <= samples; ++i) {
    const double s = static_cast<double>(i) / samples;
    const VectorXd q = qa + s * (qb - qa);
    const auto spheres = pred.at(ta + s * (tb - ta));
    const auto frames = forward_kinematics(m, q);
    for (std::size_t l = 0; l + 1 < frames.size(); ++l)
      for (const auto& sp : spheres)
        if (dense_point_segment(sp.center, frames[l].block<3, 1>(0, 3), frames[l + 1].block<3, 1>(0, 3)) <
            sp.radius + m.capsule_radius - 1e-9)
          return true;
  }
  return false;
}

ObstacleModel fitted_model(const std::vector<Vec3>& ps, double dt, const Dictionary& dict, bool bias) {
  std::vector<VectorXd> xs(ps.begin(), ps.end());
  std::vector<VectorXd> us;
  if (bias) us.assign(xs.size() - 1, vec({1.0}));
  const Trajectory t = Trajectory::from_vectors(xs, us, dt);
  ObstacleModel m;
  m.dict = dict;
  m.op = fit_edmd(build_snapshots(std::span(&t, 1)), dict);
  if (bias) m.input = vec({1.0});
  return m;
}

const VectorXd kStart = vec({0.0, 0.4, -0.9, 0.0, 0.5, 0.0});
const VectorXd kGoalQ = vec({1.4, 0.3, -0.6, 0.0, 0.3, 0.0});

}  // namespace

TEST_CASE("predict_obstacles examples") {
  const double dt = 0.05;
  SUBCASE("stationary obstacle keeps its center") {
    ObstacleModel m;
    m.op.Gamma = MatrixXd::Identity(3, 3);
    m.op.Delta = MatrixXd::Zero(3, 0);
    m.op.Pi = MatrixXd::Identity(3, 3);
    m.op.dict_id = m.dict.id();
    const auto p = predict_obstacles({m}, {{vec({0.3, -0.2, 0.5}), Vec3::Zero(), 0.1}}, 40, {}, 0.0, dt);
    REQUIRE(p.horizon() == 40);
    for (const auto& s : p.steps) CHECK((s[0].center - Vec3(0.3, -0.2, 0.5)).norm() == 0.0);
    CHECK_FALSE(p.fallback);
  }
  SUBCASE("ballistic obstacle with the identity dictionary stays on the line") {
    const Vec3 p0(1.0, -0.5, 0.2), v0(-0.3, 0.2, 0.1);
    std::vector<Vec3> ps;
    for (int k = 0; k < 60; ++k) ps.push_back(p0 + v0 * (k * dt));
    const auto m = fitted_model(ps, dt, Dictionary::identity(3), true);
    const double t0 = 3.0;
    const auto p = predict_obstacles({m}, {{p0 + v0 * t0, v0, 0.1}}, 80, {}, t0, dt);
    double worst = 0.0;
    for (Index k = 0; k < p.horizon(); ++k)
      worst = std::max(worst, (p.steps[static_cast<std::size_t>(k)][0].center - (p0 + v0 * (t0 + k * dt))).norm());
    MESSAGE("ballistic error " << worst);
    CHECK(worst < 1e-8);
  }
  SUBCASE("circular obstacle with a Fourier dictionary") {
    const CircularMotion c{Vec3(0.2, 0.1, 0.6), 0.5, 0.8, 0.3};
    std::vector<Vec3> ps;
    for (int k = 0; k < 200; ++k) ps.push_back(motion_position(c, k * dt));
    MatrixXd samples(3, 200);
    for (int k = 0; k < 200; ++k) samples.col(k) = ps[static_cast<std::size_t>(k)];
    const auto m = fitted_model(ps, dt, fit_fourier_dictionary(samples), false);
    const double t0 = 4.1;
    const auto p = predict_obstacles({m}, {{motion_position(c, t0), Vec3::Zero(), 0.1}}, 51, {}, t0, dt);
    double worst = 0.0;
    for (Index k = 0; k < p.horizon(); ++k)
      worst = std::max(worst, (p.steps[static_cast<std::size_t>(k)][0].center - motion_position(c, t0 + k * dt)).norm());
    MESSAGE("circle error " << worst);
    CHECK(worst < 1e-2);
  }
  SUBCASE("inflation is monotone and never below the physical radius") {
    ObstacleModel m;
    m.op.Gamma = MatrixXd::Identity(3, 3);
    m.op.Delta = MatrixXd::Zero(3, 0);
    m.op.Pi = MatrixXd::Identity(3, 3);
    m.op.dict_id = m.dict.id();
    const auto p = predict_obstacles({m, m}, {{vec({0, 0, 0}), Vec3::Zero(), 0.1}, {vec({1, 0, 0}), Vec3::Zero(), 0.3}},
                                     30, {0.02, 0.05}, 0.0, dt);
    for (std::size_t k = 0; k < p.steps.size(); ++k) {
      CHECK(p.steps[k][0].radius >= 0.1);
      CHECK(p.steps[k][1].radius >= 0.3);
      CHECK(std::abs(p.steps[k][0].radius - (0.1 + 0.02 + 0.05 * k * dt)) < 1e-12);
      if (k > 0) CHECK(p.steps[k][1].radius >= p.steps[k - 1][1].radius);
    }
  }
  SUBCASE("divergent model falls back to constant velocity") {
    ObstacleModel m;
    m.op.Gamma = 1e3 * MatrixXd::Identity(3, 3);
    m.op.Delta = MatrixXd::Zero(3, 0);
    m.op.Pi = MatrixXd::Identity(3, 3);
    m.op.dict_id = m.dict.id();
    const Vec3 v(0.1, 0.0, -0.2);
    const auto p = predict_obstacles({m}, {{vec({0.5, 0.5, 0.5}), v, 0.1}}, 20, {}, 1.0, dt);
    CHECK(p.fallback);
    CHECK((p.steps.back()[0].center - (Vec3(0.5, 0.5, 0.5) + v * (19 * dt))).norm() < 1e-12);
  }
  SUBCASE("bad input") {
    ObstacleModel m;
    CHECK_THROWS_AS(predict_obstacles({m}, {}, 10, {}, 0.0, dt), Error);
    CHECK_THROWS_AS(predict_obstacles({}, {}, 0, {}, 0.0, dt), Error);
  }
}

TEST_CASE("prediction interpolation and horizon") {
  ObstaclePrediction p = ObstaclePrediction::frozen({{Vec3(0, 0, 0), 0.1}}, 2.0, 0.1, 11, {0.0, 0.0});
  p.steps[10][0].center = Vec3(1, 0, 0);
  p.steps[9][0].center = Vec3(1, 0, 0);
  CHECK(p.t_end() == doctest::Approx(3.0));
  CHECK(p.at(2.95)[0].center.x() == doctest::Approx(1.0));
  CHECK(p.at(2.85)[0].center.x() == doctest::Approx(0.5));
  CHECK_THROWS_AS(p.at(3.1), Error);
  CHECK_THROWS_AS(p.at(1.9), Error);
  try {
    (void)p.at(5.0);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::HorizonExceeded);
  }
}

TEST_CASE("capsule-sphere distance examples") {
  const Vec3 a(0, 0, 0), b(1, 0, 0);
  CHECK(capsule_sphere_distance(a, b, 0.05, {Vec3(0.5, 1.0, 0), 0.1}) == doctest::Approx(0.85));
  CHECK(capsule_sphere_distance(a, b, 0.05, {Vec3(2.0, 0, 0), 0.1}) == doctest::Approx(0.85));
  CHECK(capsule_sphere_distance(a, b, 0.05, {Vec3(0.5, 0, 0), 0.1}) == doctest::Approx(-0.15));
  CHECK(capsule_sphere_distance(a, a, 0.05, {Vec3(0, 0, 1), 0.1}) == doctest::Approx(0.85));
}

TEST_CASE("edge_collides examples") {
  const auto m = ManipulatorModel::default_arm();
  SUBCASE("no obstacles") {
    const auto p = ObstaclePrediction::frozen({}, 0.0, 0.05, 100);
    CHECK_FALSE(edge_collides(m, kStart, 0.0, kGoalQ, 2.0, p, 10));
  }
  SUBCASE("sphere enclosing the workspace") {
    const auto p = ObstaclePrediction::frozen({{Vec3::Zero(), 5.0}}, 0.0, 0.05, 100);
    CHECK(edge_collides(m, kStart, 0.0, kGoalQ, 2.0, p, 1));
  }
  SUBCASE("horizon exceeded") {
    const auto p = ObstaclePrediction::frozen({}, 0.0, 0.05, 10);
    try {
      (void)edge_collides(m, kStart, 0.0, kGoalQ, 2.0, p, 10);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::HorizonExceeded);
    }
  }
  SUBCASE("grazing obstacle slips between coarse samples") {
    // base yaw sweep of 1.2 rad; small sphere parked on the tip's path at mid-sweep
    VectorXd qa = kStart, qb = kStart;
    qa(0) = -0.6;
    qb(0) = 0.6;
    VectorXd qm = kStart;
    qm(0) = 0.0;
    const Vec3 tip = end_effector(m, qm);
    const auto p = ObstaclePrediction::frozen({{tip, 0.04}}, 0.0, 0.05, 100, {0.0, 0.0});
    REQUIRE(dense_collides(m, qa, 0.0, qb, 1.0, p, 10000));
    CHECK_FALSE(edge_collides(m, qa, 0.0, qb, 1.0, p, 2));
    CHECK(edge_collides(m, qa, 0.0, qb, 1.0, p, 50));
  }
  SUBCASE("bad input") {
    const auto p = ObstaclePrediction::frozen({}, 0.0, 0.05, 100);
    CHECK_THROWS_AS(edge_collides(m, kStart, 0.0, kGoalQ, 1.0, p, 0), Error);
    CHECK_THROWS_AS(edge_collides(m, kStart, 1.0, kGoalQ, 0.5, p, 5), Error);
    CHECK_THROWS_AS(edge_collides(m, vec({0, 0}), 0.0, kGoalQ, 1.0, p, 5), Error);
  }
}

TEST_CASE("conservative edge check agrees with a dense oracle") {
  const auto m = ManipulatorModel::default_arm();
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int free = 0, caught = 0;
  for (int trial = 0; trial < 150; ++trial) {
    DebrisField f;
    for (int i = 0; i < 3; ++i)
      f.obstacles.push_back({0.1 + 0.05 * (u(rng) + 1.0),
                             BallisticMotion{Vec3(0.8 * u(rng), 0.8 * u(rng), 0.5 + 0.5 * u(rng)),
                                             Vec3(0.4 * u(rng), 0.4 * u(rng), 0.4 * u(rng))}});
    const auto pred = ObstaclePrediction::from_field(f, 0.0, 0.05, 60);
    VectorXd qa(6), qb(6);
    for (Index j = 0; j < 6; ++j) {
      qa(j) = 2.0 * u(rng);
      qb(j) = qa(j) + 0.2 * u(rng);
    }
    const double ta = 0.5 + u(rng) * 0.4, tb = ta + 0.3 + 0.1 * u(rng);
    if (!edge_collides_conservative(m, qa, ta, qb, tb, pred, 10)) {
      ++free;
      CHECK_FALSE(dense_collides(m, qa, ta, qb, tb, pred, 2000));
    } else {
      ++caught;
    }
  }
  MESSAGE("free " << free << " rejected " << caught);
  CHECK(free > 20);
}

TEST_CASE("inverse kinematics reaches a reachable point") {
  const auto m = ManipulatorModel::default_arm();
  const Vec3 target = end_effector(m, kGoalQ);
  const auto q = solve_position_ik(m, target, kStart, 1e-4);
  REQUIRE(q.has_value());
  CHECK((end_effector(m, *q) - target).norm() < 1e-4);
  CHECK_FALSE(solve_position_ik(m, Vec3(5, 5, 5), kStart, 1e-4).has_value());
}

TEST_CASE("plan_rrt examples") {
  const auto m = ManipulatorModel::default_arm();
  const Vec3 goal = end_effector(m, kGoalQ);
  PlanQuery q;
  q.start = kStart;
  q.goal = goal;
  q.goal_tolerance = 0.05;

  SUBCASE("already at the goal") {
    const auto pred = ObstaclePrediction::frozen({}, 0.0, 0.05, 10);
    PlanQuery q1 = q;
    q1.goal = end_effector(m, kStart);
    const auto r = plan_rrt(q1, pred, m);
    REQUIRE(r.success);
    CHECK(r.path.size() == 1);
  }
  SUBCASE("static obstacle between start and goal") {
    const Vec3 mid = end_effector(m, 0.5 * (kStart + kGoalQ));
    const auto pred = ObstaclePrediction::frozen({{mid, 0.12}}, 0.0, 0.05, 400);
    REQUIRE(edge_collides(m, kStart, 0.0, kGoalQ, 2.0, pred, 100));
    q.seed = 0;
    const auto r = plan_rrt(q, pred, m);
    REQUIRE(r.success);
    MESSAGE("path nodes " << r.path.size() << " tree " << r.tree_size());
    CHECK((end_effector(m, r.path.back().q) - goal).norm() <= q.goal_tolerance);
    for (std::size_t i = 1; i < r.path.size(); ++i)
      CHECK_FALSE(dense_collides(m, r.path[i - 1].q, r.path[i - 1].t, r.path[i].q, r.path[i].t, pred, 1000));
  }
  SUBCASE("tree validity and determinism") {
    DebrisField f;
    f.obstacles.push_back({0.15, BallisticMotion{Vec3(0.6, -1.0, 0.6), Vec3(0.0, 0.3, 0.0)}});
    const auto pred = ObstaclePrediction::from_field(f, 0.0, 0.05, 200, {0.02, 0.05});
    q.seed = 4;
    const auto a = plan_rrt(q, pred, m);
    const auto b = plan_rrt(q, pred, m);
    REQUIRE(a.tree_size() == b.tree_size());
    for (std::size_t i = 0; i < a.tree.size(); ++i) {
      CHECK(a.tree[i].q == b.tree[i].q);
      CHECK(a.tree[i].t == b.tree[i].t);
      const auto& n = a.tree[i];
      CHECK(((n.q.array() >= m.q_min().array()) && (n.q.array() <= m.q_max().array())).all());
      if (n.parent < 0) continue;
      const auto& p = a.tree[static_cast<std::size_t>(n.parent)];
      CHECK(n.t > p.t);
      CHECK(((n.q - p.q).cwiseAbs().array() <= m.qd_max().array() * (n.t - p.t) + 1e-12).all());
    }
  }
  SUBCASE("goal region blocked exhausts the node budget") {
    const auto pred = ObstaclePrediction::frozen({{goal, 0.3}}, 0.0, 0.05, 4000);
    q.max_nodes = 300;
    const auto r = plan_rrt(q, pred, m);
    CHECK_FALSE(r.success);
    CHECK(r.tree_size() == 300);
  }
  SUBCASE("start in collision") {
    const auto pred = ObstaclePrediction::frozen({{end_effector(m, kStart), 0.1}}, 0.0, 0.05, 100);
    const auto r = plan_rrt(q, pred, m);
    CHECK_FALSE(r.success);
    CHECK(r.tree_size() == 0);
  }
  SUBCASE("invalid query") {
    const auto pred = ObstaclePrediction::frozen({}, 0.0, 0.05, 10);
    PlanQuery bad = q;
    bad.goal_tolerance = 0.0;
    CHECK_THROWS_AS(plan_rrt(bad, pred, m), Error);
    bad = q;
    bad.goal_bias = 1.5;
    CHECK_THROWS_AS(plan_rrt(bad, pred, m), Error);
  }
}

TEST_CASE("path reference interpolation") {
  std::vector<PlanNode> path{{vec({0.0, 0.0}), 1.0, -1}, {vec({1.0, -1.0}), 2.0, 0}, {vec({1.0, 1.0}), 4.0, 1}};
  CHECK(path_position(path, 0.0) == vec({0.0, 0.0}));
  CHECK(path_position(path, 1.5).isApprox(vec({0.5, -0.5})));
  CHECK(path_position(path, 3.0).isApprox(vec({1.0, 0.0})));
  CHECK(path_position(path, 9.0) == vec({1.0, 1.0}));
  CHECK(path_velocity(path, 1.5).isApprox(vec({1.0, -1.0})));
  CHECK(path_velocity(path, 3.0).isApprox(vec({0.0, 1.0})));
  CHECK(path_velocity(path, 9.0).isZero());
}
