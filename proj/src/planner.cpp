#include "dkrrt/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dkrrt/error.hpp"

namespace dkrrt {

namespace {

std::vector<Sphere> lerp_spheres(const std::vector<Sphere>& a, const std::vector<Sphere>& b, double s) {
  std::vector<Sphere> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    out[i].center = (1.0 - s) * a[i].center + s * b[i].center;
    out[i].radius = (1.0 - s) * a[i].radius + s * b[i].radius;
  }
  return out;
}

// upper bound on the distance from joint i's axis to any point on links i..n-1
std::vector<double> joint_reach(const ManipulatorModel& model) {
  std::vector<double> reach(model.links.size(), 0.0);
  double acc = model.capsule_radius;
  for (std::size_t i = model.links.size(); i-- > 0;) {
    acc += std::hypot(model.links[i].a, model.links[i].d);
    reach[i] = acc;
  }
  return reach;
}

double clearance_at(const ManipulatorModel& model, const VectorXd& q, const ObstaclePrediction& pred,
                    double t) {
  return arm_clearance(model, q, pred.at(t));
}

bool sampled_collides(const ManipulatorModel& model, const VectorXd& q_a, double t_a, const VectorXd& q_b,
                      double t_b, const ObstaclePrediction& pred, Index resolution, double margin) {
  require(resolution >= 1, ErrorKind::InvalidInput, "edge resolution must be >= 1");
  require(q_a.size() == model.dof() && q_b.size() == model.dof(), ErrorKind::DimensionMismatch,
          "edge endpoints must match the robot dof");
  require(t_b >= t_a, ErrorKind::InvalidInput, "edge must not go back in time");
  if (t_a < pred.t0 - 1e-12 || t_b > pred.t_end() + 1e-12)
    throw Error(ErrorKind::HorizonExceeded, "edge leaves the prediction horizon");
  for (Index i = 0; i < resolution; ++i) {
    const double s = resolution == 1 ? 1.0 : static_cast<double>(i) / static_cast<double>(resolution - 1);
    const VectorXd q = q_a + s * (q_b - q_a);
    const double t = std::clamp(t_a + s * (t_b - t_a), pred.t0, pred.t_end());
    if (clearance_at(model, q, pred, t) < margin) return true;
  }
  return false;
}

}  // namespace

std::vector<Sphere> ObstaclePrediction::at(double t) const {
  require(!steps.empty(), ErrorKind::InvalidInput, "empty obstacle prediction");
  const double tol = 1e-9 * std::max(1.0, std::abs(t0));
  if (t < t0 - tol || t > t_end() + tol)
    throw Error(ErrorKind::HorizonExceeded, "query time " + std::to_string(t) + " outside prediction horizon [" +
                                                std::to_string(t0) + ", " + std::to_string(t_end()) + "]");
  if (steps.size() == 1) return steps.front();
  const double x = std::clamp((t - t0) / dt, 0.0, static_cast<double>(steps.size() - 1));
  const auto k = std::min(static_cast<std::size_t>(x), steps.size() - 2);
  return lerp_spheres(steps[k], steps[k + 1], x - static_cast<double>(k));
}

double ObstaclePrediction::max_center_speed() const {
  double v = 0.0;
  for (std::size_t k = 0; k + 1 < steps.size(); ++k)
    for (std::size_t i = 0; i < steps[k].size(); ++i)
      v = std::max(v, (steps[k + 1][i].center - steps[k][i].center).norm() / dt);
  return v;
}

double ObstaclePrediction::max_radius_rate() const {
  double v = 0.0;
  for (std::size_t k = 0; k + 1 < steps.size(); ++k)
    for (std::size_t i = 0; i < steps[k].size(); ++i)
      v = std::max(v, std::abs(steps[k + 1][i].radius - steps[k][i].radius) / dt);
  return v;
}

ObstaclePrediction ObstaclePrediction::frozen(const std::vector<Sphere>& spheres, double t0, double dt,
                                              Index steps, const InflationSchedule& inflation) {
  require(steps >= 1 && dt > 0.0, ErrorKind::InvalidInput, "prediction needs steps >= 1 and dt > 0");
  ObstaclePrediction p;
  p.t0 = t0;
  p.dt = dt;
  for (Index k = 0; k < steps; ++k) {
    auto s = spheres;
    for (auto& x : s) x.radius += inflation.at(k, dt);
    p.steps.push_back(std::move(s));
  }
  return p;
}

ObstaclePrediction ObstaclePrediction::from_field(const DebrisField& field, double t0, double dt, Index steps,
                                                  const InflationSchedule& inflation) {
  require(steps >= 1 && dt > 0.0, ErrorKind::InvalidInput, "prediction needs steps >= 1 and dt > 0");
  ObstaclePrediction p;
  p.t0 = t0;
  p.dt = dt;
  for (Index k = 0; k < steps; ++k) {
    auto s = debris_positions(field, t0 + dt * static_cast<double>(k));
    for (auto& x : s) x.radius += inflation.at(k, dt);
    p.steps.push_back(std::move(s));
  }
  return p;
}

ObstaclePrediction predict_obstacles(const std::vector<ObstacleModel>& models,
                                     const std::vector<ObstacleTrack>& current, Index horizon_steps,
                                     const InflationSchedule& inflation, double t0, double dt, Index version) {
  require(models.size() == current.size(), ErrorKind::DimensionMismatch,
          "one model per tracked obstacle is required");
  require(horizon_steps >= 1 && dt > 0.0, ErrorKind::InvalidInput, "prediction needs steps >= 1 and dt > 0");
  ObstaclePrediction p;
  p.t0 = t0;
  p.dt = dt;
  p.source_version = version;
  p.steps.assign(static_cast<std::size_t>(horizon_steps), std::vector<Sphere>(models.size()));
  for (std::size_t i = 0; i < models.size(); ++i) {
    const auto& m = models[i];
    const auto& tr = current[i];
    require(tr.state.size() >= 3, ErrorKind::DimensionMismatch, "obstacle state needs a position");
    std::vector<Vec3> centers{tr.state.head<3>()};
    bool ok = true;
    if (horizon_steps > 1) {
      try {
        const std::vector<VectorXd> us(static_cast<std::size_t>(horizon_steps - 1), m.input);
        const auto roll = predict_rollout(m.op, m.dict, tr.state, m.input.size() ? us : std::vector<VectorXd>{},
                                          horizon_steps - 1);
        for (const auto& x : roll) {
          if (!x.head<3>().allFinite() || x.head<3>().norm() > 1e6) {
            ok = false;
            break;
          }
          centers.push_back(x.head<3>());
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Divergence) throw;
        ok = false;
      }
    }
    if (!ok) {
      p.fallback = true;
      centers.assign(1, tr.state.head<3>());
      for (Index k = 1; k < horizon_steps; ++k)
        centers.push_back(centers.front() + tr.velocity * (dt * static_cast<double>(k)));
    }
    for (Index k = 0; k < horizon_steps; ++k)
      p.steps[static_cast<std::size_t>(k)][i] = {centers[static_cast<std::size_t>(k)],
                                                 tr.radius + inflation.at(k, dt)};
  }
  return p;
}

double capsule_sphere_distance(const Vec3& a, const Vec3& b, double r, const Sphere& s) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double u = len2 > 0.0 ? (s.center - a).dot(ab) / len2 : 0.0;
  u = std::clamp(u, 0.0, 1.0);
  return (s.center - (a + u * ab)).norm() - r - s.radius;
}

double arm_clearance(const ManipulatorModel& model, const VectorXd& q, const std::vector<Sphere>& spheres) {
  double best = std::numeric_limits<double>::infinity();
  if (spheres.empty()) return best;
  for (const auto& seg : link_segments(model, q))
    for (const auto& s : spheres) best = std::min(best, capsule_sphere_distance(seg.a, seg.b, model.capsule_radius, s));
  return best;
}

bool edge_collides(const ManipulatorModel& model, const VectorXd& q_a, double t_a, const VectorXd& q_b,
                   double t_b, const ObstaclePrediction& pred, Index resolution) {
  return sampled_collides(model, q_a, t_a, q_b, t_b, pred, resolution, 0.0);
}

bool edge_collides_conservative(const ManipulatorModel& model, const VectorXd& q_a, double t_a,
                                const VectorXd& q_b, double t_b, const ObstaclePrediction& pred,
                                Index resolution) {
  const auto reach = joint_reach(model);
  const Index intervals = std::max<Index>(1, resolution - 1);
  double sweep = 0.0;
  for (Index j = 0; j < model.dof(); ++j) sweep += std::abs(q_b(j) - q_a(j)) * reach[static_cast<std::size_t>(j)];
  sweep /= static_cast<double>(intervals);
  const double span = (t_b - t_a) / static_cast<double>(intervals);
  const double drift = span * (pred.max_center_speed() + pred.max_radius_rate());
  // every intermediate point is within half an interval of a sample
  const double margin = 0.5 * (sweep + drift);
  // with a single sample the start is not checked; fall back to two
  return sampled_collides(model, q_a, t_a, q_b, t_b, pred, std::max<Index>(2, resolution), margin);
}

void PlanQuery::validate(const ManipulatorModel& model) const {
  require(start.size() == model.dof(), ErrorKind::DimensionMismatch, "start must match the robot dof");
  require(start.allFinite() && goal.allFinite(), ErrorKind::InvalidInput, "start and goal must be finite");
  require(goal_tolerance > 0.0, ErrorKind::InvalidInput, "goal tolerance must be positive");
  require(max_nodes >= 1, ErrorKind::InvalidInput, "max_nodes must be >= 1");
  require(step_size > 0.0, ErrorKind::InvalidInput, "step size must be positive");
  require(goal_bias >= 0.0 && goal_bias <= 1.0, ErrorKind::InvalidInput, "goal bias must lie in [0, 1]");
  require(wait_probability >= 0.0 && wait_probability < 1.0, ErrorKind::InvalidInput,
          "wait probability must lie in [0, 1)");
  require(min_speed_fraction > 0.0 && min_speed_fraction <= 1.0, ErrorKind::InvalidInput,
          "min speed fraction must lie in (0, 1]");
  require(resolution >= 1, ErrorKind::InvalidInput, "edge resolution must be >= 1");
}

std::optional<VectorXd> solve_position_ik(const ManipulatorModel& model, const Vec3& target, const VectorXd& seed,
                                          double tolerance, int iterations) {
  const VectorXd lo = model.q_min(), hi = model.q_max();
  VectorXd q = seed.cwiseMax(lo).cwiseMin(hi);
  constexpr double lambda = 0.05;
  for (int it = 0; it < iterations; ++it) {
    const Vec3 e = target - end_effector(model, q);
    if (e.norm() < tolerance) return q;
    const MatrixXd j = position_jacobian(model, q);
    const Mat3 jj = j * j.transpose() + lambda * lambda * Mat3::Identity();
    VectorXd dq = j.transpose() * jj.ldlt().solve(e);
    const double n = dq.lpNorm<Eigen::Infinity>();
    if (n > 0.3) dq *= 0.3 / n;
    q = (q + dq).cwiseMax(lo).cwiseMin(hi);
  }
  if ((target - end_effector(model, q)).norm() < tolerance) return q;
  return std::nullopt;
}

PlanResult plan_rrt(const PlanQuery& query, const ObstaclePrediction& pred, const ManipulatorModel& model) {
  query.validate(model);
  const Index n = model.dof();
  const VectorXd lo = model.q_min(), hi = model.q_max(), vmax = model.qd_max();
  PlanResult res;
  std::mt19937_64 rng(query.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  if (query.t_start < pred.t0 - 1e-9 || query.t_start > pred.t_end()) {
    res.reason = "start time outside prediction horizon";
    return res;
  }
  if (clearance_at(model, query.start, pred, query.t_start) < 0.0) {
    res.reason = "start configuration in collision";
    return res;
  }

  res.tree.push_back({query.start, query.t_start, -1});
  MatrixXd qs(n, query.max_nodes);
  qs.col(0) = query.start;

  auto finish = [&](Index leaf) {
    res.path = tree_branch(res.tree, leaf);
    res.success = true;
  };
  if ((end_effector(model, query.start) - query.goal).norm() <= query.goal_tolerance) {
    finish(0);
    return res;
  }

  // goal-biased samples come from a handful of IK solutions
  std::vector<VectorXd> goal_configs;
  {
    auto seeds = std::vector<VectorXd>{query.start};
    for (int i = 0; i < 7; ++i) {
      VectorXd s(n);
      for (Index j = 0; j < n; ++j) s(j) = lo(j) + unit(rng) * (hi(j) - lo(j));
      seeds.push_back(s);
    }
    for (const auto& s : seeds)
      if (auto q = solve_position_ik(model, query.goal, s, 0.5 * query.goal_tolerance)) goal_configs.push_back(*q);
  }

  const Index max_attempts = 10 * query.max_nodes;
  VectorXd q_rand(n);
  while (res.tree_size() < query.max_nodes && res.iterations < max_attempts) {
    ++res.iterations;
    const double roll = unit(rng);
    const bool wait = roll < query.wait_probability;
    if (!goal_configs.empty() && roll >= query.wait_probability &&
        roll < query.wait_probability + query.goal_bias * (1.0 - query.wait_probability)) {
      q_rand = goal_configs[static_cast<std::size_t>(rng() % goal_configs.size())];
    } else {
      for (Index j = 0; j < n; ++j) q_rand(j) = lo(j) + unit(rng) * (hi(j) - lo(j));
    }

    const Index m = res.tree_size();
    Index near = 0;
    if (wait) {
      near = static_cast<Index>(rng() % static_cast<std::uint64_t>(m));
    } else {
      (qs.leftCols(m).colwise() - q_rand).colwise().squaredNorm().minCoeff(&near);
    }
    const PlanNode& parent = res.tree[static_cast<std::size_t>(near)];

    VectorXd q_new;
    double duration = 0.0;
    const double speed = query.min_speed_fraction + (1.0 - query.min_speed_fraction) * unit(rng);
    if (wait) {
      q_new = parent.q;
      duration = query.step_size / (speed * vmax.minCoeff());
    } else {
      VectorXd d = q_rand - parent.q;
      const double len = d.norm();
      if (len < 1e-12) continue;
      if (len > query.step_size) d *= query.step_size / len;
      q_new = parent.q + d;
      duration = (d.cwiseAbs().cwiseQuotient(vmax)).maxCoeff() / speed;
    }
    const double t_new = parent.t + duration;
    if (t_new > pred.t_end()) continue;
    if (edge_collides_conservative(model, parent.q, parent.t, q_new, t_new, pred, query.resolution)) continue;

    res.tree.push_back({q_new, t_new, near});
    qs.col(m) = q_new;
    if ((end_effector(model, q_new) - query.goal).norm() <= query.goal_tolerance) {
      finish(m);
      return res;
    }
  }
  res.reason = res.tree_size() >= query.max_nodes ? "node budget exhausted" : "attempt budget exhausted";
  return res;
}

std::vector<PlanNode> tree_branch(const std::vector<PlanNode>& tree, Index leaf) {
  require(leaf >= 0 && leaf < static_cast<Index>(tree.size()), ErrorKind::Index, "tree node out of range");
  std::vector<PlanNode> path;
  for (Index i = leaf; i >= 0; i = tree[static_cast<std::size_t>(i)].parent) path.push_back(tree[static_cast<std::size_t>(i)]);
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<PlanNode> escape_branch(const PlanResult& failed, const PlanQuery& query,
                                    const ObstaclePrediction& pred, const ManipulatorModel& model,
                                    Index candidates) {
  if (failed.tree.empty()) return {};
  std::vector<Index> order(failed.tree.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Index>(i);
  auto goal_dist = [&](Index i) {
    return (end_effector(model, failed.tree[static_cast<std::size_t>(i)].q) - query.goal).norm();
  };
  std::vector<double> dist(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) dist[i] = goal_dist(static_cast<Index>(i));
  // latest arrivals first: they have the least unverified future
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    return failed.tree[static_cast<std::size_t>(a)].t > failed.tree[static_cast<std::size_t>(b)].t;
  });
  const double t_end = pred.t_end();
  Index best = -1;
  for (Index k = 0; k < std::min<Index>(candidates, static_cast<Index>(order.size())); ++k) {
    const Index i = order[static_cast<std::size_t>(k)];
    const auto& node = failed.tree[static_cast<std::size_t>(i)];
    const double span = t_end - node.t;
    bool safe = true;
    if (span > 0.0) {
      const auto res = std::max<Index>(2, static_cast<Index>(std::ceil(span / pred.dt)) + 1);
      safe = !edge_collides_conservative(model, node.q, node.t, node.q, t_end, pred, res);
    }
    if (safe && (best < 0 || dist[static_cast<std::size_t>(i)] < dist[static_cast<std::size_t>(best)])) best = i;
  }
  if (best < 0) best = order.front();
  return tree_branch(failed.tree, best);
}

VectorXd path_position(const std::vector<PlanNode>& path, double t) {
  require(!path.empty(), ErrorKind::InvalidInput, "empty path");
  if (t <= path.front().t) return path.front().q;
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (t <= path[i].t) {
      const double span = path[i].t - path[i - 1].t;
      const double s = span > 0.0 ? (t - path[i - 1].t) / span : 1.0;
      return path[i - 1].q + s * (path[i].q - path[i - 1].q);
    }
  }
  return path.back().q;
}

VectorXd path_velocity(const std::vector<PlanNode>& path, double t) {
  require(!path.empty(), ErrorKind::InvalidInput, "empty path");
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (t >= path[i - 1].t && t < path[i].t) {
      const double span = path[i].t - path[i - 1].t;
      return (path[i].q - path[i - 1].q) / span;
    }
  }
  return VectorXd::Zero(path.front().q.size());
}

}  // namespace dkrrt
