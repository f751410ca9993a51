#include "dkrrt/manipulator.hpp"

#include <cmath>
#include <numbers>

#include "dkrrt/error.hpp"

namespace dkrrt {

namespace {

Mat4 dh_transform(const DhLink& l, double q) {
  const double th = q + l.theta_offset;
  const double ct = std::cos(th), st = std::sin(th);
  const double ca = std::cos(l.alpha), sa = std::sin(l.alpha);
  Mat4 t;
  t << ct, -st * ca, st * sa, l.a * ct,
       st, ct * ca, -ct * sa, l.a * st,
       0.0, sa, ca, l.d,
       0.0, 0.0, 0.0, 1.0;
  return t;
}

void check_sizes(const ManipulatorModel& m, const VectorXd& q) {
  require(q.size() == m.dof(), ErrorKind::DimensionMismatch,
          "joint vector has " + std::to_string(q.size()) + " entries, model has " +
              std::to_string(m.dof()) + " joints");
}

/// World-frame recursive Newton-Euler; `with_gravity` toggles the base
/// acceleration so mass-matrix columns can be extracted without G.
VectorXd rnea(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd,
              const VectorXd& qdd, bool with_gravity) {
  const Index n = model.dof();
  const auto frames = forward_kinematics(model, q);
  std::vector<Vec3> omega(n), domega(n), acc_com(n), r_o(n), r_c(n), axis(n);
  Vec3 w = Vec3::Zero(), dw = Vec3::Zero();
  Vec3 a = with_gravity ? Vec3(-model.gravity) : Vec3::Zero();
  for (Index i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const Vec3 z = frames[k].block<3, 1>(0, 2);
    const Vec3 o_prev = frames[k].block<3, 1>(0, 3);
    const Vec3 o = frames[k + 1].block<3, 1>(0, 3);
    const Vec3 com = frames[k + 1].block<3, 3>(0, 0) * model.links[k].com + o;
    const Vec3 w_prev = w;
    w = w_prev + z * qd(i);
    dw = dw + z * qdd(i) + w_prev.cross(z * qd(i));
    r_o[k] = o - o_prev;
    r_c[k] = com - o_prev;
    acc_com[k] = a + dw.cross(r_c[k]) + w.cross(w.cross(r_c[k]));
    a = a + dw.cross(r_o[k]) + w.cross(w.cross(r_o[k]));
    omega[k] = w;
    domega[k] = dw;
    axis[k] = z;
  }
  VectorXd tau(n);
  Vec3 f_next = Vec3::Zero(), n_next = Vec3::Zero();
  for (Index i = n; i-- > 0;) {
    const std::size_t k = static_cast<std::size_t>(i);
    const Mat3 r = frames[k + 1].block<3, 3>(0, 0);
    const Mat3 inertia = r * model.links[k].inertia * r.transpose();
    const Vec3 force = model.links[k].mass * acc_com[k];
    const Vec3 f = f_next + force;
    const Vec3 moment = n_next + r_o[k].cross(f_next) + r_c[k].cross(force) +
                        inertia * domega[k] + omega[k].cross(inertia * omega[k]);
    tau(i) = axis[k].dot(moment);
    f_next = f;
    n_next = moment;
  }
  return tau;
}

}  // namespace

VectorXd ManipulatorModel::q_min() const {
  VectorXd v(dof());
  for (Index i = 0; i < dof(); ++i) v(i) = links[static_cast<std::size_t>(i)].q_min;
  return v;
}

VectorXd ManipulatorModel::q_max() const {
  VectorXd v(dof());
  for (Index i = 0; i < dof(); ++i) v(i) = links[static_cast<std::size_t>(i)].q_max;
  return v;
}

VectorXd ManipulatorModel::qd_max() const {
  VectorXd v(dof());
  for (Index i = 0; i < dof(); ++i) v(i) = links[static_cast<std::size_t>(i)].qd_max;
  return v;
}

void ManipulatorModel::validate() const {
  require(dof() >= 1 && dof() <= 6, ErrorKind::InvalidInput, "models support 1 to 6 links");
  require(capsule_radius >= 0.0, ErrorKind::InvalidInput, "capsule radius must be non-negative");
  require(gravity.allFinite(), ErrorKind::InvalidInput, "gravity must be finite");
  for (const auto& l : links) {
    require(l.mass > 0.0, ErrorKind::InvalidInput, "link mass must be positive");
    require((l.inertia - l.inertia.transpose()).norm() <= 1e-12 * (1.0 + l.inertia.norm()),
            ErrorKind::InvalidInput, "link inertia must be symmetric");
    Eigen::LLT<Mat3> llt(l.inertia);
    require(llt.info() == Eigen::Success, ErrorKind::InvalidInput,
            "link inertia must be positive definite");
    require(l.q_min < l.q_max && l.qd_max > 0.0, ErrorKind::InvalidInput, "bad joint limits");
  }
}

Vec3 ManipulatorModel::link_midpoint(const DhLink& l) {
  // origin of the previous frame seen from this link frame is -Rx(alpha)^T (a, 0, d)
  const Eigen::AngleAxisd rx(l.alpha, Vec3::UnitX());
  return -0.5 * (rx.toRotationMatrix().transpose() * Vec3(l.a, 0.0, l.d));
}

ManipulatorModel ManipulatorModel::default_arm() {
  constexpr double pi = std::numbers::pi;
  struct Spec {
    double a, alpha, d, mass;
  };
  const Spec specs[6] = {{0.0, pi / 2, 0.3, 3.0}, {0.5, 0.0, 0.0, 2.5}, {0.4, 0.0, 0.0, 1.8},
                         {0.0, pi / 2, 0.0, 0.8}, {0.0, -pi / 2, 0.15, 0.5}, {0.0, 0.0, 0.1, 0.3}};
  ManipulatorModel m;
  for (const auto& s : specs) {
    DhLink l;
    l.a = s.a;
    l.alpha = s.alpha;
    l.d = s.d;
    l.mass = s.mass;
    l.com = link_midpoint(l);
    const double len = std::hypot(s.a, s.d);
    const double k = s.mass * (len * len / 12.0 + 0.005);
    l.inertia = Vec3(k, k, 0.5 * k + 0.5 * s.mass * 0.005).asDiagonal();
    l.q_min = -pi;
    l.q_max = pi;
    l.qd_max = 1.5;
    m.links.push_back(l);
  }
  return m;
}

ManipulatorModel ManipulatorModel::planar_two_link(double l1, double l2, double m1, double m2,
                                                   double lc1, double lc2, double i1, double i2,
                                                   Vec3 gravity) {
  ManipulatorModel m;
  m.gravity = gravity;
  const double lengths[2] = {l1, l2};
  const double masses[2] = {m1, m2};
  const double coms[2] = {lc1, lc2};
  const double inert[2] = {i1, i2};
  for (int i = 0; i < 2; ++i) {
    DhLink l;
    l.a = lengths[i];
    l.mass = masses[i];
    // frame sits at the distal end with x along the link
    l.com = Vec3(coms[i] - lengths[i], 0.0, 0.0);
    l.inertia = Vec3(inert[i], inert[i], inert[i]).asDiagonal();
    l.q_min = -2.0 * std::numbers::pi;
    l.q_max = 2.0 * std::numbers::pi;
    l.qd_max = 5.0;
    m.links.push_back(l);
  }
  return m;
}

std::vector<Mat4> forward_kinematics(const ManipulatorModel& model, const VectorXd& q) {
  check_sizes(model, q);
  std::vector<Mat4> frames;
  frames.reserve(model.links.size() + 1);
  frames.push_back(Mat4::Identity());
  for (Index i = 0; i < model.dof(); ++i)
    frames.push_back(frames.back() * dh_transform(model.links[static_cast<std::size_t>(i)], q(i)));
  return frames;
}

Vec3 end_effector(const ManipulatorModel& model, const VectorXd& q) {
  return forward_kinematics(model, q).back().block<3, 1>(0, 3);
}

std::vector<Segment> link_segments(const ManipulatorModel& model, const VectorXd& q) {
  const auto frames = forward_kinematics(model, q);
  std::vector<Segment> segs;
  segs.reserve(model.links.size());
  for (std::size_t i = 0; i + 1 < frames.size(); ++i)
    segs.push_back({frames[i].block<3, 1>(0, 3), frames[i + 1].block<3, 1>(0, 3)});
  return segs;
}

MatrixXd position_jacobian(const ManipulatorModel& model, const VectorXd& q) {
  const auto frames = forward_kinematics(model, q);
  const Vec3 p = frames.back().block<3, 1>(0, 3);
  MatrixXd j(3, model.dof());
  for (Index i = 0; i < model.dof(); ++i) {
    const auto& f = frames[static_cast<std::size_t>(i)];
    j.col(i) = Vec3(f.block<3, 1>(0, 2)).cross(p - f.block<3, 1>(0, 3));
  }
  return j;
}

VectorXd inverse_dynamics(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd,
                          const VectorXd& qdd) {
  check_sizes(model, q);
  check_sizes(model, qd);
  check_sizes(model, qdd);
  require(all_finite(q) && all_finite(qd) && all_finite(qdd), ErrorKind::InvalidInput,
          "inverse dynamics input is not finite");
  return rnea(model, q, qd, qdd, true);
}

MatrixXd mass_matrix(const ManipulatorModel& model, const VectorXd& q) {
  check_sizes(model, q);
  const Index n = model.dof();
  MatrixXd m(n, n);
  const VectorXd zero = VectorXd::Zero(n);
  for (Index j = 0; j < n; ++j) m.col(j) = rnea(model, q, zero, VectorXd::Unit(n, j), false);
  return 0.5 * (m + m.transpose());
}

VectorXd gravity_torque(const ManipulatorModel& model, const VectorXd& q) {
  const VectorXd zero = VectorXd::Zero(model.dof());
  return inverse_dynamics(model, q, zero, zero);
}

VectorXd bias_torque(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd) {
  return inverse_dynamics(model, q, qd, VectorXd::Zero(model.dof()));
}

VectorXd forward_dynamics(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd,
                          const VectorXd& tau) {
  check_sizes(model, tau);
  const VectorXd rhs = tau - bias_torque(model, q, qd);
  Eigen::LLT<MatrixXd> llt(mass_matrix(model, q));
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::Conditioning, "mass matrix is not numerically positive definite");
  return llt.solve(rhs);
}

double kinetic_energy(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd) {
  return 0.5 * qd.dot(mass_matrix(model, q) * qd);
}

Trajectory integrate_rk4(const ManipulatorModel& model, const VectorXd& q0, const VectorXd& qd0,
                         const TorqueFn& torque, double dt, Index steps, const Rk4Options& opts) {
  require(dt > 0.0, ErrorKind::InvalidInput, "integration step must be positive");
  require(steps >= 0, ErrorKind::InvalidInput, "step count must be non-negative");
  check_sizes(model, q0);
  check_sizes(model, qd0);
  const Index n = model.dof();
  auto rhs = [&](double t, const VectorXd& x) {
    const VectorXd q = x.head(n);
    const VectorXd qd = x.tail(n);
    VectorXd dx(2 * n);
    dx << qd, forward_dynamics(model, q, qd, torque(t, q, qd));
    return dx;
  };
  Trajectory traj;
  traj.dt = dt;
  VectorXd x(2 * n);
  x << q0, qd0;
  traj.states.push_back({x, VectorXd(), opts.t0});
  for (Index s = 0; s < steps; ++s) {
    const double t = opts.t0 + static_cast<double>(s) * dt;
    traj.inputs.push_back(torque(t, x.head(n), x.tail(n)));
    x = rk4_step(rhs, t, x, dt);
    if (!all_finite(x) || x.norm() > opts.divergence_bound)
      throw StepError(ErrorKind::Divergence, s + 1, "integration diverged");
    traj.states.push_back({x, VectorXd(), opts.t0 + static_cast<double>(s + 1) * dt});
  }
  return traj;
}

}  // namespace dkrrt
