#pragma once

#include <functional>
#include <vector>

#include "dkrrt/koopman.hpp"
#include "dkrrt/linalg.hpp"

namespace dkrrt {

/// One revolute link in standard Denavit-Hartenberg convention.
struct DhLink {
  double a = 0.0;
  double alpha = 0.0;
  double d = 0.0;
  double theta_offset = 0.0;
  double mass = 1.0;             // kg
  Vec3 com = Vec3::Zero();       // center of mass in the link frame [m]
  Mat3 inertia = Mat3::Identity();  // about the center of mass, link frame [kg m^2]
  double q_min = -3.14159265358979;
  double q_max = 3.14159265358979;
  double qd_max = 1.0;           // rad/s
};

struct ManipulatorModel {
  std::vector<DhLink> links;
  Vec3 gravity = Vec3::Zero();  // m/s^2, zero in microgravity
  double capsule_radius = 0.05;  // link collision radius [m]

  Index dof() const { return static_cast<Index>(links.size()); }
  VectorXd q_min() const;
  VectorXd q_max() const;
  VectorXd qd_max() const;
  /// Throws InvalidInput on a malformed model (link count, inertia, limits).
  void validate() const;

  /// Center of mass halfway along the link, expressed in the link frame.
  static Vec3 link_midpoint(const DhLink& link);

  /// Six-joint arm with unit-scale links on a fixed base.
  static ManipulatorModel default_arm();
  /// Planar two-link arm (joint axes along z) used as an analytic reference.
  static ManipulatorModel planar_two_link(double l1, double l2, double m1, double m2,
                                          double lc1, double lc2, double i1, double i2,
                                          Vec3 gravity = Vec3::Zero());
};

/// Frames T_0 (base) .. T_n.
std::vector<Mat4> forward_kinematics(const ManipulatorModel& model, const VectorXd& q);
Vec3 end_effector(const ManipulatorModel& model, const VectorXd& q);

struct Segment {
  Vec3 a;
  Vec3 b;
};

/// One capsule axis per link, from joint origin to the next frame origin.
std::vector<Segment> link_segments(const ManipulatorModel& model, const VectorXd& q);

/// 3 x n translational Jacobian of the end effector.
MatrixXd position_jacobian(const ManipulatorModel& model, const VectorXd& q);

/// tau = M(q) qdd + C(q, qd) qd + G(q) by recursive Newton-Euler.
VectorXd inverse_dynamics(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd,
                          const VectorXd& qdd);
MatrixXd mass_matrix(const ManipulatorModel& model, const VectorXd& q);
VectorXd gravity_torque(const ManipulatorModel& model, const VectorXd& q);
/// C(q, qd) qd + G(q)
VectorXd bias_torque(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd);

/// Solves M qdd = tau - C qd - G with a Cholesky factorization.
VectorXd forward_dynamics(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd,
                          const VectorXd& tau);

double kinetic_energy(const ManipulatorModel& model, const VectorXd& q, const VectorXd& qd);

/// Classical RK4 step for x' = f(t, x).
template <typename F>
VectorXd rk4_step(F&& f, double t, const VectorXd& x, double dt) {
  const VectorXd k1 = f(t, x);
  const VectorXd k2 = f(t + 0.5 * dt, VectorXd(x + 0.5 * dt * k1));
  const VectorXd k3 = f(t + 0.5 * dt, VectorXd(x + 0.5 * dt * k2));
  const VectorXd k4 = f(t + dt, VectorXd(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

using TorqueFn = std::function<VectorXd(double t, const VectorXd& q, const VectorXd& qd)>;

struct Rk4Options {
  double t0 = 0.0;
  double divergence_bound = 1e6;
};

/// RK4 on [q; qd]; robot block of each state is [q; qd], inputs hold the torque
/// evaluated at the start of each step.
Trajectory integrate_rk4(const ManipulatorModel& model, const VectorXd& q0, const VectorXd& qd0,
                         const TorqueFn& torque, double dt, Index steps,
                         const Rk4Options& opts = {});

}  // namespace dkrrt
