#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "dkrrt/linalg.hpp"

namespace dkrrt {

struct BallisticMotion {
  Vec3 p0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
};

/// center + amplitude * sin(rate t + phase)
struct SinusoidalMotion {
  Vec3 center = Vec3::Zero();
  Vec3 amplitude = Vec3::Zero();
  double rate = 0.0;
  double phase = 0.0;
};

/// Circle parallel to the xy-plane: center + r (cos(rate t + phase), sin(rate t + phase), 0).
struct CircularMotion {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
  double rate = 0.0;
  double phase = 0.0;
};

/// Constant velocity v0 until t_reverse, then -v0.
struct ReversingMotion {
  Vec3 p0 = Vec3::Zero();
  Vec3 v0 = Vec3::Zero();
  double t_reverse = 0.0;
};

using Motion = std::variant<BallisticMotion, SinusoidalMotion, CircularMotion, ReversingMotion>;

Vec3 motion_position(const Motion& m, double t);
Vec3 motion_velocity(const Motion& m, double t);
std::string motion_name(const Motion& m);

struct Obstacle {
  double radius = 0.1;  // m
  Motion motion;
};

struct DebrisField {
  std::vector<Obstacle> obstacles;

  void validate() const;
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 0.0;
};

/// Analytic obstacle spheres at time t (t >= 0).
std::vector<Sphere> debris_positions(const DebrisField& field, double t);

enum class ProjectionPlane { XY, XZ, YZ };

/// Synthetic camera: an occupancy grid over a square patch of a coordinate plane.
struct ObservationSpec {
  Index rows = 32;
  Index cols = 32;
  ProjectionPlane plane = ProjectionPlane::XY;
  double extent = 4.0;       // side of the square patch [m]
  double center_u = 0.0;     // patch center in plane coordinates [m]
  double center_v = 0.0;
  double noise_sigma = 0.01;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Row-major flattened occupancy grid plus seeded Gaussian noise. The noise
/// stream depends only on (spec.seed, t).
VectorXd render_observation(const DebrisField& field, const ObservationSpec& spec, double t);

}  // namespace dkrrt
