#include "dkrrt/debris.hpp"

#include <bit>
#include <cmath>
#include <random>

#include "dkrrt/error.hpp"
#include "dkrrt/kernels.hpp"

namespace dkrrt {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

Vec3 motion_position(const Motion& m, double t) {
  return std::visit(
      overloaded{
          [t](const BallisticMotion& b) -> Vec3 { return b.p0 + b.v0 * t; },
          [t](const SinusoidalMotion& s) -> Vec3 {
            return s.center + s.amplitude * std::sin(s.rate * t + s.phase);
          },
          [t](const CircularMotion& c) -> Vec3 {
            const double a = c.rate * t + c.phase;
            return c.center + c.radius * Vec3(std::cos(a), std::sin(a), 0.0);
          },
          [t](const ReversingMotion& r) -> Vec3 {
            if (t <= r.t_reverse) return r.p0 + r.v0 * t;
            return r.p0 + r.v0 * (2.0 * r.t_reverse - t);
          }},
      m);
}

Vec3 motion_velocity(const Motion& m, double t) {
  return std::visit(
      overloaded{[](const BallisticMotion& b) -> Vec3 { return b.v0; },
                 [t](const SinusoidalMotion& s) -> Vec3 {
                   return s.amplitude * s.rate * std::cos(s.rate * t + s.phase);
                 },
                 [t](const CircularMotion& c) -> Vec3 {
                   const double a = c.rate * t + c.phase;
                   return c.radius * c.rate * Vec3(-std::sin(a), std::cos(a), 0.0);
                 },
                 [t](const ReversingMotion& r) -> Vec3 { return t < r.t_reverse ? r.v0 : Vec3(-r.v0); }},
      m);
}

std::string motion_name(const Motion& m) {
  return std::visit(overloaded{[](const BallisticMotion&) { return std::string("ballistic"); },
                               [](const SinusoidalMotion&) { return std::string("sinusoidal"); },
                               [](const CircularMotion&) { return std::string("circular"); },
                               [](const ReversingMotion&) { return std::string("reversing"); }},
                    m);
}

void DebrisField::validate() const {
  for (const auto& o : obstacles) {
    require(o.radius > 0.0, ErrorKind::InvalidInput, "obstacle radius must be positive");
    require(motion_position(o.motion, 0.0).allFinite(), ErrorKind::InvalidInput,
            "obstacle motion is not finite");
  }
}

std::vector<Sphere> debris_positions(const DebrisField& field, double t) {
  require(t >= 0.0, ErrorKind::InvalidInput, "debris time must be non-negative");
  std::vector<Sphere> out;
  out.reserve(field.obstacles.size());
  for (const auto& o : field.obstacles) out.push_back({motion_position(o.motion, t), o.radius});
  return out;
}

void ObservationSpec::validate() const {
  require(rows >= 1 && cols >= 1, ErrorKind::InvalidInput, "observation grid needs rows, cols >= 1");
  require(extent > 0.0, ErrorKind::InvalidInput, "observation extent must be positive");
  require(noise_sigma >= 0.0, ErrorKind::InvalidInput, "noise sigma must be non-negative");
}

VectorXd render_observation(const DebrisField& field, const ObservationSpec& spec, double t) {
  spec.validate();
  // square cells spanning `extent` along the longer grid side
  const double cell = spec.extent / static_cast<double>(std::max(spec.rows, spec.cols));
  kernels::GridGeometry grid{spec.rows, spec.cols,
                             spec.center_u - 0.5 * cell * static_cast<double>(spec.cols),
                             spec.center_v - 0.5 * cell * static_cast<double>(spec.rows), cell};
  std::vector<kernels::Disc> discs;
  for (const auto& s : debris_positions(field, t)) {
    double u = 0.0, v = 0.0;
    switch (spec.plane) {
      case ProjectionPlane::XY: u = s.center.x(); v = s.center.y(); break;
      case ProjectionPlane::XZ: u = s.center.x(); v = s.center.z(); break;
      case ProjectionPlane::YZ: u = s.center.y(); v = s.center.z(); break;
    }
    discs.push_back({u, v, s.radius});
  }
  VectorXd obs = kernels::rasterize_discs(grid, discs);
  if (spec.noise_sigma > 0.0) {
    const auto bits = std::bit_cast<std::uint64_t>(t);
    std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                      static_cast<std::uint32_t>(bits), static_cast<std::uint32_t>(bits >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma);
    for (Index i = 0; i < obs.size(); ++i) obs(i) += noise(rng);
  }
  return obs;
}

}  // namespace dkrrt
