#pragma once

/**
 * @file dynamics.hpp
 * @brief Force and torque laws for a Janus particle in Stokes flow, the full
 * second-order balance, the reduced first-order velocity law, and the
 * Brownian increment closure.
 *
 * Conventions: `heading` is the propulsion axis. The dipole axis sits at
 * heading - phi, so once the dipole has aligned with a field at angle a the
 * particle swims along a + phi.
 */

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string_view>

#include "janus/core.hpp"
#include "janus/magnetics.hpp"

namespace janus {

struct DerivedConstants {
  double tau_linear = 0.0;  // s
  double tau_rot = 0.0;     // s
  double v_ss = 0.0;        // m/s
  double D_t = 0.0;         // m²/s
  double D_r = 0.0;         // rad²/s
  double moment_of_inertia = 0.0;
  double propulsion_force = 0.0;

  /// Distance covered at terminal speed over 300 linear time constants.
  double transient_distance() const { return v_ss * 300.0 * tau_linear; }
};

struct Disturbance {
  Vec2 translational = Vec2::Zero();  // N
  double rotational = 0.0;            // N·m
  bool enabled = false;
  std::uint64_t seed = 0;

  Vec2 force() const { return enabled ? translational : Vec2::Zero(); }
  double torque() const { return enabled ? rotational : 0.0; }
};

inline double translational_drag_coefficient(const FluidParams& fluid, double radius) {
  return 6.0 * std::numbers::pi * fluid.viscosity * radius;
}

inline double rotational_drag_coefficient(const FluidParams& fluid, double radius) {
  return 8.0 * std::numbers::pi * fluid.viscosity * radius * radius * radius;
}

inline Vec2 drag_force(const Vec2& v, const FluidParams& fluid, double radius) {
  return -translational_drag_coefficient(fluid, radius) * v;
}

inline double drag_torque(double omega, const FluidParams& fluid, double radius) {
  return -rotational_drag_coefficient(fluid, radius) * omega;
}

/// F, either set on the particle or the fluid's gain times peroxide concentration.
inline double propulsion_magnitude(const ParticleParams& params, const FluidParams& fluid) {
  if (params.propulsion_force) return *params.propulsion_force;
  if (fluid.propulsion_gain) return *fluid.propulsion_gain * fluid.peroxide_concentration;
  throw ConfigError(params.label +
                    ": propulsion force unspecified (set F or the fluid propulsion gain)");
}

inline Vec2 propulsion_force(const ParticleParams& params, const FluidParams& fluid,
                             double heading) {
  return propulsion_magnitude(params, fluid) * direction(heading);
}

inline DerivedConstants derived_constants(const ParticleParams& params, const FluidParams& fluid,
                                          const PhysicalConstants& consts = {}) {
  params.validate();
  fluid.validate();
  consts.validate();
  const double ct = translational_drag_coefficient(fluid, params.radius);
  const double cr = rotational_drag_coefficient(fluid, params.radius);
  const double kT = PhysicalConstants::kB * consts.temperature;
  DerivedConstants dc;
  dc.moment_of_inertia = moment_of_inertia(params.mass, params.radius);
  dc.propulsion_force = propulsion_magnitude(params, fluid);
  dc.tau_linear = params.mass / ct;
  dc.tau_rot = dc.moment_of_inertia / cr;
  dc.v_ss = dc.propulsion_force / ct;
  dc.D_t = kT / ct;
  dc.D_r = kT / cr;
  return dc;
}

struct Acceleration {
  Vec2 linear = Vec2::Zero();  // m/s²
  double angular = 0.0;        // rad/s²
};

/// Newton-Euler balance in the plane. Magnetic force and propulsion torque are
/// omitted; the field is the uniform commanded one.
inline Acceleration full_accel(const ParticleState& state, const ParticleParams& params,
                               const FluidParams& fluid, const FieldCommand& field,
                               const Disturbance& dist = {}) {
  const Vec2 force = propulsion_force(params, fluid, state.heading) +
                     drag_force(state.velocity, fluid, params.radius) + dist.force();
  const double torque = magnetic_torque(params, state.heading, field) +
                        drag_torque(state.angular_velocity, fluid, params.radius) + dist.torque();
  return {force / params.mass, torque / moment_of_inertia(params.mass, params.radius)};
}

/// Reduced model: terminal speed along the field direction rotated by phi.
inline Vec2 reduced_velocity(const ParticleParams& params, const FluidParams& fluid,
                             const FieldCommand& field) {
  const double v_ss =
      propulsion_magnitude(params, fluid) / translational_drag_coefficient(fluid, params.radius);
  return v_ss * direction(field.angle + params.dipole_offset_phi);
}

/// Per-particle pseudo-random stream. Streams derived from the same master
/// seed but different labels are independent of each other.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream for_particle(std::uint64_t master_seed, std::string_view label) {
    std::uint64_t h = 14695981039346656037ull;  // FNV-1a
    for (unsigned char c : label) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return RandomStream(splitmix64(master_seed ^ splitmix64(h)));
  }

  double normal(double stddev) {
    if (stddev == 0.0) return 0.0;
    return std::normal_distribution<double>(0.0, stddev)(engine_);
  }

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

struct BrownianStep {
  Vec2 dp = Vec2::Zero();  // m
  double dtheta = 0.0;     // rad
};

/// Overdamped Euler-Maruyama increment over `dt` with the diffusion
/// coefficients in `dc`.
inline BrownianStep brownian_increment(const DerivedConstants& dc, double dt, RandomStream& rng) {
  if (!(dt > 0.0)) throw DomainError("brownian_increment: dt must be positive");
  const double st = std::sqrt(2.0 * dc.D_t * dt);
  const double sr = std::sqrt(2.0 * dc.D_r * dt);
  BrownianStep s;
  s.dp.x() = rng.normal(st);
  s.dp.y() = rng.normal(st);
  s.dtheta = rng.normal(sr);
  return s;
}

}  // namespace janus
