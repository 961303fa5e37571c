#pragma once

/**
 * @file core.hpp
 * @brief Physical constants, particle/fluid descriptions and the closed-form
 * geometric quantities shared by every other module.
 *
 * Everything inside the library is SI. Micro-scale units (µm, ng, cP, mT)
 * only appear at file and CLI boundaries, via the helpers in `units`.
 */

#include <cmath>
#include <numbers>
#include <optional>
#include <string>

#include <Eigen/Core>

#include "janus/error.hpp"

namespace janus {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

namespace units {
inline constexpr double um = 1e-6;    // m
inline constexpr double nm = 1e-9;    // m
inline constexpr double ng = 1e-12;   // kg
inline constexpr double cP = 1e-3;    // Pa·s
inline constexpr double mT = 1e-3;    // T
inline constexpr double mm = 1e-3;    // m
inline constexpr double us = 1e-6;    // s
}  // namespace units

struct PhysicalConstants {
  static constexpr double mu0 = 4.0 * std::numbers::pi * 1e-7;  // T·m/A
  static constexpr double kB = 1.380649e-23;                    // J/K
  double temperature = 298.0;                                   // K

  void validate() const {
    if (!(temperature > 0.0) || !std::isfinite(temperature))
      throw DomainError("temperature must be positive");
  }
};

/// Wraps an angle into (-pi, pi].
inline double normalize_angle(double angle) {
  if (!std::isfinite(angle)) throw DomainError("normalize_angle: non-finite angle");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double a = std::remainder(angle, two_pi);  // [-pi, pi]
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

inline double moment_of_inertia(double mass, double radius) {
  if (!(mass > 0.0) || !(radius > 0.0))
    throw DomainError("moment_of_inertia: mass and radius must be positive");
  return 0.4 * mass * radius * radius;
}

inline double particle_volume(double radius) {
  if (!(radius > 0.0)) throw DomainError("particle_volume: radius must be positive");
  return 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
}

struct ParticleParams {
  static constexpr double kDefaultDipoleMoment = 1e-11;  // A·m²

  std::string label;
  double mass = 0.401 * units::ng;
  double radius = 4.6 * units::um;
  /// Propulsion magnitude F. Unset means "derive from fluid gain x concentration".
  std::optional<double> propulsion_force;
  double dipole_offset_phi = 0.0;  // rad, propulsion axis relative to dipole axis
  double dipole_moment = kDefaultDipoleMoment;

  void validate() const {
    if (!(mass > 0.0) || !std::isfinite(mass)) throw DomainError(label + ": mass must be positive");
    if (!(radius > 0.0) || !std::isfinite(radius))
      throw DomainError(label + ": radius must be positive");
    if (propulsion_force && (!(*propulsion_force >= 0.0) || !std::isfinite(*propulsion_force)))
      throw DomainError(label + ": propulsion_force must be >= 0");
    if (!(dipole_moment > 0.0) || !std::isfinite(dipole_moment))
      throw DomainError(label + ": dipole_moment must be positive");
    if (!std::isfinite(dipole_offset_phi)) throw DomainError(label + ": phi must be finite");
  }

  /// Returns a copy with phi wrapped into (-pi, pi] and invariants checked.
  ParticleParams normalized() const {
    ParticleParams p = *this;
    p.validate();
    p.dipole_offset_phi = normalize_angle(p.dipole_offset_phi);
    return p;
  }
};

struct FluidParams {
  double viscosity = 1.245 * units::cP;
  double peroxide_concentration = 0.0;  // fraction in [0, 1]
  std::optional<double> propulsion_gain;  // N per unit concentration

  void validate() const {
    if (!(viscosity > 0.0) || !std::isfinite(viscosity))
      throw DomainError("viscosity must be positive");
    if (!(peroxide_concentration >= 0.0 && peroxide_concentration <= 1.0))
      throw DomainError("peroxide_concentration must lie in [0, 1]");
    if (propulsion_gain && !(*propulsion_gain >= 0.0))
      throw DomainError("propulsion_gain must be >= 0");
  }
};

struct ParticleState {
  Vec2 position = Vec2::Zero();
  Vec2 velocity = Vec2::Zero();
  double heading = 0.0;  // propulsion axis, from workspace x
  double angular_velocity = 0.0;
  double time = 0.0;

  bool finite() const {
    return position.allFinite() && velocity.allFinite() && std::isfinite(heading) &&
           std::isfinite(angular_velocity) && std::isfinite(time);
  }
};

/// Unit vector at `angle` from the workspace x axis.
inline Vec2 direction(double angle) { return {std::cos(angle), std::sin(angle)}; }

}  // namespace janus
