#pragma once

/**
 * @file magnetics.hpp
 * @brief Coil fields (Biot-Savart over polygonal loops), the uniform-field
 * command used by the particle models, and the force/torque a field exerts
 * on a magnetized particle.
 */

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "janus/core.hpp"

namespace janus {

/// A closed polyline carrying a constant current. vertices.front() == vertices.back().
struct CurrentLoop {
  std::vector<Vec3> vertices;  // m
  double current = 0.0;        // A
};

struct CoilRig {
  std::vector<CurrentLoop> loops;

  void validate() const {
    if (loops.empty()) throw DomainError("coil rig has no loops");
    for (std::size_t i = 0; i < loops.size(); ++i) {
      const auto& v = loops[i].vertices;
      if (v.size() < 4)  // >= 3 distinct vertices plus the closing one
        throw GeometryError("loop " + std::to_string(i) + " needs at least 3 vertices");
      if ((v.front() - v.back()).norm() > 1e-12 * (1.0 + v.front().norm()))
        throw GeometryError("loop " + std::to_string(i) + " is not closed");
      if (!std::isfinite(loops[i].current))
        throw DomainError("loop " + std::to_string(i) + " has non-finite current");
    }
  }

  /// Largest vertex distance from the origin; sets the finite-difference scale.
  double characteristic_length() const {
    double r = 0.0;
    for (const auto& l : loops)
      for (const auto& v : l.vertices) r = std::max(r, v.norm());
    return r;
  }

  CoilRig with_currents(const Eigen::VectorXd& currents) const {
    if (static_cast<std::size_t>(currents.size()) != loops.size())
      throw DomainError("current vector size does not match loop count");
    CoilRig out = *this;
    for (std::size_t i = 0; i < loops.size(); ++i) out.loops[i].current = currents[i];
    return out;
  }
};

/// Regular polygon inscribed in a circle of `radius` centred at `center`, in
/// the plane spanned by orthonormal `e1`, `e2`. Circulation follows e1 -> e2,
/// so positive current produces a field along e1 x e2 on the axis.
inline CurrentLoop circular_loop(const Vec3& center, const Vec3& e1, const Vec3& e2,
                                 double radius, int segments, double current) {
  if (segments < 3) throw GeometryError("circular_loop: need at least 3 segments");
  if (!(radius > 0.0)) throw DomainError("circular_loop: radius must be positive");
  CurrentLoop loop;
  loop.current = current;
  loop.vertices.reserve(static_cast<std::size_t>(segments) + 1);
  for (int k = 0; k < segments; ++k) {
    double a = 2.0 * std::numbers::pi * k / segments;
    loop.vertices.push_back(center + radius * (std::cos(a) * e1 + std::sin(a) * e2));
  }
  loop.vertices.push_back(loop.vertices.front());
  return loop;
}

/// Four identical coils facing the origin from +X, -X, +Y, -Y. Positive
/// current in the X pair gives +x field at the origin, likewise for Y.
/// Geometry is a placeholder for rig studies (coil radius 10 mm, 30 mm out).
inline CoilRig default_rig(double coil_radius = 10 * units::mm,
                           double center_distance = 30 * units::mm, int segments = 128,
                           double current = 1.0) {
  const Vec3 ex = Vec3::UnitX(), ey = Vec3::UnitY(), ez = Vec3::UnitZ();
  CoilRig rig;
  // Axis +x needs e1 x e2 = +x: (y, z). Axis +y: (z, x).
  rig.loops.push_back(circular_loop(center_distance * ex, ey, ez, coil_radius, segments, current));
  rig.loops.push_back(circular_loop(-center_distance * ex, ey, ez, coil_radius, segments, current));
  rig.loops.push_back(circular_loop(center_distance * ey, ez, ex, coil_radius, segments, current));
  rig.loops.push_back(circular_loop(-center_distance * ey, ez, ex, coil_radius, segments, current));
  return rig;
}

struct FieldSample {
  Vec3 B = Vec3::Zero();                  // T
  std::optional<Eigen::Matrix3d> grad_B;  // (i, j) = dB_i / dx_j, T/m
};

struct FieldCommand {
  double angle = 0.0;      // rad
  double magnitude = 0.0;  // T

  void validate() const {
    if (!std::isfinite(angle)) throw DomainError("field angle must be finite");
    if (!(magnitude >= 0.0) || !std::isfinite(magnitude))
      throw DomainError("field magnitude must be >= 0");
  }

  FieldCommand normalized() const {
    validate();
    return {normalize_angle(angle), magnitude};
  }

  friend bool operator==(const FieldCommand&, const FieldCommand&) = default;
};

namespace detail {

// Exact field of a straight segment a->b with unit current at point p.
inline Vec3 segment_field_unit(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 r1 = p - a;
  const Vec3 r2 = p - b;
  const double n1 = r1.norm();
  const double n2 = r2.norm();
  const double denom = n1 * n2 * (n1 * n2 + r1.dot(r2));
  return (PhysicalConstants::mu0 / (4.0 * std::numbers::pi)) * (n1 + n2) / denom * r1.cross(r2);
}

inline double point_segment_distance(const Vec3& a, const Vec3& b, const Vec3& p) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

inline Vec3 loop_field(const CurrentLoop& loop, const Vec3& p, double current) {
  Vec3 B = Vec3::Zero();
  if (current == 0.0) return B;
  for (std::size_t k = 0; k + 1 < loop.vertices.size(); ++k) {
    const Vec3& a = loop.vertices[k];
    const Vec3& b = loop.vertices[k + 1];
    const double len = (b - a).norm();
    if (len == 0.0) continue;
    if (point_segment_distance(a, b, p) <= len * 1e-6)
      throw SingularityError("biot_savart: evaluation point lies on a wire segment");
    B += segment_field_unit(a, b, p);
  }
  return current * B;
}

inline Vec3 rig_field(const CoilRig& rig, const Vec3& p) {
  Vec3 B = Vec3::Zero();
  for (const auto& loop : rig.loops) B += loop_field(loop, p, loop.current);
  return B;
}

}  // namespace detail

/// Flux density of every loop in `rig` at `point`, with a central-difference
/// gradient (step 1e-4 x rig characteristic length).
inline FieldSample biot_savart(const CoilRig& rig, const Vec3& point, bool with_gradient = true) {
  rig.validate();
  FieldSample s;
  s.B = detail::rig_field(rig, point);
  if (with_gradient) {
    const double h = 1e-4 * rig.characteristic_length();
    Eigen::Matrix3d g;
    for (int j = 0; j < 3; ++j) {
      Vec3 dx = Vec3::Zero();
      dx[j] = h;
      g.col(j) = (detail::rig_field(rig, point + dx) - detail::rig_field(rig, point - dx)) / (2 * h);
    }
    s.grad_B = g;
  }
  return s;
}

inline FieldSample command_to_field(const FieldCommand& cmd) {
  FieldSample s;
  s.B = Vec3(cmd.magnitude * std::cos(cmd.angle), cmd.magnitude * std::sin(cmd.angle), 0.0);
  s.grad_B = Eigen::Matrix3d::Zero();
  return s;
}

/// Minimum-norm coil currents whose field at the origin equals the commanded
/// in-plane field.
inline Eigen::VectorXd rig_currents_for_direction(const CoilRig& rig, const FieldCommand& cmd) {
  rig.validate();
  cmd.validate();
  const auto n = static_cast<Eigen::Index>(rig.loops.size());
  Eigen::MatrixXd A(2, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec3 b = detail::loop_field(rig.loops[static_cast<std::size_t>(i)], Vec3::Zero(), 1.0);
    A.col(i) = b.head<2>();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() < 2 || sv[1] <= 1e-9 * sv[0])
    throw GeometryError("rig cannot produce an arbitrary in-plane field at the origin");
  Eigen::Vector2d target(cmd.magnitude * std::cos(cmd.angle), cmd.magnitude * std::sin(cmd.angle));
  return svd.solve(target);
}

/// Dipole axis angle for a particle whose propulsion axis points at `heading`.
/// The propulsion axis sits phi counterclockwise from the dipole.
inline double dipole_angle(const ParticleParams& params, double heading) {
  return heading - params.dipole_offset_phi;
}

/// Out-of-plane torque d·B·sin(misalignment); always turns the dipole toward the field.
inline double magnetic_torque(const ParticleParams& params, double heading,
                              const FieldCommand& field) {
  return params.dipole_moment * field.magnitude *
         std::sin(field.angle - dipole_angle(params, heading));
}

/// In-plane part of (m·∇)B for the particle's dipole.
inline Vec2 magnetic_force(const ParticleParams& params, double heading, const FieldSample& field) {
  if (!field.grad_B) throw DomainError("magnetic_force: field gradient required");
  const double a = dipole_angle(params, heading);
  const Vec3 m = params.dipole_moment * Vec3(std::cos(a), std::sin(a), 0.0);
  return (*field.grad_B * m).head<2>();
}

inline CoilRig rig_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("loops") || !j["loops"].is_array())
    throw ParseError("coil rig: expected object with array 'loops'");
  CoilRig rig;
  for (std::size_t i = 0; i < j["loops"].size(); ++i) {
    const auto& jl = j["loops"][i];
    const std::string where = "loops[" + std::to_string(i) + "]";
    if (!jl.contains("vertices_mm") || !jl.contains("current_A"))
      throw ParseError(where + ": requires vertices_mm and current_A");
    CurrentLoop loop;
    try {
      loop.current = jl["current_A"].get<double>();
      for (const auto& v : jl["vertices_mm"]) {
        if (v.size() != 3) throw ParseError(where + ": vertex must have 3 coordinates");
        loop.vertices.emplace_back(v[0].get<double>() * units::mm, v[1].get<double>() * units::mm,
                                   v[2].get<double>() * units::mm);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    rig.loops.push_back(std::move(loop));
  }
  rig.validate();
  return rig;
}

inline nlohmann::json rig_to_json(const CoilRig& rig) {
  nlohmann::json loops = nlohmann::json::array();
  for (const auto& l : rig.loops) {
    nlohmann::json verts = nlohmann::json::array();
    for (const auto& v : l.vertices) verts.push_back({v.x() / units::mm, v.y() / units::mm, v.z() / units::mm});
    loops.push_back({{"vertices_mm", verts}, {"current_A", l.current}});
  }
  return {{"loops", loops}};
}

}  // namespace janus
