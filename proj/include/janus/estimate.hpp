#pragma once

/**
 * @file estimate.hpp
 * @brief Identification of per-particle propulsion force and dipole offset
 * from tracked trajectories, RMSE scoring on the reference clock, and replay
 * of an experiment with fitted parameters.
 */

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "janus/integrate.hpp"

namespace janus {

struct FitWindow {
  double t0 = 0.0;
  double t1 = 0.0;
};

struct VelocityFit {
  double v_ss_hat = 0.0;      // m/s
  double F_hat = 0.0;         // N
  double F_over_m_hat = 0.0;  // m/s²
  double residual_rms = 0.0;  // m, scatter about the secant line
  FitWindow window;
};

struct PhiFit {
  double phi_hat = 0.0;
  double residual_rms = 0.0;  // m, perpendicular scatter about the fitted line
  FitWindow window;
};

struct FitResult {
  std::string label;
  double v_ss_hat = 0.0;
  double F_hat = 0.0;
  double F_over_m_hat = 0.0;
  double phi_hat = 0.0;
  FitWindow window;
  double velocity_residual_rms = 0.0;
  double phi_residual_rms = 0.0;
};

namespace detail {

inline std::vector<const TrajectorySample*> window_samples(const Trajectory& traj,
                                                           const FitWindow& w) {
  if (!(w.t1 > w.t0)) throw InsufficientDataError("fit window must satisfy t1 > t0");
  constexpr double eps = 1e-9;
  std::vector<const TrajectorySample*> out;
  for (const auto& s : traj.samples)
    if (s.t >= w.t0 - eps && s.t <= w.t1 + eps) out.push_back(&s);
  if (out.size() < 3)
    throw InsufficientDataError(traj.label + ": fit window holds fewer than 3 samples");
  return out;
}

inline void check_single_segment(const std::vector<const TrajectorySample*>& pts,
                                 const ControlSchedule& schedule, const std::string& label) {
  const std::size_t idx = schedule.segment_index(pts.front()->t);
  const double end = schedule.segment_end(idx);
  if (pts.back()->t > end + 1e-9)
    throw SegmentationError(label + ": fit window spans a command change");
}

}  // namespace detail

/// Secant terminal-velocity estimate over `window` and the propulsion force
/// it implies through the Stokes balance.
inline VelocityFit fit_terminal_velocity(const Trajectory& traj, const FitWindow& window,
                                         const ParticleParams& params, const FluidParams& fluid,
                                         const ControlSchedule* schedule = nullptr) {
  const auto pts = detail::window_samples(traj, window);
  if (schedule) detail::check_single_segment(pts, *schedule, traj.label);
  const auto& a = *pts.front();
  const auto& b = *pts.back();
  const Vec2 disp = b.position - a.position;
  const double span = b.t - a.t;

  VelocityFit fit;
  fit.window = window;
  fit.v_ss_hat = disp.norm() / span;
  fit.F_hat = translational_drag_coefficient(fluid, params.radius) * fit.v_ss_hat;
  fit.F_over_m_hat = fit.F_hat / params.mass;

  const Vec2 vel = disp / span;
  double ss = 0.0;
  for (const auto* s : pts) ss += (s->position - (a.position + vel * (s->t - a.t))).squaredNorm();
  fit.residual_rms = std::sqrt(ss / static_cast<double>(pts.size()));
  return fit;
}

/// Total-least-squares direction of motion over `window`, relative to the
/// active field angle.
inline PhiFit fit_phi(const Trajectory& traj, const ControlSchedule& schedule,
                      const FitWindow& window) {
  const auto pts = detail::window_samples(traj, window);
  detail::check_single_segment(pts, schedule, traj.label);

  Vec2 centroid = Vec2::Zero();
  for (const auto* s : pts) centroid += s->position;
  centroid /= static_cast<double>(pts.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto* s : pts) {
    const Vec2 d = s->position - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(pts.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(cov);
  Vec2 dir = eig.eigenvectors().col(1);  // largest eigenvalue
  const double perp_rms = std::sqrt(std::max(0.0, eig.eigenvalues()[0]));

  const Vec2 disp = pts.back()->position - pts.front()->position;
  const double net = disp.norm();
  if (net == 0.0 || !(net > 10.0 * perp_rms))
    throw DegenerateDirectionError(traj.label + ": displacement too small to fix a direction");
  if (dir.dot(disp) < 0.0) dir = -dir;

  const double field_angle = schedule.command_at(pts.front()->t).angle;
  PhiFit fit;
  fit.window = window;
  fit.phi_hat = normalize_angle(std::atan2(dir.y(), dir.x()) - field_angle);
  fit.residual_rms = perp_rms;
  return fit;
}

inline FitResult fit_particle(const Trajectory& traj, const ControlSchedule& schedule,
                              const FitWindow& window, const ParticleParams& params,
                              const FluidParams& fluid) {
  const VelocityFit v = fit_terminal_velocity(traj, window, params, fluid, &schedule);
  const PhiFit p = fit_phi(traj, schedule, window);
  return {traj.label, v.v_ss_hat, v.F_hat,    v.F_over_m_hat, p.phi_hat,
          window,     v.residual_rms, p.residual_rms};
}

/// Linear interpolation of a trajectory's position at time t (clamped to its range).
inline Vec2 position_at(const Trajectory& traj, double t) {
  const auto& s = traj.samples;
  if (s.empty()) throw AlignmentError("empty trajectory");
  if (t <= s.front().t) return s.front().position;
  if (t >= s.back().t) return s.back().position;
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double v, const TrajectorySample& x) { return v < x.t; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double w = (t - a.t) / (b.t - a.t);
  return a.position + w * (b.position - a.position);
}

/// Root mean square position error of `sim` against `ref`, evaluated at
/// every reference timestamp inside the simulated time range.
inline double rmse(const Trajectory& sim, const Trajectory& ref) {
  if (sim.empty() || ref.empty()) throw AlignmentError("rmse: empty trajectory");
  constexpr double eps = 1e-6;
  const double lo = sim.front().t - eps, hi = sim.back().t + eps;
  double ss = 0.0;
  std::size_t n = 0;
  for (const auto& r : ref.samples) {
    if (r.t < lo || r.t > hi) continue;
    ss += (position_at(sim, r.t) - r.position).squaredNorm();
    ++n;
  }
  if (n == 0) throw AlignmentError("rmse: trajectories do not overlap in time");
  return std::sqrt(ss / static_cast<double>(n));
}

enum class ReplayMode { per_particle_F, mean_F };

inline const char* to_string(ReplayMode m) {
  return m == ReplayMode::per_particle_F ? "per_particle_F" : "mean_F";
}

struct ReplayEntry {
  std::string label;
  std::optional<FitResult> fit;
  double F_over_m_used = 0.0;
  double rmse = 0.0;                 // m
  std::optional<std::string> error;  // set when fitting or scoring failed
  std::optional<Trajectory> simulated;
};

struct ReplayReport {
  ReplayMode mode = ReplayMode::per_particle_F;
  std::vector<ReplayEntry> particles;
  double mean_rmse = 0.0;

  /// Arithmetic mean of the per-particle RMSE over particles that were scored.
  void finalize() {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : particles)
      if (!e.error) {
        sum += e.rmse;
        ++n;
      }
    mean_rmse = n ? sum / static_cast<double>(n) : 0.0;
  }
};

/// Reference tracks plus everything needed to refit and replay them.
struct ExperimentDataset {
  std::vector<Trajectory> references;
  ControlSchedule schedule;
  std::map<std::string, FitWindow> windows;
  ParticleParams particle_template;  // mass, radius, dipole moment used for every particle
  FluidParams fluid;
  double sim_dt = 0.02;
};

/// Fits each particle on its window, re-simulates the reduced model from its
/// first reference position and scores the result on the reference clock.
inline ReplayReport replay_experiment(const ExperimentDataset& data, ReplayMode mode) {
  ReplayReport report;
  report.mode = mode;

  for (const auto& ref : data.references) {
    ReplayEntry e;
    e.label = ref.label;
    try {
      auto w = data.windows.find(ref.label);
      if (w == data.windows.end()) throw InsufficientDataError(ref.label + ": no fit window");
      ParticleParams p = data.particle_template;
      p.label = ref.label;
      e.fit = fit_particle(ref, data.schedule, w->second, p, data.fluid);
      e.F_over_m_used = e.fit->F_over_m_hat;
    } catch (const Error& err) {
      e.error = std::string(err.kind()) + ": " + err.what();
    }
    report.particles.push_back(std::move(e));
  }

  if (mode == ReplayMode::mean_F) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : report.particles)
      if (!e.error) {
        sum += e.fit->F_over_m_hat;
        ++n;
      }
    for (auto& e : report.particles)
      if (!e.error) e.F_over_m_used = sum / static_cast<double>(n);
  }

  SolverConfig cfg;
  cfg.method = Method::reduced_euler;
  cfg.dt = data.sim_dt;

  for (std::size_t i = 0; i < report.particles.size(); ++i) {
    auto& e = report.particles[i];
    if (e.error) continue;
    const Trajectory& ref = data.references[i];
    try {
      SimParticle sp;
      sp.params = data.particle_template;
      sp.params.label = e.label;
      sp.params.propulsion_force = e.F_over_m_used * sp.params.mass;
      sp.params.dipole_offset_phi = e.fit->phi_hat;
      sp.position = Vec2::Zero();
      Trajectory sim = simulate_reduced({sp}, data.fluid, data.schedule, cfg).front();
      // Anchor the simulation to the first reference sample.
      const Vec2 shift = ref.front().position - position_at(sim, ref.front().t);
      for (auto& s : sim.samples) s.position += shift;
      e.rmse = rmse(sim, ref);
      e.simulated = std::move(sim);
    } catch (const Error& err) {
      e.error = std::string(err.kind()) + ": " + err.what();
    }
  }
  report.finalize();
  return report;
}

}  // namespace janus
