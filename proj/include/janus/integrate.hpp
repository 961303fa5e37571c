#pragma once

/**
 * @file integrate.hpp
 * @brief Time integration of the reduced (forward Euler) and full (stiff
 * Rosenbrock) particle models over a piecewise-constant field schedule, and
 * the cost/accuracy comparison between them.
 */

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "janus/dynamics.hpp"
#include "janus/schedule.hpp"
#include "janus/stiff.hpp"

namespace janus {

struct TrajectorySample {
  double t = 0.0;
  Vec2 position = Vec2::Zero();
  double heading = 0.0;
};

struct Trajectory {
  std::string label;
  std::vector<TrajectorySample> samples;

  bool empty() const { return samples.empty(); }
  const TrajectorySample& front() const { return samples.front(); }
  const TrajectorySample& back() const { return samples.back(); }
};

/// A particle to simulate: its physics plus where (and how) it starts.
struct SimParticle {
  ParticleParams params;
  Vec2 position = Vec2::Zero();
  /// Initial propulsion axis; defaults to aligned with the first command.
  std::optional<double> heading;
  Vec2 velocity = Vec2::Zero();  // full model only
  double angular_velocity = 0.0;  // full model only
};

struct NoiseConfig {
  bool enabled = false;
  std::uint64_t seed = 0;
  /// Overrides for the Stokes-Einstein diffusion coefficients.
  std::optional<double> D_t;
  std::optional<double> D_r;
};

enum class Method { full_stiff, reduced_euler };

inline const char* to_string(Method m) {
  return m == Method::full_stiff ? "full_stiff" : "reduced_euler";
}

struct SolverConfig {
  Method method = Method::reduced_euler;
  double dt = 0.02;          // reduced-model step, s
  double rel_tol = 1e-6;     // full model
  double abs_tol = 1e-9;     // full model position tolerance, m (other states scaled)
  double output_dt = 0.02;   // full-model sampling and noise interval, s
  NoiseConfig noise;
  PhysicalConstants constants;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("dt must be positive");
    if (!(output_dt > 0.0)) throw ConfigError("output_dt must be positive");
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigError("tolerances must be positive");
    if (noise.D_t && !(*noise.D_t >= 0.0)) throw ConfigError("D_t must be >= 0");
    if (noise.D_r && !(*noise.D_r >= 0.0)) throw ConfigError("D_r must be >= 0");
    constants.validate();
  }
};

namespace detail {

inline DerivedConstants noise_constants(const ParticleParams& p, const FluidParams& fluid,
                                        const SolverConfig& cfg) {
  DerivedConstants dc = derived_constants(p, fluid, cfg.constants);
  if (cfg.noise.D_t) dc.D_t = *cfg.noise.D_t;
  if (cfg.noise.D_r) dc.D_r = *cfg.noise.D_r;
  return dc;
}

/// Sample times k*step for k = 0.., closed by `duration`.
inline std::vector<double> output_grid(double duration, double step) {
  std::vector<double> ts{0.0};
  if (duration <= 0.0) return ts;
  const auto n = static_cast<long>(std::ceil(duration / step - 1e-9));
  for (long k = 1; k < n; ++k) ts.push_back(static_cast<double>(k) * step);
  ts.push_back(duration);
  return ts;
}

/// Calls fn(a, b, command) for each constant-command piece of [t0, t1].
template <class Fn>
void for_each_piece(const ControlSchedule& schedule, double t0, double t1, Fn&& fn) {
  std::size_t idx = schedule.segment_index(t0);
  double a = t0;
  while (a < t1) {
    const double end = schedule.segment_end(idx);
    const double b = (idx + 1 < schedule.segments.size() && end < t1) ? end : t1;
    fn(a, b, schedule.segments[idx].command);
    a = b;
    ++idx;
  }
}

inline void check_inputs(const std::vector<SimParticle>& particles, const FluidParams& fluid,
                         const ControlSchedule& schedule, const SolverConfig& cfg) {
  schedule.validate();
  fluid.validate();
  cfg.validate();
  for (const auto& p : particles) p.params.validate();
}

}  // namespace detail

/// Forward Euler on the first-order model. Steps are split at command changes,
/// so noise-free motion is exact for piecewise-constant schedules. Samples are
/// taken every `dt`.
inline std::vector<Trajectory> simulate_reduced(const std::vector<SimParticle>& particles,
                                                const FluidParams& fluid,
                                                const ControlSchedule& schedule,
                                                const SolverConfig& cfg) {
  detail::check_inputs(particles, fluid, schedule, cfg);
  const std::vector<double> grid = detail::output_grid(schedule.duration, cfg.dt);
  std::vector<Trajectory> out;
  out.reserve(particles.size());

  for (const auto& sp : particles) {
    const ParticleParams params = sp.params.normalized();
    const DerivedConstants dc = detail::noise_constants(params, fluid, cfg);
    RandomStream rng = RandomStream::for_particle(cfg.noise.seed, params.label);
    const double phi = params.dipole_offset_phi;

    Trajectory traj{params.label, {}};
    traj.samples.reserve(grid.size());
    Vec2 p = sp.position;
    traj.samples.push_back({0.0, p, normalize_angle(schedule.command_at(0.0).angle + phi)});

    for (std::size_t k = 1; k < grid.size(); ++k) {
      const double t0 = grid[k - 1], t1 = grid[k];
      // Orientation noise is not carried between steps: the field re-aligns
      // the dipole far faster than a step.
      BrownianStep noise;
      if (cfg.noise.enabled) noise = brownian_increment(dc, t1 - t0, rng);
      detail::for_each_piece(schedule, t0, t1, [&](double a, double b, const FieldCommand& c) {
        p += dc.v_ss * direction(c.angle + phi + noise.dtheta) * (b - a);
      });
      p += noise.dp;
      traj.samples.push_back(
          {t1, p, normalize_angle(schedule.command_at(t1).angle + phi + noise.dtheta)});
    }
    out.push_back(std::move(traj));
  }
  return out;
}

struct FullRunStats {
  long accepted_steps = 0;
  long rejected_steps = 0;
};

/// Newton-Euler state (p, v, theta, omega) of one particle, advanced by the
/// adaptive Rosenbrock solver under a constant field command.
class FullModelStepper {
 public:
  using Solver = stiff::Rosenbrock23<6>;
  using State = Solver::State;
  using Matrix = Solver::Matrix;

  FullModelStepper(const ParticleParams& params, const FluidParams& fluid,
                   const SolverConfig& cfg, const ParticleState& initial)
      : params_(params.normalized()),
        dc_(detail::noise_constants(params_, fluid, cfg)),
        ct_(translational_drag_coefficient(fluid, params_.radius)),
        cr_(rotational_drag_coefficient(fluid, params_.radius)),
        solver_({cfg.rel_tol, cfg.abs_tol, cfg.output_dt, 0.0}) {
    y_ << initial.position, initial.velocity, initial.heading, initial.angular_velocity;
    // abs_tol is a position tolerance. The other components are scaled to the
    // position error they can cause: velocity errors decay over tau_linear,
    // heading errors act through a lever of one radius, spin errors decay
    // over tau_rot.
    const double r = params_.radius;
    State tol;
    tol << cfg.abs_tol, cfg.abs_tol, cfg.abs_tol / dc_.tau_linear, cfg.abs_tol / dc_.tau_linear,
        cfg.abs_tol / r, cfg.abs_tol / (r * dc_.tau_rot);
    solver_.set_abs_tol(tol);
  }

  void advance(double t0, double t1, const FieldCommand& c) {
    if (!last_command_ || !(*last_command_ == c)) {
      solver_.reset_step_size();
      last_command_ = c;
    }
    const double m = params_.mass, inertia = dc_.moment_of_inertia;
    const double force = dc_.propulsion_force, phi = params_.dipole_offset_phi;
    const double ct = ct_, cr = cr_;
    const double dB = params_.dipole_moment * c.magnitude;
    auto rhs = [&](const State& s) {
      State f;
      f[0] = s[2];
      f[1] = s[3];
      f[2] = (force * std::cos(s[4]) - ct * s[2]) / m;
      f[3] = (force * std::sin(s[4]) - ct * s[3]) / m;
      f[4] = s[5];
      f[5] = (dB * std::sin(c.angle - s[4] + phi) - cr * s[5]) / inertia;
      return f;
    };
    auto jac = [&](const State& s) {
      Matrix J = Matrix::Zero();
      J(0, 2) = 1.0;
      J(1, 3) = 1.0;
      J(2, 2) = -ct / m;
      J(3, 3) = -ct / m;
      J(2, 4) = -force * std::sin(s[4]) / m;
      J(3, 4) = force * std::cos(s[4]) / m;
      J(4, 5) = 1.0;
      J(5, 4) = -dB * std::cos(c.angle - s[4] + phi) / inertia;
      J(5, 5) = -cr / inertia;
      return J;
    };
    solver_.integrate(rhs, jac, t0, t1, y_);
    // The dynamics only see sin/cos of the heading, so wrapping is harmless.
    y_[4] = normalize_angle(y_[4]);
  }

  void kick(const BrownianStep& n) {
    y_.head<2>() += n.dp;
    y_[4] = normalize_angle(y_[4] + n.dtheta);
  }

  Vec2 position() const { return y_.head<2>(); }
  Vec2 velocity() const { return y_.segment<2>(2); }
  double heading() const { return y_[4]; }
  double angular_velocity() const { return y_[5]; }
  const DerivedConstants& constants() const { return dc_; }
  const stiff::Stats& stats() const { return solver_.stats(); }

 private:
  ParticleParams params_;
  DerivedConstants dc_;
  double ct_;
  double cr_;
  Solver solver_;
  State y_;
  std::optional<FieldCommand> last_command_;
};

/// Integrates the full model per particle. Output and Brownian kicks every
/// `output_dt`; the step controller restarts at every command change.
inline std::vector<Trajectory> simulate_full(const std::vector<SimParticle>& particles,
                                             const FluidParams& fluid,
                                             const ControlSchedule& schedule,
                                             const SolverConfig& cfg,
                                             FullRunStats* stats = nullptr) {
  detail::check_inputs(particles, fluid, schedule, cfg);
  const std::vector<double> grid = detail::output_grid(schedule.duration, cfg.output_dt);
  std::vector<Trajectory> out;
  out.reserve(particles.size());

  for (const auto& sp : particles) {
    ParticleState init;
    init.position = sp.position;
    init.velocity = sp.velocity;
    init.heading = sp.heading.value_or(schedule.command_at(0.0).angle +
                                       normalize_angle(sp.params.dipole_offset_phi));
    init.angular_velocity = sp.angular_velocity;
    FullModelStepper stepper(sp.params, fluid, cfg, init);
    RandomStream rng = RandomStream::for_particle(cfg.noise.seed, sp.params.label);

    Trajectory traj{sp.params.label, {}};
    traj.samples.reserve(grid.size());
    traj.samples.push_back({0.0, stepper.position(), normalize_angle(init.heading)});

    for (std::size_t k = 1; k < grid.size(); ++k) {
      detail::for_each_piece(schedule, grid[k - 1], grid[k],
                             [&](double a, double b, const FieldCommand& c) {
                               stepper.advance(a, b, c);
                             });
      if (cfg.noise.enabled)
        stepper.kick(brownian_increment(stepper.constants(), grid[k] - grid[k - 1], rng));
      traj.samples.push_back({grid[k], stepper.position(), stepper.heading()});
    }
    if (stats) {
      stats->accepted_steps += stepper.stats().accepted;
      stats->rejected_steps += stepper.stats().rejected;
    }
    out.push_back(std::move(traj));
  }
  return out;
}

inline std::vector<Trajectory> simulate(const std::vector<SimParticle>& particles,
                                        const FluidParams& fluid, const ControlSchedule& schedule,
                                        const SolverConfig& cfg) {
  return cfg.method == Method::full_stiff ? simulate_full(particles, fluid, schedule, cfg)
                                          : simulate_reduced(particles, fluid, schedule, cfg);
}

}  // namespace janus
