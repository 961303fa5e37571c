#pragma once

#include <chrono>
#include <vector>

#include "janus/estimate.hpp"
#include "janus/integrate.hpp"

namespace janus {

struct BenchResult {
  double runtime_full = 0.0;     // mean wall-clock seconds
  double runtime_reduced = 0.0;  // mean wall-clock seconds
  double rmse_between = 0.0;     // m, mean over particles
  std::vector<double> rmse_per_particle;
  std::vector<double> timings_full;
  std::vector<double> timings_reduced;
};

/// Times both models on the same noise-free scenario and compares their
/// trajectories at the shared output timestamps.
inline BenchResult bench_compare(const std::vector<SimParticle>& particles,
                                 const FluidParams& fluid, const ControlSchedule& schedule,
                                 SolverConfig cfg, int reps) {
  if (reps < 1) throw ConfigError("bench_compare: reps must be >= 1");
  cfg.noise.enabled = false;
  cfg.output_dt = cfg.dt;

  using Clock = std::chrono::steady_clock;
  auto seconds = [](Clock::duration d) { return std::chrono::duration<double>(d).count(); };

  BenchResult r;
  std::vector<Trajectory> full, reduced;
  for (int i = 0; i < reps; ++i) {
    auto t0 = Clock::now();
    full = simulate_full(particles, fluid, schedule, cfg);
    auto t1 = Clock::now();
    reduced = simulate_reduced(particles, fluid, schedule, cfg);
    auto t2 = Clock::now();
    r.timings_full.push_back(seconds(t1 - t0));
    r.timings_reduced.push_back(seconds(t2 - t1));
  }
  for (double t : r.timings_full) r.runtime_full += t;
  for (double t : r.timings_reduced) r.runtime_reduced += t;
  r.runtime_full /= reps;
  r.runtime_reduced /= reps;

  for (std::size_t i = 0; i < full.size(); ++i) {
    r.rmse_per_particle.push_back(rmse(reduced[i], full[i]));
    r.rmse_between += r.rmse_per_particle.back();
  }
  if (!full.empty()) r.rmse_between /= static_cast<double>(full.size());
  return r;
}

}  // namespace janus
