#pragma once

// Command-line entry points. `run_cli` is separate from main() so the test
// suite can drive every subcommand in-process and inspect exit codes.

#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "janus/bench.hpp"
#include "janus/estimate.hpp"
#include "janus/io.hpp"
#include "janus/session.hpp"
#include "server.hpp"

namespace janus::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kData = 3 };

using nlohmann::json;

struct Globals {
  std::optional<std::uint64_t> seed;
  bool quiet = false;
  std::string out;
};

struct PhysicalFlags {
  double mass_ng = 0.401;
  double radius_um = 4.6;
  double viscosity_cP = 1.245;
  double dipole_moment = ParticleParams::kDefaultDipoleMoment;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mass-ng", mass_ng, "particle mass (ng)")->capture_default_str();
    cmd->add_option("--radius-um", radius_um, "particle radius (um)")->capture_default_str();
    cmd->add_option("--viscosity-cP", viscosity_cP, "fluid viscosity (cP)")->capture_default_str();
  }

  ParticleParams particle() const {
    ParticleParams p;
    p.mass = mass_ng * units::ng;
    p.radius = radius_um * units::um;
    p.dipole_moment = dipole_moment;
    p.validate();
    return p;
  }

  FluidParams fluid() const {
    FluidParams f;
    f.viscosity = viscosity_cP * units::cP;
    f.validate();
    return f;
  }
};

namespace detail {

/// Writes to `path`, or to `fallback` when the path is empty.
inline void emit(const std::string& path, const std::string& content, std::ostream& fallback) {
  if (path.empty())
    fallback << content;
  else
    io::write_file(path, content);
}

inline std::string sibling(const std::string& out, const std::string& suffix) {
  return out.empty() ? std::string() : out + suffix;
}

inline io::Scenario load_scenario(const std::string& path) {
  return io::scenario_from_json(io::parse_json(io::read_file(path), path));
}

}  // namespace detail

inline int cmd_simulate(const Globals& g, const std::string& scenario_path,
                        const std::string& method, bool no_noise, std::string summary_path,
                        std::ostream& out, std::ostream& err) {
  io::Scenario sc = detail::load_scenario(scenario_path);
  if (sc.particles.empty()) {
    err << "error: scenario has no particles\n";
    return kData;
  }
  SolverConfig cfg = sc.solver;
  if (!method.empty()) cfg.method = io::method_from_string(method);
  if (no_noise) cfg.noise.enabled = false;
  cfg.noise.seed = g.seed.value_or(sc.seed);

  const auto trajs = simulate(sc.particles, sc.fluid, sc.schedule, cfg);
  detail::emit(g.out, io::trajectories_to_csv(trajs), out);

  json parts = json::array();
  for (const auto& sp : sc.particles) {
    json d = io::derived_to_json(derived_constants(sp.params, sc.fluid, cfg.constants));
    d["particle_id"] = sp.params.label;
    parts.push_back(d);
  }
  json summary = {{"method", to_string(cfg.method)},
                  {"seed", cfg.noise.seed},
                  {"noise", cfg.noise.enabled},
                  {"duration_s", sc.schedule.duration},
                  {"particles", parts}};
  if (summary_path.empty()) summary_path = detail::sibling(g.out, ".summary.json");
  if (!summary_path.empty())
    io::write_file(summary_path, summary.dump(2) + "\n");
  else if (!g.quiet)
    err << summary.dump(2) << "\n";
  return kOk;
}

inline int cmd_fit(const Globals& g, const std::string& tracks_path,
                   const std::string& schedule_path, const std::string& windows_path,
                   const std::string& format, const PhysicalFlags& phys, std::ostream& out) {
  const auto tracks = io::trajectories_from_csv(io::read_file(tracks_path));
  const auto schedule =
      io::schedule_from_json(io::parse_json(io::read_file(schedule_path), schedule_path));
  const auto windows =
      io::windows_from_json(io::parse_json(io::read_file(windows_path), windows_path));
  const ParticleParams tmpl = phys.particle();
  const FluidParams fluid = phys.fluid();

  json rows = json::array();
  std::string csv = "particle_id,status,phi_rad,F_over_m,v_ss_um_s,F_N,t0_s,t1_s\n";
  for (const auto& t : tracks) {
    auto w = windows.find(t.label);
    if (w == windows.end()) {
      rows.push_back({{"particle_id", t.label}, {"status", "skipped: no window"}});
      csv += t.label + ",skipped: no window,,,,,,\n";
      continue;
    }
    try {
      ParticleParams p = tmpl;
      p.label = t.label;
      const FitResult f = fit_particle(t, schedule, w->second, p, fluid);
      json r = io::fit_to_json(f);
      r["status"] = "ok";
      rows.push_back(r);
      csv += t.label + ",ok," + io::fmt(f.phi_hat) + ',' + io::fmt(f.F_over_m_hat) + ',' +
             io::fmt(f.v_ss_hat / units::um) + ',' + io::fmt(f.F_hat) + ',' + io::fmt(f.window.t0) +
             ',' + io::fmt(f.window.t1) + '\n';
    } catch (const Error& e) {
      const std::string status = std::string("error: ") + e.kind();
      rows.push_back({{"particle_id", t.label}, {"status", status}, {"detail", e.what()}});
      csv += t.label + ',' + status + ",,,,,,\n";
    }
  }
  if (format == "json")
    detail::emit(g.out, json{{"fits", rows}}.dump(2) + "\n", out);
  else
    detail::emit(g.out, csv, out);
  return kOk;
}

inline int cmd_compare(const Globals& g, const std::string& tracks_path,
                       const std::string& schedule_path, const std::string& windows_path,
                       const std::string& mode, std::string overlay_path, const PhysicalFlags& phys,
                       std::ostream& out) {
  ExperimentDataset data;
  data.references = io::trajectories_from_csv(io::read_file(tracks_path));
  data.schedule = io::schedule_from_json(io::parse_json(io::read_file(schedule_path), schedule_path));
  data.windows = io::windows_from_json(io::parse_json(io::read_file(windows_path), windows_path));
  data.particle_template = phys.particle();
  data.fluid = phys.fluid();
  const ReplayMode m = (mode == "mean") ? ReplayMode::mean_F : ReplayMode::per_particle_F;

  const ReplayReport report = replay_experiment(data, m);
  detail::emit(g.out, io::replay_to_json(report).dump(2) + "\n", out);
  if (overlay_path.empty()) overlay_path = detail::sibling(g.out, ".overlay.csv");
  if (!overlay_path.empty()) io::write_file(overlay_path, io::overlay_csv(report, data.references));
  return kOk;
}

inline int cmd_bench(const Globals& g, const std::string& scenario_path, int reps,
                     std::ostream& out) {
  io::Scenario sc = detail::load_scenario(scenario_path);
  if (sc.particles.empty()) throw ConfigError("scenario has no particles");
  const BenchResult r = bench_compare(sc.particles, sc.fluid, sc.schedule, sc.solver, reps);
  detail::emit(g.out, io::bench_to_json(r, reps).dump(2) + "\n", out);
  return kOk;
}

inline int cmd_synth(const Globals& g, const std::string& params_path, bool no_noise,
                     std::string truth_path, std::string windows_path, std::string schedule_path,
                     std::ostream& out) {
  io::Scenario sc = detail::load_scenario(params_path);
  if (sc.particles.empty()) throw ConfigError("scenario has no particles");
  const auto d = io::synthesize(sc, g.seed.value_or(sc.seed), !no_noise);
  detail::emit(g.out, io::trajectories_to_csv(d.tracks, false), out);
  if (truth_path.empty()) truth_path = detail::sibling(g.out, ".truth.json");
  if (windows_path.empty()) windows_path = detail::sibling(g.out, ".windows.json");
  if (schedule_path.empty()) schedule_path = detail::sibling(g.out, ".schedule.json");
  if (!truth_path.empty()) io::write_file(truth_path, d.truth.dump(2) + "\n");
  if (!windows_path.empty()) io::write_file(windows_path, d.truth["windows"].dump(2) + "\n");
  if (!schedule_path.empty()) io::write_file(schedule_path, d.truth["schedule"].dump(2) + "\n");
  return kOk;
}

struct ServeFlags {
  int port = 7878;
  std::string scenario;
  double time_scale = 1.0;
  double tick_rate = 30.0;
  std::string method;
  bool manual_clock = false;
  bool noise = false;
  std::string replay;
};

inline SessionConfig session_config(const Globals& g, const ServeFlags& f) {
  SessionConfig cfg;
  if (!f.scenario.empty()) cfg = session_config_from_scenario(detail::load_scenario(f.scenario));
  cfg.time_scale = f.time_scale;
  cfg.tick_rate = f.tick_rate;
  if (!f.method.empty()) cfg.method = io::method_from_string(f.method);
  if (f.noise) cfg.noise = true;
  if (g.seed) cfg.seed = *g.seed;
  return cfg;
}

inline int cmd_serve(const Globals& g, const ServeFlags& f, std::ostream& out) {
  const SessionConfig cfg = session_config(g, f);
  if (!f.replay.empty()) {
    detail::emit(g.out, replay_transcript(cfg, io::read_file(f.replay)), out);
    return kOk;
  }
  return server::serve(cfg, {f.port, f.manual_clock, g.quiet});
}

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
  CLI::App app{"Simulation and parameter estimation for magnetically steered Janus swimmers", "janus"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "master random seed");
  app.add_flag("--quiet", g.quiet, "suppress informational output");
  app.add_option("--out", g.out, "primary output path (default: stdout)");
  app.fallthrough();

  std::string scenario, method, summary;
  bool no_noise = false;
  auto* sim = app.add_subcommand("simulate", "simulate a scenario, write trajectory CSV");
  sim->add_option("scenario", scenario, "scenario JSON")->required();
  sim->add_option("--method", method, "full_stiff | reduced_euler (default: scenario)");
  sim->add_flag("--no-noise", no_noise, "disable Brownian noise");
  sim->add_option("--summary", summary, "run summary JSON path (default: <out>.summary.json)");

  std::string tracks, schedule, windows, format = "csv", mode = "per", overlay;
  PhysicalFlags phys;
  auto* fit = app.add_subcommand("fit", "fit F and phi per particle");
  fit->add_option("tracks", tracks, "reference-trajectory CSV")->required();
  fit->add_option("schedule", schedule, "control schedule JSON")->required();
  fit->add_option("windows", windows, "fit windows JSON")->required();
  fit->add_option("--format", format, "csv | json")->check(CLI::IsMember({"csv", "json"}));
  phys.attach(fit);

  auto* cmp = app.add_subcommand("compare", "replay tracks with fitted parameters and score RMSE");
  cmp->add_option("tracks", tracks, "reference-trajectory CSV")->required();
  cmp->add_option("schedule", schedule, "control schedule JSON")->required();
  cmp->add_option("windows", windows, "fit windows JSON")->required();
  cmp->add_option("--mode", mode, "per | mean")->check(CLI::IsMember({"per", "mean"}));
  cmp->add_option("--overlay", overlay, "overlay CSV path (default: <out>.overlay.csv)");
  phys.attach(cmp);

  int reps = 100;
  auto* bench = app.add_subcommand("bench", "time full vs reduced model");
  bench->add_option("scenario", scenario, "scenario JSON")->required();
  bench->add_option("--reps", reps, "repetitions")->check(CLI::PositiveNumber)->capture_default_str();

  std::string truth, windows_out, schedule_out;
  auto* synth = app.add_subcommand("synth", "generate synthetic ground-truth tracks");
  synth->add_option("params", scenario, "scenario JSON with generator parameters")->required();
  synth->add_flag("--no-noise", no_noise, "noise-free tracks");
  synth->add_option("--truth", truth, "truth JSON path (default: <out>.truth.json)");
  synth->add_option("--windows", windows_out, "fit windows JSON path (default: <out>.windows.json)");
  synth->add_option("--schedule", schedule_out, "schedule JSON path (default: <out>.schedule.json)");

  ServeFlags sf;
  auto* serve = app.add_subcommand("serve", "run a live steering session server");
  serve->add_option("--port", sf.port, "TCP port on 127.0.0.1")->capture_default_str();
  serve->add_option("--scenario", sf.scenario, "scenario JSON with initial particles");
  serve->add_option("--time-scale", sf.time_scale, "simulated seconds per wall second")
      ->check(CLI::PositiveNumber);
  serve->add_option("--tick-rate", sf.tick_rate, "ticks per second")->check(CLI::PositiveNumber);
  serve->add_option("--method", sf.method, "full_stiff | reduced_euler");
  serve->add_flag("--noise", sf.noise, "start with Brownian noise on");
  serve->add_flag("--manual-clock", sf.manual_clock, "advance only on step messages");
  serve->add_option("--replay", sf.replay, "replay a transcript file and print the server stream");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n" << app.help();
    return kUsage;
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*sim) return cmd_simulate(g, scenario, method, no_noise, summary, out, err);
    if (*fit) return cmd_fit(g, tracks, schedule, windows, format, phys, out);
    if (*cmp) return cmd_compare(g, tracks, schedule, windows, mode, overlay, phys, out);
    if (*bench) return cmd_bench(g, scenario, reps, out);
    if (*synth) return cmd_synth(g, scenario, no_noise, truth, windows_out, schedule_out, out);
    if (*serve) return cmd_serve(g, sf, out);
  } catch (const Error& e) {
    err << "error (" << e.kind() << "): " << e.what() << "\n";
    return kData;
  } catch (const json::exception& e) {
    err << "error (parse): " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}

}  // namespace janus::cli
