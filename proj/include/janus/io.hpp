#pragma once

/**
 * @file io.hpp
 * @brief File formats: trajectory CSV, scenario / schedule / fit-window JSON,
 * reports. Micro-scale units live only here; everything returned is SI.
 * See FORMATS.md for the schemas.
 */

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "janus/bench.hpp"
#include "janus/estimate.hpp"
#include "janus/integrate.hpp"

namespace janus::io {

using nlohmann::json;

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write " + path);
  out << content;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(what + ": " + e.what());
  }
}

/// Round-trip exact formatting for doubles.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Trajectory CSV: time_s,particle_id,x_um,y_um[,theta_rad]

inline std::string trajectories_to_csv(const std::vector<Trajectory>& trajs,
                                       bool with_heading = true) {
  std::string out = with_heading ? "time_s,particle_id,x_um,y_um,theta_rad\n"
                                 : "time_s,particle_id,x_um,y_um\n";
  for (const auto& t : trajs)
    for (const auto& s : t.samples) {
      out += fmt(s.t) + ',' + t.label + ',' + fmt(s.position.x() / units::um) + ',' +
             fmt(s.position.y() / units::um);
      if (with_heading) out += ',' + fmt(s.heading);
      out += '\n';
    }
  return out;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline double parse_double(const std::string& s, std::size_t line, const std::string& column) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line) + ": column '" + column +
                     "' is not a number: '" + s + "'");
  }
}

}  // namespace detail

/// Reads tracks; particles keep the order of first appearance. Samples are
/// sorted by time and must have distinct timestamps per particle.
inline std::vector<Trajectory> trajectories_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) throw ParseError("CSV is empty; header required");
  ++lineno;
  const auto header = detail::split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const char* need : {"time_s", "particle_id", "x_um", "y_um"})
    if (!col.count(need)) throw ParseError(std::string("CSV header is missing column '") + need + "'");
  const bool has_theta = col.count("theta_rad") > 0;

  std::vector<Trajectory> out;
  std::map<std::string, std::size_t> index;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != header.size())
      throw ParseError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    const std::string& id = cells[col["particle_id"]];
    if (id.empty()) throw ParseError("line " + std::to_string(lineno) + ": empty particle_id");
    TrajectorySample s;
    s.t = detail::parse_double(cells[col["time_s"]], lineno, "time_s");
    s.position = Vec2(detail::parse_double(cells[col["x_um"]], lineno, "x_um") * units::um,
                      detail::parse_double(cells[col["y_um"]], lineno, "y_um") * units::um);
    if (has_theta) s.heading = detail::parse_double(cells[col["theta_rad"]], lineno, "theta_rad");
    if (!std::isfinite(s.t) || !s.position.allFinite())
      throw ParseError("line " + std::to_string(lineno) + ": non-finite value");
    auto [it, inserted] = index.try_emplace(id, out.size());
    if (inserted) out.push_back(Trajectory{id, {}});
    out[it->second].samples.push_back(s);
  }
  for (auto& t : out) {
    std::stable_sort(t.samples.begin(), t.samples.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    for (std::size_t i = 1; i < t.samples.size(); ++i)
      if (!(t.samples[i].t > t.samples[i - 1].t))
        throw ParseError("particle '" + t.label + "': duplicate timestamp " + fmt(t.samples[i].t));
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON helpers

namespace detail {

inline void reject_unknown(const json& j, const std::set<std::string>& allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k)) throw ParseError(where + ": unknown key '" + k + "'");
}

inline double get_number(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ParseError(where + ": missing '" + key + "'");
  if (!j[key].is_number()) throw ParseError(where + "." + key + ": expected a number");
  return j[key].get<double>();
}

inline double get_number_or(const json& j, const std::string& key, double fallback,
                            const std::string& where) {
  return j.contains(key) ? get_number(j, key, where) : fallback;
}

template <class Fn>
auto with_context(const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(where + ": " + e.what());
  }
}

}  // namespace detail

inline ControlSchedule schedule_from_json(const json& j) {
  detail::reject_unknown(j, {"duration_s", "segments"}, "schedule");
  ControlSchedule s;
  s.duration = detail::get_number(j, "duration_s", "schedule");
  if (!j.contains("segments") || !j["segments"].is_array())
    throw ParseError("schedule: 'segments' must be an array");
  for (std::size_t i = 0; i < j["segments"].size(); ++i) {
    const auto& js = j["segments"][i];
    const std::string where = "schedule.segments[" + std::to_string(i) + "]";
    detail::reject_unknown(js, {"t_start_s", "angle_rad", "magnitude_mT"}, where);
    ScheduleSegment seg;
    seg.t_start = detail::get_number(js, "t_start_s", where);
    seg.command.angle = detail::get_number(js, "angle_rad", where);
    seg.command.magnitude = detail::get_number(js, "magnitude_mT", where) * units::mT;
    s.segments.push_back(seg);
  }
  detail::with_context("schedule", [&] { s.validate(); });
  return s;
}

inline json schedule_to_json(const ControlSchedule& s) {
  json segs = json::array();
  for (const auto& seg : s.segments)
    segs.push_back({{"t_start_s", seg.t_start},
                    {"angle_rad", seg.command.angle},
                    {"magnitude_mT", seg.command.magnitude / units::mT}});
  return {{"duration_s", s.duration}, {"segments", segs}};
}

inline std::map<std::string, FitWindow> windows_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("windows: expected an object keyed by particle_id");
  std::map<std::string, FitWindow> out;
  for (const auto& [id, jw] : j.items()) {
    const std::string where = "windows." + id;
    detail::reject_unknown(jw, {"t0_s", "t1_s"}, where);
    FitWindow w{detail::get_number(jw, "t0_s", where), detail::get_number(jw, "t1_s", where)};
    if (!(w.t1 > w.t0)) throw ParseError(where + ": t1_s must exceed t0_s");
    out[id] = w;
  }
  return out;
}

inline json windows_to_json(const std::map<std::string, FitWindow>& w) {
  json j = json::object();
  for (const auto& [id, win] : w) j[id] = {{"t0_s", win.t0}, {"t1_s", win.t1}};
  return j;
}

/// Boundary particle description: params plus start position.
inline SimParticle particle_from_json(const json& j, const std::string& where) {
  detail::reject_unknown(j,
                         {"id", "mass_ng", "radius_um", "F_over_m", "propulsion_force_N", "phi_rad",
                          "dipole_moment_Am2", "x_um", "y_um"},
                         where);
  SimParticle sp;
  if (!j.contains("id") || !j["id"].is_string()) throw ParseError(where + ": missing string 'id'");
  sp.params.label = j["id"].get<std::string>();
  if (sp.params.label.empty() || sp.params.label.find(',') != std::string::npos)
    throw ParseError(where + ": id must be non-empty and contain no commas");
  sp.params.mass = detail::get_number_or(j, "mass_ng", sp.params.mass / units::ng, where) * units::ng;
  sp.params.radius =
      detail::get_number_or(j, "radius_um", sp.params.radius / units::um, where) * units::um;
  if (j.contains("F_over_m") && j.contains("propulsion_force_N"))
    throw ParseError(where + ": give F_over_m or propulsion_force_N, not both");
  if (j.contains("F_over_m"))
    sp.params.propulsion_force = detail::get_number(j, "F_over_m", where) * sp.params.mass;
  if (j.contains("propulsion_force_N"))
    sp.params.propulsion_force = detail::get_number(j, "propulsion_force_N", where);
  sp.params.dipole_offset_phi = detail::get_number_or(j, "phi_rad", 0.0, where);
  sp.params.dipole_moment =
      detail::get_number_or(j, "dipole_moment_Am2", ParticleParams::kDefaultDipoleMoment, where);
  sp.position = Vec2(detail::get_number_or(j, "x_um", 0.0, where) * units::um,
                     detail::get_number_or(j, "y_um", 0.0, where) * units::um);
  detail::with_context(where, [&] { sp.params.validate(); });
  return sp;
}

inline json particle_to_json(const SimParticle& sp) {
  json j = {{"id", sp.params.label},
            {"mass_ng", sp.params.mass / units::ng},
            {"radius_um", sp.params.radius / units::um},
            {"phi_rad", sp.params.dipole_offset_phi},
            {"dipole_moment_Am2", sp.params.dipole_moment},
            {"x_um", sp.position.x() / units::um},
            {"y_um", sp.position.y() / units::um}};
  if (sp.params.propulsion_force) j["F_over_m"] = *sp.params.propulsion_force / sp.params.mass;
  return j;
}

inline FluidParams fluid_from_json(const json& j) {
  detail::reject_unknown(j, {"viscosity_cP", "peroxide_concentration", "propulsion_gain_N"}, "fluid");
  FluidParams f;
  f.viscosity = detail::get_number_or(j, "viscosity_cP", f.viscosity / units::cP, "fluid") * units::cP;
  f.peroxide_concentration = detail::get_number_or(j, "peroxide_concentration", 0.0, "fluid");
  if (j.contains("propulsion_gain_N"))
    f.propulsion_gain = detail::get_number(j, "propulsion_gain_N", "fluid");
  detail::with_context("fluid", [&] { f.validate(); });
  return f;
}

inline json fluid_to_json(const FluidParams& f) {
  json j = {{"viscosity_cP", f.viscosity / units::cP},
            {"peroxide_concentration", f.peroxide_concentration}};
  if (f.propulsion_gain) j["propulsion_gain_N"] = *f.propulsion_gain;
  return j;
}

inline Method method_from_string(const std::string& s) {
  if (s == "full_stiff" || s == "full") return Method::full_stiff;
  if (s == "reduced_euler" || s == "reduced") return Method::reduced_euler;
  throw ParseError("unknown method '" + s + "' (expected full_stiff or reduced_euler)");
}

inline SolverConfig solver_from_json(const json& j) {
  detail::reject_unknown(j,
                         {"method", "dt_s", "rel_tol", "abs_tol_m", "output_dt_s", "noise",
                          "D_t_m2_s", "D_r_rad2_s", "temperature_K"},
                         "solver");
  SolverConfig c;
  if (j.contains("method")) {
    if (!j["method"].is_string()) throw ParseError("solver.method: expected a string");
    c.method = method_from_string(j["method"].get<std::string>());
  }
  c.dt = detail::get_number_or(j, "dt_s", c.dt, "solver");
  c.output_dt = detail::get_number_or(j, "output_dt_s", c.dt, "solver");
  c.rel_tol = detail::get_number_or(j, "rel_tol", c.rel_tol, "solver");
  c.abs_tol = detail::get_number_or(j, "abs_tol_m", c.abs_tol, "solver");
  if (j.contains("noise")) {
    if (!j["noise"].is_boolean()) throw ParseError("solver.noise: expected true/false");
    c.noise.enabled = j["noise"].get<bool>();
  }
  if (j.contains("D_t_m2_s")) c.noise.D_t = detail::get_number(j, "D_t_m2_s", "solver");
  if (j.contains("D_r_rad2_s")) c.noise.D_r = detail::get_number(j, "D_r_rad2_s", "solver");
  c.constants.temperature = detail::get_number_or(j, "temperature_K", 298.0, "solver");
  detail::with_context("solver", [&] { c.validate(); });
  return c;
}

inline json solver_to_json(const SolverConfig& c) {
  json j = {{"method", to_string(c.method)}, {"dt_s", c.dt},           {"rel_tol", c.rel_tol},
            {"abs_tol_m", c.abs_tol},        {"output_dt_s", c.output_dt},
            {"noise", c.noise.enabled},      {"temperature_K", c.constants.temperature}};
  if (c.noise.D_t) j["D_t_m2_s"] = *c.noise.D_t;
  if (c.noise.D_r) j["D_r_rad2_s"] = *c.noise.D_r;
  return j;
}

struct Scenario {
  std::vector<SimParticle> particles;
  FluidParams fluid;
  ControlSchedule schedule;
  SolverConfig solver;
  std::uint64_t seed = 0;
  std::map<std::string, FitWindow> fit_windows;  // optional, used by synth
};

inline Scenario scenario_from_json(const json& j) {
  detail::reject_unknown(j, {"particles", "fluid", "schedule", "solver", "seed", "fit_windows"},
                         "scenario");
  Scenario s;
  if (!j.contains("particles") || !j["particles"].is_array())
    throw ParseError("scenario: 'particles' must be an array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j["particles"].size(); ++i) {
    auto sp = particle_from_json(j["particles"][i], "particles[" + std::to_string(i) + "]");
    if (!ids.insert(sp.params.label).second)
      throw ParseError("particles[" + std::to_string(i) + "]: duplicate id '" + sp.params.label + "'");
    s.particles.push_back(std::move(sp));
  }
  if (j.contains("fluid")) s.fluid = fluid_from_json(j["fluid"]);
  if (!j.contains("schedule")) throw ParseError("scenario: missing 'schedule'");
  s.schedule = schedule_from_json(j["schedule"]);
  if (j.contains("solver")) s.solver = solver_from_json(j["solver"]);
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ParseError("scenario.seed: expected an unsigned integer");
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("fit_windows")) s.fit_windows = windows_from_json(j["fit_windows"]);
  for (const auto& sp : s.particles)
    detail::with_context(sp.params.label, [&] { propulsion_magnitude(sp.params, s.fluid); });
  return s;
}

inline json scenario_to_json(const Scenario& s) {
  json parts = json::array();
  for (const auto& p : s.particles) parts.push_back(particle_to_json(p));
  json j = {{"particles", parts},
            {"fluid", fluid_to_json(s.fluid)},
            {"schedule", schedule_to_json(s.schedule)},
            {"solver", solver_to_json(s.solver)},
            {"seed", s.seed}};
  if (!s.fit_windows.empty()) j["fit_windows"] = windows_to_json(s.fit_windows);
  return j;
}

// ---------------------------------------------------------------------------
// Reports

inline json derived_to_json(const DerivedConstants& dc) {
  return {{"tau_linear_s", dc.tau_linear},
          {"tau_rot_s", dc.tau_rot},
          {"v_ss_um_s", dc.v_ss / units::um},
          {"D_t_m2_s", dc.D_t},
          {"D_r_rad2_s", dc.D_r},
          {"moment_of_inertia_kg_m2", dc.moment_of_inertia},
          {"propulsion_force_N", dc.propulsion_force},
          {"transient_distance_nm", dc.transient_distance() / units::nm}};
}

inline json fit_to_json(const FitResult& f) {
  return {{"particle_id", f.label},
          {"v_ss_um_s", f.v_ss_hat / units::um},
          {"F_N", f.F_hat},
          {"F_over_m", f.F_over_m_hat},
          {"phi_rad", f.phi_hat},
          {"t0_s", f.window.t0},
          {"t1_s", f.window.t1},
          {"velocity_residual_um", f.velocity_residual_rms / units::um},
          {"phi_residual_um", f.phi_residual_rms / units::um}};
}

inline json replay_to_json(const ReplayReport& r) {
  json parts = json::array();
  for (const auto& e : r.particles) {
    json p = {{"particle_id", e.label}};
    if (e.error) {
      p["error"] = *e.error;
    } else {
      p["phi_rad"] = e.fit->phi_hat;
      p["F_over_m_fit"] = e.fit->F_over_m_hat;
      p["F_over_m_used"] = e.F_over_m_used;
      p["rmse_um"] = e.rmse / units::um;
    }
    parts.push_back(p);
  }
  return {{"mode", to_string(r.mode)}, {"particles", parts}, {"mean_rmse_um", r.mean_rmse / units::um}};
}

/// Overlay for plotting: one row per reference sample with the simulated
/// position interpolated onto the reference clock.
inline std::string overlay_csv(const ReplayReport& r, const std::vector<Trajectory>& refs) {
  std::string out = "time_s,particle_id,ref_x_um,ref_y_um,sim_x_um,sim_y_um\n";
  for (std::size_t i = 0; i < r.particles.size() && i < refs.size(); ++i) {
    const auto& e = r.particles[i];
    if (!e.simulated) continue;
    for (const auto& s : refs[i].samples) {
      const Vec2 p = position_at(*e.simulated, s.t);
      out += fmt(s.t) + ',' + e.label + ',' + fmt(s.position.x() / units::um) + ',' +
             fmt(s.position.y() / units::um) + ',' + fmt(p.x() / units::um) + ',' +
             fmt(p.y() / units::um) + '\n';
    }
  }
  return out;
}

inline json bench_to_json(const BenchResult& b, int reps) {
  json rmse = json::array();
  for (double v : b.rmse_per_particle) rmse.push_back(v / units::um);
  return {{"reps", reps},
          {"runtime_full", b.runtime_full},
          {"runtime_reduced", b.runtime_reduced},
          {"rmse_between", b.rmse_between / units::um},
          {"rmse_between_units", "um"},
          {"rmse_per_particle_um", rmse},
          {"timings_full", b.timings_full},
          {"timings_reduced", b.timings_reduced}};
}

// ---------------------------------------------------------------------------
// Synthetic ground truth

struct SyntheticDataset {
  std::vector<Trajectory> tracks;
  std::map<std::string, FitWindow> windows;
  json truth;
};

/// Noisy reduced-model tracks standing in for a lab recording, plus the
/// generator truth. Default window per particle: the first command segment,
/// capped at 5 s.
inline SyntheticDataset synthesize(const Scenario& sc, std::uint64_t seed, bool noise = true) {
  SolverConfig cfg = sc.solver;
  cfg.method = Method::reduced_euler;
  cfg.noise.enabled = noise;
  cfg.noise.seed = seed;

  SyntheticDataset d;
  d.tracks = simulate_reduced(sc.particles, sc.fluid, sc.schedule, cfg);
  d.windows = sc.fit_windows;
  const double default_end = std::min(sc.schedule.segment_end(0), 5.0);
  json parts = json::array();
  for (const auto& sp : sc.particles) {
    if (!d.windows.count(sp.params.label)) d.windows[sp.params.label] = {0.0, default_end};
    const DerivedConstants dc = derived_constants(sp.params, sc.fluid, cfg.constants);
    parts.push_back({{"particle_id", sp.params.label},
                     {"phi_rad", normalize_angle(sp.params.dipole_offset_phi)},
                     {"F_over_m", dc.propulsion_force / sp.params.mass},
                     {"v_ss_um_s", dc.v_ss / units::um},
                     {"D_t_m2_s", cfg.noise.D_t.value_or(dc.D_t)},
                     {"D_r_rad2_s", cfg.noise.D_r.value_or(dc.D_r)}});
  }
  d.truth = {{"seed", seed},
             {"noise", noise},
             {"particles", parts},
             {"schedule", schedule_to_json(sc.schedule)},
             {"windows", windows_to_json(d.windows)}};
  return d;
}

}  // namespace janus::io
