#pragma once

/**
 * @file session.hpp
 * @brief Live steering session: one global field command shared by every
 * particle, advanced tick by tick, driven by newline-delimited JSON messages.
 *
 * The session is transport-free. `handle_line` consumes one client line and
 * returns the server lines it produces; `tick` advances the clock and returns
 * one state line. A session is not thread-safe; its owner serializes calls.
 *
 * Client -> server: set_field, spawn, remove, pause, resume, reset,
 * record_start, record_stop, set_noise, step.
 * Server -> client: state, ack, error, recording.
 */

#include <algorithm>
#include <cstdint>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "janus/integrate.hpp"
#include "janus/io.hpp"

namespace janus {

struct SessionConfig {
  double tick_rate = 30.0;   // Hz
  double time_scale = 1.0;   // simulated seconds per wall second
  Method method = Method::reduced_euler;
  bool noise = false;
  std::uint64_t seed = 0;
  FieldCommand initial_field{0.0, 1.0 * units::mT};
  FluidParams fluid;
  SolverConfig solver;  // tolerances and diffusion overrides for the full model
  std::vector<SimParticle> initial_particles;

  static constexpr std::size_t kMaxFullParticles = 10;

  double sim_dt() const { return time_scale / tick_rate; }
};

class Session {
 public:
  using json = nlohmann::json;

  explicit Session(SessionConfig cfg) : cfg_(std::move(cfg)) {
    if (!(cfg_.tick_rate > 0.0) || !(cfg_.time_scale > 0.0))
      throw ConfigError("tick rate and time scale must be positive");
    if (cfg_.method == Method::full_stiff &&
        cfg_.initial_particles.size() > SessionConfig::kMaxFullParticles)
      throw ConfigError("full-model sessions are limited to 10 particles");
    reset();
  }

  double clock() const { return clock_; }
  bool paused() const { return paused_; }
  const FieldCommand& field() const { return field_; }
  bool noise() const { return noise_; }
  std::size_t particle_count() const { return particles_.size(); }

  struct ParticleView {
    std::string id;
    Vec2 position;
    double heading;
    double phi;
  };

  std::vector<ParticleView> particles() const {
    std::vector<ParticleView> v;
    for (const auto& p : particles_) v.push_back({p.params.label, p.position(), p.heading(), p.params.dipole_offset_phi});
    return v;
  }

  /// Advances one tick (unless paused) and returns the state line.
  std::string tick() {
    if (!paused_) {
      const double t0 = clock_, t1 = clock_ + cfg_.sim_dt();
      for (auto& p : particles_) p.advance(t0, t1, field_, noise_);
      clock_ = t1;
      if (recording_) capture();
    }
    return state_message().dump();
  }

  /// Handles one client line. Returns every server line it produces, in order.
  std::vector<std::string> handle_line(const std::string& line) {
    json msg;
    try {
      msg = json::parse(line);
    } catch (const json::parse_error& e) {
      return {error("parse", e.what()).dump()};
    }
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string())
      return {error("parse", "message must be an object with a string 'type'").dump()};
    const std::string type = msg["type"].get<std::string>();
    try {
      return dispatch(type, msg);
    } catch (const Error& e) {
      return {error("validation", e.what(), type).dump()};
    } catch (const json::exception& e) {
      return {error("validation", e.what(), type).dump()};
    }
  }

  json state_message() const {
    json parts = json::array();
    for (const auto& p : particles_) {
      const Vec2 pos = p.position();
      parts.push_back({{"id", p.params.label},
                       {"x_um", pos.x() / units::um},
                       {"y_um", pos.y() / units::um},
                       {"theta_rad", p.heading()}});
    }
    return {{"type", "state"},
            {"t", clock_},
            {"field", {{"angle_rad", field_.angle}, {"magnitude_mT", field_.magnitude / units::mT}}},
            {"paused", paused_},
            {"particles", parts}};
  }

  void reset() {
    clock_ = 0.0;
    paused_ = false;
    noise_ = cfg_.noise;
    field_ = cfg_.initial_field.normalized();
    spawn_rng_ = RandomStream(RandomStream::splitmix64(cfg_.seed ^ 0x5350415755ull));
    spawn_counter_ = 0;
    recording_.reset();
    particles_.clear();
    for (const auto& sp : cfg_.initial_particles) add_particle(sp);
  }

 private:
  /// One live particle; the reduced model keeps only position, the full model
  /// keeps a stiff stepper.
  struct Live {
    ParticleParams params;
    DerivedConstants dc;
    RandomStream rng;
    Vec2 pos = Vec2::Zero();
    double theta = 0.0;
    std::unique_ptr<FullModelStepper> full;

    Vec2 position() const { return full ? full->position() : pos; }
    double heading() const { return full ? full->heading() : theta; }

    void advance(double t0, double t1, const FieldCommand& field, bool noise) {
      BrownianStep n;
      if (noise) n = brownian_increment(dc, t1 - t0, rng);
      if (full) {
        full->advance(t0, t1, field);
        if (noise) full->kick(n);
        return;
      }
      theta = normalize_angle(field.angle + params.dipole_offset_phi + n.dtheta);
      pos += dc.v_ss * direction(theta) * (t1 - t0) + n.dp;
    }
  };

  struct Recording {
    double t_start = 0.0;
    std::vector<Trajectory> tracks;
    ControlSchedule schedule;
  };

  void add_particle(SimParticle sp) {
    for (const auto& p : particles_)
      if (p.params.label == sp.params.label)
        throw ConfigError("particle id '" + sp.params.label + "' already exists");
    if (cfg_.method == Method::full_stiff && particles_.size() >= SessionConfig::kMaxFullParticles)
      throw ConfigError("full-model sessions are limited to 10 particles");
    Live l{sp.params.normalized(), {}, RandomStream::for_particle(cfg_.seed, sp.params.label),
           Vec2::Zero(), 0.0, nullptr};
    SolverConfig scfg = cfg_.solver;
    scfg.output_dt = cfg_.sim_dt();
    l.dc = detail::noise_constants(l.params, cfg_.fluid, scfg);
    l.pos = sp.position;
    l.theta = normalize_angle(field_.angle + l.params.dipole_offset_phi);
    if (cfg_.method == Method::full_stiff) {
      ParticleState init;
      init.position = sp.position;
      init.velocity = l.dc.v_ss * direction(l.theta);
      init.heading = l.theta;
      l.full = std::make_unique<FullModelStepper>(l.params, cfg_.fluid, scfg, init);
    }
    particles_.push_back(std::move(l));
  }

  void capture() {
    for (const auto& p : particles_) {
      Trajectory* t = nullptr;
      for (auto& tr : recording_->tracks)
        if (tr.label == p.params.label) t = &tr;
      if (!t) {
        recording_->tracks.push_back({p.params.label, {}});
        t = &recording_->tracks.back();
      }
      t->samples.push_back({clock_ - recording_->t_start, p.position(), p.heading()});
    }
  }

  void note_field_change() {
    if (!recording_) return;
    const double t = clock_ - recording_->t_start;
    auto& segs = recording_->schedule.segments;
    if (!segs.empty() && segs.back().t_start == t)
      segs.back().command = field_;
    else
      segs.push_back({t, field_});
  }

  static json error(const std::string& reason, const std::string& detail,
                    const std::optional<std::string>& echo = std::nullopt) {
    json e = {{"type", "error"}, {"reason", reason}, {"detail", detail}};
    if (echo) e["echo"] = *echo;
    return e;
  }

  static json ack(const std::string& of) { return {{"type", "ack"}, {"of", of}}; }

  static double number(const json& msg, const char* key) {
    if (!msg.contains(key) || !msg[key].is_number())
      throw DomainError(std::string("'") + key + "' must be a number");
    const double v = msg[key].get<double>();
    if (!std::isfinite(v)) throw DomainError(std::string("'") + key + "' must be finite");
    return v;
  }

  std::vector<std::string> dispatch(const std::string& type, const json& msg) {
    if (type == "set_field") {
      FieldCommand c = field_;
      c.angle = number(msg, "angle_rad");
      if (msg.contains("magnitude_mT")) c.magnitude = number(msg, "magnitude_mT") * units::mT;
      field_ = c.normalized();
      note_field_change();
      return {ack(type).dump()};
    }
    if (type == "spawn") return {spawn(msg).dump()};
    if (type == "remove") {
      if (!msg.contains("id") || !msg["id"].is_string()) throw DomainError("'id' must be a string");
      const std::string id = msg["id"].get<std::string>();
      auto it = std::find_if(particles_.begin(), particles_.end(),
                             [&](const Live& l) { return l.params.label == id; });
      if (it == particles_.end()) throw DomainError("no particle '" + id + "'");
      particles_.erase(it);
      return {ack(type).dump()};
    }
    if (type == "pause" || type == "resume") {
      paused_ = (type == "pause");
      return {ack(type).dump()};
    }
    if (type == "reset") {
      reset();
      return {ack(type).dump()};
    }
    if (type == "set_noise") {
      if (!msg.contains("enabled") || !msg["enabled"].is_boolean())
        throw DomainError("'enabled' must be true or false");
      noise_ = msg["enabled"].get<bool>();
      return {ack(type).dump()};
    }
    if (type == "record_start") {
      recording_ = Recording{clock_, {}, {}};
      note_field_change();
      capture();
      return {ack(type).dump()};
    }
    if (type == "record_stop") {
      if (!recording_) throw DomainError("no recording in progress");
      Recording rec = std::move(*recording_);
      recording_.reset();
      double span = 0.0;
      for (const auto& t : rec.tracks)
        if (!t.empty()) span = std::max(span, t.back().t);
      rec.schedule.duration = span;
      json out = {{"type", "recording"},
                  {"csv", io::trajectories_to_csv(rec.tracks)},
                  {"schedule", io::schedule_to_json(rec.schedule)}};
      return {ack(type).dump(), out.dump()};
    }
    if (type == "step") {
      long n = 1;
      if (msg.contains("ticks")) {
        if (!msg["ticks"].is_number_integer() || msg["ticks"].get<long>() < 1)
          throw DomainError("'ticks' must be a positive integer");
        n = msg["ticks"].get<long>();
      }
      std::vector<std::string> out;
      for (long i = 0; i < n; ++i) out.push_back(tick());
      return out;
    }
    return {error("unknown_type", "unknown message type", type).dump()};
  }

  json spawn(const json& msg) {
    SimParticle sp;
    sp.params.mass = 0.401 * units::ng;
    std::string id;
    if (msg.contains("id")) {
      if (!msg["id"].is_string() || msg["id"].get<std::string>().empty())
        throw DomainError("'id' must be a non-empty string");
      id = msg["id"].get<std::string>();
    } else {
      do {
        id = "s" + std::to_string(++spawn_counter_);
      } while (std::any_of(particles_.begin(), particles_.end(),
                           [&](const Live& l) { return l.params.label == id; }));
    }
    sp.params.label = id;
    if (!msg.contains("phi_rad") || (msg["phi_rad"].is_string() && msg["phi_rad"] == "random")) {
      sp.params.dipole_offset_phi = normalize_angle(spawn_rng_.uniform(-std::numbers::pi, std::numbers::pi));
    } else {
      sp.params.dipole_offset_phi = number(msg, "phi_rad");
    }
    sp.params.propulsion_force =
        (msg.contains("F_over_m") ? number(msg, "F_over_m") : 1.17) * sp.params.mass;
    const double x = msg.contains("x_um") ? number(msg, "x_um") : spawn_rng_.uniform(-50.0, 50.0);
    const double y = msg.contains("y_um") ? number(msg, "y_um") : spawn_rng_.uniform(-50.0, 50.0);
    sp.position = Vec2(x * units::um, y * units::um);
    sp.params.validate();
    add_particle(sp);
    return {{"type", "ack"}, {"of", "spawn"}, {"id", id}, {"phi_rad", particles_.back().params.dipole_offset_phi}};
  }

  SessionConfig cfg_;
  double clock_ = 0.0;
  bool paused_ = false;
  bool noise_ = false;
  FieldCommand field_;
  RandomStream spawn_rng_{0};
  long spawn_counter_ = 0;
  std::optional<Recording> recording_;
  std::vector<Live> particles_;
};

/// Feeds a transcript (one client message per line) to a fresh session and
/// returns every server line, newline-terminated.
inline std::string replay_transcript(const SessionConfig& cfg, const std::string& transcript) {
  Session s(cfg);
  std::string out;
  std::istringstream in(transcript);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    for (auto& r : s.handle_line(line)) {
      out += r;
      out += '\n';
    }
  }
  return out;
}

inline SessionConfig session_config_from_scenario(const io::Scenario& sc) {
  SessionConfig c;
  c.fluid = sc.fluid;
  c.solver = sc.solver;
  c.seed = sc.seed;
  c.noise = sc.solver.noise.enabled;
  c.initial_particles = sc.particles;
  if (!sc.schedule.segments.empty()) c.initial_field = sc.schedule.segments.front().command;
  return c;
}

}  // namespace janus
