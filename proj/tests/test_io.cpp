#include <gtest/gtest.h>

#include "janus/io.hpp"

using namespace janus;
using nlohmann::json;

namespace {

std::string data_path(const std::string& name) {
  return std::string(JANUS_SOURCE_DIR) + "/data/" + name;
}

}  // namespace

TEST(Csv, RoundTripWithinNanometre) {
  const io::Scenario sc = io::scenario_from_json(io::parse_json(io::read_file(data_path("three_particles.json")), "scenario"));
  SolverConfig cfg = sc.solver;
  cfg.noise.seed = 9;
  const auto tracks = simulate(sc.particles, sc.fluid, sc.schedule, cfg);
  const auto back = io::trajectories_from_csv(io::trajectories_to_csv(tracks));
  ASSERT_EQ(back.size(), tracks.size());
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    EXPECT_EQ(back[i].label, tracks[i].label);
    ASSERT_EQ(back[i].samples.size(), tracks[i].samples.size());
    for (std::size_t k = 0; k < tracks[i].samples.size(); ++k) {
      EXPECT_LT((back[i].samples[k].position - tracks[i].samples[k].position).norm(), 1e-9 * 1e-6);
      EXPECT_NEAR(back[i].samples[k].t, tracks[i].samples[k].t, 1e-12);
      EXPECT_NEAR(back[i].samples[k].heading, tracks[i].samples[k].heading, 1e-12);
    }
  }
}

TEST(Csv, HeaderAndUnits) {
  Trajectory t{"a", {{0.5, Vec2(1.5e-6, -2e-6), 0.25}}};
  const std::string csv = io::trajectories_to_csv({t});
  EXPECT_EQ(csv, "time_s,particle_id,x_um,y_um,theta_rad\n0.5,a,1.5,-2,0.25\n");
  EXPECT_EQ(io::trajectories_to_csv({t}, false), "time_s,particle_id,x_um,y_um\n0.5,a,1.5,-2\n");
}

TEST(Csv, ColumnOrderInterleavingAndSorting) {
  const auto tr = io::trajectories_from_csv(
      "particle_id,y_um,time_s,x_um\n"
      "b,1,0.2,3\n"
      "a,0,0.1,1\n"
      "b,2,0.1,4\n"
      "a,5,0.0,2\n");
  ASSERT_EQ(tr.size(), 2u);
  EXPECT_EQ(tr[0].label, "b");
  EXPECT_EQ(tr[0].samples[0].t, 0.1);
  EXPECT_DOUBLE_EQ(tr[0].samples[0].position.x(), 4e-6);
  EXPECT_EQ(tr[1].samples[0].t, 0.0);
  EXPECT_DOUBLE_EQ(tr[1].samples[0].position.y(), 5e-6);
}

TEST(Csv, Errors) {
  try {
    io::trajectories_from_csv("time_s,particle_id,x_um\n0,a,1\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("y_um"), std::string::npos);
  }
  EXPECT_THROW(io::trajectories_from_csv(""), ParseError);
  EXPECT_THROW(io::trajectories_from_csv("time_s,particle_id,x_um,y_um\n0,a,1\n"), ParseError);
  EXPECT_THROW(io::trajectories_from_csv("time_s,particle_id,x_um,y_um\n0,a,one,1\n"), ParseError);
  EXPECT_THROW(io::trajectories_from_csv("time_s,particle_id,x_um,y_um\n0,a,1,1\n0,a,2,2\n"),
               ParseError);
  EXPECT_THROW(io::trajectories_from_csv("time_s,particle_id,x_um,y_um\n0,,1,1\n"), ParseError);
  EXPECT_THROW(io::trajectories_from_csv("time_s,particle_id,x_um,y_um\nnan,a,1,1\n"), ParseError);
}

TEST(Json, ScheduleRoundTripAndValidation) {
  const json j = json::parse(R"({"duration_s": 10, "segments": [
      {"t_start_s": 0, "angle_rad": 0.3, "magnitude_mT": 1},
      {"t_start_s": 4, "angle_rad": -1.0, "magnitude_mT": 2.5}]})");
  const ControlSchedule s = io::schedule_from_json(j);
  EXPECT_EQ(s.segments.size(), 2u);
  EXPECT_DOUBLE_EQ(s.segments[1].command.magnitude, 2.5e-3);
  EXPECT_EQ(io::schedule_to_json(s), j);

  EXPECT_THROW(io::schedule_from_json(json::parse(R"({"duration_s": 1, "segments": []})")), ParseError);
  EXPECT_THROW(io::schedule_from_json(json::parse(
                   R"({"duration_s": 1, "segments": [{"t_start_s": 0.5, "angle_rad": 0, "magnitude_mT": 1}]})")),
               ParseError);
  EXPECT_THROW(io::schedule_from_json(json::parse(
                   R"({"duration_s": 1, "segments": [{"t_start_s": 0, "angle_deg": 0, "magnitude_mT": 1}]})")),
               ParseError);
}

TEST(Json, WindowsRoundTrip) {
  const json j = json::parse(R"({"p1": {"t0_s": 0, "t1_s": 5}, "p2": {"t0_s": 1.5, "t1_s": 4}})");
  const auto w = io::windows_from_json(j);
  EXPECT_EQ(w.at("p2").t0, 1.5);
  EXPECT_EQ(io::windows_to_json(w), j);
  EXPECT_THROW(io::windows_from_json(json::parse(R"({"p1": {"t0_s": 5, "t1_s": 5}})")), ParseError);
  EXPECT_THROW(io::windows_from_json(json::parse("[1,2]")), ParseError);
}

TEST(Json, ParticleUnitsAndDefaults) {
  const SimParticle sp = io::particle_from_json(
      json::parse(R"({"id": "q", "F_over_m": 1.18, "phi_rad": 3.82, "x_um": -40, "y_um": 2})"), "p");
  EXPECT_EQ(sp.params.label, "q");
  EXPECT_DOUBLE_EQ(sp.params.mass, 0.401e-12);
  EXPECT_DOUBLE_EQ(sp.params.radius, 4.6e-6);
  EXPECT_DOUBLE_EQ(*sp.params.propulsion_force, 1.18 * 0.401e-12);
  EXPECT_DOUBLE_EQ(sp.position.x(), -40e-6);
  EXPECT_EQ(sp.params.dipole_moment, ParticleParams::kDefaultDipoleMoment);

  const SimParticle back = io::particle_from_json(io::particle_to_json(sp), "p");
  EXPECT_DOUBLE_EQ(*back.params.propulsion_force, *sp.params.propulsion_force);
  EXPECT_DOUBLE_EQ(back.position.y(), sp.position.y());

  EXPECT_THROW(io::particle_from_json(json::parse(R"({"id": "q", "speed": 1})"), "p"), ParseError);
  EXPECT_THROW(io::particle_from_json(json::parse(R"({"F_over_m": 1})"), "p"), ParseError);
  EXPECT_THROW(io::particle_from_json(json::parse(R"({"id": "a,b"})"), "p"), ParseError);
  EXPECT_THROW(io::particle_from_json(json::parse(R"({"id": "q", "mass_ng": -1})"), "p"), ParseError);
  EXPECT_THROW(io::particle_from_json(
                   json::parse(R"({"id": "q", "F_over_m": 1, "propulsion_force_N": 1e-13})"), "p"),
               ParseError);
}

TEST(Json, ScenarioFileLoadsAndRoundTrips) {
  const io::Scenario sc = io::scenario_from_json(io::parse_json(io::read_file(data_path("three_particles.json")), "scenario"));
  ASSERT_EQ(sc.particles.size(), 3u);
  EXPECT_EQ(sc.schedule.segments.size(), 3u);
  EXPECT_EQ(sc.seed, 42u);
  const io::Scenario back = io::scenario_from_json(io::scenario_to_json(sc));
  EXPECT_EQ(io::scenario_to_json(back), io::scenario_to_json(sc));
}

TEST(Json, ScenarioErrors) {
  EXPECT_THROW(io::parse_json("{not json", "scenario"), ParseError);
  EXPECT_THROW(io::scenario_from_json(json::parse(R"({"particles": []})")), ParseError);
  // No F and no fluid gain.
  EXPECT_THROW(io::scenario_from_json(json::parse(R"({"particles": [{"id": "a"}],
      "schedule": {"duration_s": 1, "segments": [{"t_start_s": 0, "angle_rad": 0, "magnitude_mT": 1}]}})")),
               ParseError);
  EXPECT_THROW(io::scenario_from_json(json::parse(R"({"particles": [{"id": "a", "F_over_m": 1}, {"id": "a", "F_over_m": 1}],
      "schedule": {"duration_s": 1, "segments": [{"t_start_s": 0, "angle_rad": 0, "magnitude_mT": 1}]}})")),
               ParseError);
  EXPECT_THROW(io::solver_from_json(json::parse(R"({"method": "rk4"})")), ParseError);
  EXPECT_THROW(io::solver_from_json(json::parse(R"({"dt_s": 0})")), ParseError);
  EXPECT_THROW(io::fluid_from_json(json::parse(R"({"viscosity_cP": -1})")), ParseError);
}

TEST(Json, FluidGainDrivesPropulsion) {
  const io::Scenario sc = io::scenario_from_json(json::parse(R"({"particles": [{"id": "a"}],
      "fluid": {"peroxide_concentration": 0.1, "propulsion_gain_N": 4.01e-12},
      "schedule": {"duration_s": 1, "segments": [{"t_start_s": 0, "angle_rad": 0, "magnitude_mT": 1}]}})"));
  EXPECT_NEAR(propulsion_magnitude(sc.particles[0].params, sc.fluid), 4.01e-13, 1e-25);
}

TEST(Reports, DerivedConstantsInDisplayUnits) {
  SimParticle sp;
  sp.params.propulsion_force = sp.params.mass;
  const json j = io::derived_to_json(derived_constants(sp.params, FluidParams{}));
  EXPECT_NEAR(j["v_ss_um_s"].get<double>(), 3.7146, 1e-4);
  EXPECT_NEAR(j["transient_distance_nm"].get<double>(), 4.1396, 1e-4);
}

TEST(Synthesize, DefaultWindowsAndTruth) {
  io::Scenario sc = io::scenario_from_json(io::parse_json(io::read_file(data_path("three_particles.json")), "scenario"));
  sc.fit_windows.clear();
  const io::SyntheticDataset d = io::synthesize(sc, 3);
  ASSERT_EQ(d.windows.size(), 3u);
  EXPECT_EQ(d.windows.at("p2").t0, 0.0);
  EXPECT_EQ(d.windows.at("p2").t1, 5.0);
  EXPECT_NEAR(d.truth["particles"][1]["F_over_m"].get<double>(), 1.18, 1e-12);
  const io::SyntheticDataset again = io::synthesize(sc, 3);
  EXPECT_EQ(io::trajectories_to_csv(d.tracks), io::trajectories_to_csv(again.tracks));
  EXPECT_NE(io::trajectories_to_csv(d.tracks), io::trajectories_to_csv(io::synthesize(sc, 4).tracks));
}
