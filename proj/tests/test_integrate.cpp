#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "janus/integrate.hpp"

using namespace janus;

namespace {

constexpr double kPi = std::numbers::pi;

SimParticle make(const std::string& label, double f_over_m, double phi, Vec2 pos = Vec2::Zero()) {
  SimParticle sp;
  sp.params.label = label;
  sp.params.propulsion_force = f_over_m * sp.params.mass;
  sp.params.dipole_offset_phi = phi;
  sp.position = pos;
  return sp;
}

std::vector<SimParticle> three_particles() {
  return {make("p1", 1.00, -1.09, Vec2(-40e-6, 0)), make("p2", 1.18, 3.82, Vec2(0, 20e-6)),
          make("p3", 1.34, 2.64, Vec2(40e-6, 0))};
}

ControlSchedule three_segments() {
  return {{{0.0, {0.3, 1e-3}}, {5.0, {1.8, 1e-3}}, {10.0, {0.9, 1e-3}}}, 15.0};
}

double max_deviation(const Trajectory& a, const Trajectory& b) {
  EXPECT_EQ(a.samples.size(), b.samples.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.samples.size(); ++i) {
    EXPECT_NEAR(a.samples[i].t, b.samples[i].t, 1e-12);
    m = std::max(m, (a.samples[i].position - b.samples[i].position).norm());
  }
  return m;
}

// Straight run from rest with the heading already aligned:
// x(t) = v (t - tau (1 - exp(-t / tau))).
double straight_from_rest(double v, double tau, double t) {
  return v * (t - tau * (1.0 - std::exp(-t / tau)));
}

}  // namespace

TEST(Reduced, StraightLineAtTerminalSpeed) {
  const auto out = simulate_reduced({make("a", 1.0, 0.0)}, FluidParams{},
                                    ControlSchedule::constant({0.0, 1e-3}, 10.0), SolverConfig{});
  ASSERT_EQ(out.size(), 1u);
  const auto& tr = out[0];
  ASSERT_EQ(tr.samples.size(), 501u);
  EXPECT_NEAR(tr.back().t, 10.0, 1e-12);
  EXPECT_NEAR(tr.back().position.x() / units::um, 37.146343, 1e-5);
  EXPECT_NEAR(tr.back().position.y(), 0.0, 1e-18);
  for (const auto& s : tr.samples) EXPECT_EQ(s.heading, 0.0);
}

TEST(Reduced, ZeroDurationGivesInitialSampleOnly) {
  const auto out = simulate_reduced({make("a", 1.0, 0.2, Vec2(1e-6, 2e-6))}, FluidParams{},
                                    ControlSchedule::constant({0.0, 1e-3}, 0.0), SolverConfig{});
  ASSERT_EQ(out[0].samples.size(), 1u);
  EXPECT_EQ(out[0].front().position, Vec2(1e-6, 2e-6));
}

TEST(Reduced, PhiRotatesDirectionOfTravel) {
  const auto out = simulate_reduced({make("a", 1.0, 0.0), make("b", 1.0, kPi / 2)}, FluidParams{},
                                    ControlSchedule::constant({0.7, 1e-3}, 2.0), SolverConfig{});
  const Vec2 da = out[0].back().position, db = out[1].back().position;
  EXPECT_NEAR(da.dot(db) / (da.norm() * db.norm()), 0.0, 1e-12);
  EXPECT_GT(da.x() * db.y() - da.y() * db.x(), 0.0);  // b is counterclockwise of a
  EXPECT_NEAR(std::atan2(da.y(), da.x()), 0.7, 1e-12);
}

TEST(Reduced, SegmentChangesAreExactForAnyStep) {
  // Segment boundary at 1.05 s does not fall on the 0.1 s grid.
  const ControlSchedule sched{{{0.0, {0.0, 1e-3}}, {1.05, {kPi / 2, 1e-3}}}, 2.0};
  SolverConfig cfg;
  cfg.dt = 0.1;
  const auto out = simulate_reduced({make("a", 1.0, 0.0)}, FluidParams{}, sched, cfg);
  const double v = derived_constants(make("a", 1.0, 0.0).params, FluidParams{}).v_ss;
  EXPECT_NEAR(out[0].back().position.x(), v * 1.05, 1e-15);
  EXPECT_NEAR(out[0].back().position.y(), v * 0.95, 1e-15);
  EXPECT_NEAR(out[0].back().heading, kPi / 2, 1e-15);
}

TEST(Reduced, InvalidInputsRejected) {
  SolverConfig cfg;
  const auto sched = ControlSchedule::constant({0.0, 1e-3}, 1.0);
  cfg.dt = 0.0;
  EXPECT_THROW(simulate_reduced({make("a", 1.0, 0.0)}, FluidParams{}, sched, cfg), ConfigError);
  EXPECT_THROW(simulate_reduced({make("a", 1.0, 0.0)}, FluidParams{},
                                ControlSchedule{{{0.5, {0.0, 1e-3}}}, 1.0}, SolverConfig{}),
               ScheduleError);
  SimParticle bad = make("a", 1.0, 0.0);
  bad.params.mass = -1;
  EXPECT_THROW(simulate_reduced({bad}, FluidParams{}, sched, SolverConfig{}), DomainError);
}

TEST(Full, MatchesReducedOnThreeParticleScenario) {
  SolverConfig cfg;
  FullRunStats stats;
  const auto full = simulate_full(three_particles(), FluidParams{}, three_segments(), cfg, &stats);
  const auto red = simulate_reduced(three_particles(), FluidParams{}, three_segments(), cfg);
  for (int i = 0; i < 3; ++i) EXPECT_LT(max_deviation(full[i], red[i]), 0.1 * units::um) << i;
  EXPECT_GT(stats.accepted_steps, 0);
}

TEST(Full, StraightRunMatchesClosedForm) {
  const SimParticle sp = make("a", 1.0, 0.0);
  const DerivedConstants dc = derived_constants(sp.params, FluidParams{});
  SolverConfig cfg;
  cfg.output_dt = 0.01;
  const auto out = simulate_full({sp}, FluidParams{}, ControlSchedule::constant({0.0, 1e-3}, 1.0), cfg);
  for (const auto& s : out[0].samples) {
    EXPECT_NEAR(s.position.x(), straight_from_rest(dc.v_ss, dc.tau_linear, s.t), 1e-10) << s.t;
    EXPECT_NEAR(s.position.y(), 0.0, 1e-12);
  }
}

TEST(Full, ErrorShrinksWithTolerance) {
  const SimParticle sp = make("a", 1.0, 0.0);
  const DerivedConstants dc = derived_constants(sp.params, FluidParams{});
  const double T = 50e-6;  // several relaxation times, where the transient matters
  const double want = straight_from_rest(dc.v_ss, dc.tau_linear, T);
  double prev = INFINITY;
  for (double tol : {1e-3, 1e-5, 1e-7}) {
    SolverConfig cfg;
    cfg.rel_tol = tol;
    cfg.abs_tol = tol * 1e-9;
    cfg.output_dt = T;
    const auto out =
        simulate_full({sp}, FluidParams{}, ControlSchedule::constant({0.0, 1e-3}, T), cfg);
    const double err = std::abs(out[0].back().position.x() - want);
    EXPECT_LT(err, prev) << tol;
    prev = err;
  }
  EXPECT_LT(prev, 1e-6 * want);
}

TEST(Full, TerminalStatePreserved) {
  SimParticle sp = make("a", 1.18, 0.9);
  const DerivedConstants dc = derived_constants(sp.params, FluidParams{});
  sp.heading = 0.4 + 0.9;
  sp.velocity = dc.v_ss * direction(*sp.heading);
  ParticleState init{sp.position, sp.velocity, *sp.heading, 0.0, 0.0};
  FullModelStepper stepper(sp.params, FluidParams{}, SolverConfig{}, init);
  stepper.advance(0.0, 1.0, {0.4, 1e-3});
  EXPECT_LT((stepper.velocity() - sp.velocity).norm(), 1e-9 * dc.v_ss);
  EXPECT_NEAR(stepper.heading(), 1.3, 1e-12);
  EXPECT_NEAR(stepper.angular_velocity(), 0.0, 1e-9);
  EXPECT_LT((stepper.position() - dc.v_ss * direction(1.3)).norm(), 1e-12);
}

TEST(Full, NinetyFivePercentCrossing) {
  const SimParticle sp = make("a", 1.0, 0.0);
  SolverConfig cfg;
  cfg.rel_tol = 1e-9;
  cfg.abs_tol = 1e-15;
  FullModelStepper stepper(sp.params, FluidParams{}, cfg, ParticleState{});
  const double v_ss = stepper.constants().v_ss;
  const double h = 0.01e-6;
  double t = 0.0, prev_v = 0.0, crossing = NAN;
  while (t < 40e-6) {
    stepper.advance(t, t + h, {0.0, 1e-3});
    t += h;
    const double v = stepper.velocity().x();
    if (prev_v < 0.95 * v_ss && v >= 0.95 * v_ss) {
      crossing = t - h + h * (0.95 * v_ss - prev_v) / (v - prev_v);
      break;
    }
    prev_v = v;
  }
  EXPECT_NEAR(crossing / units::us, 11.128, 0.01);
}

TEST(Full, MisalignedStartRelaxesToField) {
  SimParticle sp = make("a", 1.0, 0.5);
  sp.heading = 0.5 + 2.0;  // dipole 2 rad off the field
  SolverConfig cfg;
  cfg.output_dt = 0.001;
  const auto out =
      simulate_full({sp}, FluidParams{}, ControlSchedule::constant({0.0, 1e-3}, 0.01), cfg);
  EXPECT_NEAR(out[0].back().heading, 0.5, 1e-6);
}

TEST(Noise, SameSeedIsBitIdenticalAndOrderIndependent) {
  SolverConfig cfg;
  cfg.noise.enabled = true;
  cfg.noise.seed = 42;
  auto ps = three_particles();
  const auto a = simulate_reduced(ps, FluidParams{}, three_segments(), cfg);
  const auto b = simulate_reduced(ps, FluidParams{}, three_segments(), cfg);
  std::reverse(ps.begin(), ps.end());
  const auto c = simulate_reduced(ps, FluidParams{}, three_segments(), cfg);
  for (int i = 0; i < 3; ++i) {
    ASSERT_EQ(a[i].samples.size(), b[i].samples.size());
    for (std::size_t k = 0; k < a[i].samples.size(); ++k) {
      EXPECT_EQ(a[i].samples[k].position, b[i].samples[k].position);
      EXPECT_EQ(a[i].samples[k].position, c[2 - i].samples[k].position);
    }
  }
  cfg.noise.seed = 43;
  const auto d = simulate_reduced(three_particles(), FluidParams{}, three_segments(), cfg);
  EXPECT_NE(a[0].back().position, d[0].back().position);
}

TEST(Noise, FreeDiffusionMeanSquaredDisplacement) {
  SolverConfig cfg;
  cfg.noise.enabled = true;
  const FluidParams water;
  const auto sched = ControlSchedule::constant({0.0, 1e-3}, 1.0);
  std::vector<SimParticle> ps;
  for (int i = 0; i < 400; ++i) ps.push_back(make("d" + std::to_string(i), 0.0, 0.0));
  for (Method m : {Method::reduced_euler, Method::full_stiff}) {
    cfg.method = m;
    const auto out = simulate(ps, water, sched, cfg);
    double msd = 0.0;
    for (const auto& tr : out) msd += tr.back().position.squaredNorm();
    msd /= static_cast<double>(out.size());
    const double D_t = derived_constants(ps[0].params, water).D_t;
    // 4 D t in the plane; 400 walkers give ~5% standard error.
    EXPECT_NEAR(msd / (4 * D_t * 1.0), 1.0, 0.2) << to_string(m);
  }
}

TEST(Noise, DiffusionOverridesApply) {
  SolverConfig cfg;
  cfg.noise.enabled = true;
  cfg.noise.D_t = 0.0;
  cfg.noise.D_r = 0.0;
  const auto noisy = simulate_reduced(three_particles(), FluidParams{}, three_segments(), cfg);
  const auto clean = simulate_reduced(three_particles(), FluidParams{}, three_segments(), SolverConfig{});
  for (int i = 0; i < 3; ++i) EXPECT_EQ(max_deviation(noisy[i], clean[i]), 0.0);
}
