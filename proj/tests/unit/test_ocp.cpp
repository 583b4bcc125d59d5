#include <doctest.h>

#include <cmath>

#include "optoatp/error.hpp"
#include "optoatp/ocp.hpp"

using namespace optoatp;

namespace {

const KineticParams P = KineticParams::nominal();

OCPSpec small_budget(double target) {
  OCPSpec s;
  s.target_yield = target;
  s.swarm_size = 12;
  s.iterations = 15;
  s.stall_iterations = 5;
  s.outer_iterations = 3;
  s.penalty_initial = 1e-2;
  return s;
}

}  // namespace

TEST_CASE("spec validation") {
  OCPSpec s;
  CHECK_NOTHROW(s.validate());
  CHECK(s.interval_count() == 8);
  s.target_yield = 1.2;
  CHECK_THROWS_AS(s.validate(), InfeasibleError);
  s.target_yield = 1.0 + 1e-9;
  CHECK_THROWS_AS(s.validate(), InfeasibleError);
  s = OCPSpec{};
  s.max_initial_glucose = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = OCPSpec{};
  s.swarm_size = 0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = OCPSpec{};
  s.step = 0.3;
  CHECK_THROWS_AS(s.validate(), ConfigError);
  s = OCPSpec{};
  s.model = ModelKind::kHybrid;
  CHECK_THROWS_AS(two_stage_oracle(s, P, nullptr), ConfigError);
}

TEST_CASE("two-stage pattern detection") {
  ControlSchedule s = ControlSchedule::constant(0.0, 8.0, 1.0, 0.0);
  CHECK(two_stage_switch(s, 873.0) == std::optional<std::size_t>(8));
  for (std::size_t j = 3; j < 8; ++j) s.levels[j] = 873.0;
  CHECK(two_stage_switch(s, 873.0) == std::optional<std::size_t>(3));
  s.levels[3] = 872.5;
  CHECK(two_stage_switch(s, 873.0) == std::optional<std::size_t>(3));
  s.levels[3] = 500.0;
  CHECK_FALSE(two_stage_switch(s, 873.0).has_value());
  s.levels[3] = 873.0;
  s.levels[1] = 873.0;
  CHECK_FALSE(two_stage_switch(s, 873.0).has_value());
}

TEST_CASE("tolerance bookkeeping") {
  const OCPSpec s;
  CHECK(within_tolerances({0.01, -0.005}, s));
  CHECK_FALSE(within_tolerances({0.02, 0.0}, s));
  CHECK(total_violation({0.0, 0.0}, s) == 0.0);
  CHECK(total_violation({0.02, -0.01}, s) == doctest::Approx(2.0));
}

TEST_CASE("at the uninduced yield the oracle never switches the light on") {
  // Largest initial glucose that the dark batch depletes, and its yield.
  const OCPSpec base;
  const ControlSchedule dark = ControlSchedule::constant(0.0, 8.0, 1.0, 0.0);
  double s_max = 0.0, yield = 0.0;
  for (int i = 1; i <= 500; ++i) {
    const double s = 0.01 * i;
    const State xf = integrate_final({base.initial_biomass, 0.0, s, 0.0}, dark, nominal_rhs(P));
    if (xf.glucose <= base.depletion_tol) {
      s_max = s;
      yield = xf.lactate / (s - xf.glucose);
    }
  }
  REQUIRE(s_max > 1.0);

  OCPSpec spec;
  spec.target_yield = yield;
  const OCPSolution o = two_stage_oracle(spec, P, nullptr);
  CHECK(o.feasible);
  CHECK(two_stage_switch(o.schedule, spec.max_light) == std::optional<std::size_t>(8));
  CHECK(o.initial_glucose == doctest::Approx(s_max).epsilon(1e-9));
}

TEST_CASE("oracle answer is the best grid point it reports") {
  OCPSpec spec;
  spec.oracle_glucose_resolution = 0.05;
  const OCPSolution o = two_stage_oracle(spec, P, nullptr);
  REQUIRE(o.feasible);
  const auto sw = two_stage_switch(o.schedule, spec.max_light);
  REQUIRE(sw.has_value());
  const double grid = o.initial_glucose / 0.05;
  CHECK(std::abs(grid - std::round(grid)) < 1e-9);
  // Neighbouring grid points with the same switch are worse or infeasible.
  for (double ds : {-0.05, 0.05}) {
    const State xf = integrate_final({spec.initial_biomass, 0.0, o.initial_glucose + ds, 0.0}, o.schedule,
                                     nominal_rhs(P));
    const double y = xf.lactate / (o.initial_glucose + ds - xf.glucose);
    const bool feasible =
        std::abs(xf.glucose) <= spec.depletion_tol && std::abs(y - spec.target_yield) <= spec.yield_tol;
    if (feasible) CHECK(xf.lactate <= o.objective);
  }
}

TEST_CASE("solve is seed-reproducible and feasible solutions obey the objective identity") {
  const OCPSpec spec = small_budget(0.954);
  const OCPSolution a = solve(spec, P, nullptr, 3);
  const OCPSolution b = solve(spec, P, nullptr, 3);
  CHECK(a.schedule.levels == b.schedule.levels);
  CHECK(a.initial_glucose == b.initial_glucose);
  CHECK(a.diagnostics.outer_iterations == 3);
  CHECK(a.diagnostics.penalty_weights.size() == 3);
  CHECK(a.trajectory.times.size() == 801);
  for (double u : a.schedule.levels) {
    CHECK(u >= 0.0);
    CHECK(u <= spec.max_light);
  }
  if (a.feasible) {
    const double bound = spec.yield_tol * a.initial_glucose + spec.target_yield * spec.depletion_tol;
    CHECK(std::abs(a.objective - spec.initial_lactate - spec.target_yield * a.initial_glucose) <= bound);
  }
  CHECK_THROWS_AS(solve(small_budget(1.2), P, nullptr, 3), InfeasibleError);
}

TEST_CASE("spec JSON round trip") {
  OCPSpec s;
  s.target_yield = 0.97;
  s.initial_biomass = 0.05;
  s.swarm_size = 17;
  const OCPSpec r = ocp_spec_from_json(nlohmann::json::parse(to_json(s).dump()));
  CHECK(r.target_yield == 0.97);
  CHECK(r.initial_biomass == 0.05);
  CHECK(r.swarm_size == 17);
  CHECK(r.model == ModelKind::kNominal);
  CHECK_THROWS_AS(ocp_spec_from_json({{"model", "neural"}}), ConfigError);
}
