#pragma once

// Open-loop optimal light schedule: maximize final lactate over hourly
// piecewise-constant light levels and the initial glucose concentration,
// subject to glucose depletion at tf and a prescribed batch lactate yield.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "optoatp/hybrid.hpp"
#include "optoatp/model.hpp"
#include "optoatp/sim.hpp"

namespace optoatp {

// Inoculum biomass (g/l) assumed for optimization runs.
inline constexpr double kDefaultInoculum = 0.071;

enum class ModelKind { kNominal, kHybrid };

struct OCPSpec {
  double t0 = 0.0;
  double horizon = 8.0;         // tf - t0, h
  double interval_width = 1.0;  // h
  double max_light = kDefaultMaxLight;
  double target_yield = 0.954;  // g/g
  double max_initial_glucose = 5.0;
  double min_initial_glucose = 1e-3;
  double initial_biomass = kDefaultInoculum;
  double initial_lactate = 0.0;
  double initial_atpase = 0.0;
  ModelKind model = ModelKind::kNominal;
  double depletion_tol = 0.01;  // |s_G(tf)|, g/l
  double yield_tol = 0.005;     // |Y_LG - target|, g/g
  double step = kDefaultStep;

  // Solver settings.
  int swarm_size = 40;
  int iterations = 120;
  int stall_iterations = 40;
  int outer_iterations = 6;
  double penalty_initial = 1e-4;
  double penalty_growth = 10.0;
  double oracle_glucose_resolution = 0.01;  // g/l

  std::size_t interval_count() const;
  // Throws ConfigError for malformed settings and InfeasibleError when the
  // target yield exceeds the stoichiometric ceiling of 1 g/g.
  void validate() const;
};

struct ConstraintResiduals {
  double depletion = 0.0;  // s_G(tf), g/l
  double yield = 0.0;      // Y_LG,batch - target, g/g
};

struct OCPDiagnostics {
  int outer_iterations = 0;
  long evaluations = 0;
  std::vector<double> penalty_weights;
  // Total normalized violation of the incumbent after each outer iteration
  // (zero once inside both tolerances).
  std::vector<double> violation_history;
  std::vector<double> objective_history;
  double seconds = 0.0;
};

struct OCPSolution {
  ControlSchedule schedule;
  double max_light = kDefaultMaxLight;
  double initial_glucose = 0.0;  // s_G0, g/l
  Trajectory trajectory;
  double objective = 0.0;  // p_L(tf), g/l
  ConstraintResiduals residuals;
  bool feasible = false;
  OCPDiagnostics diagnostics;
};

// Feasibility and violation measure shared by the solver and the oracle.
bool within_tolerances(const ConstraintResiduals& r, const OCPSpec& spec);
double total_violation(const ConstraintResiduals& r, const OCPSpec& spec);

// Penalty-based direct single shooting. Infeasibility is reported through
// OCPSolution::feasible rather than thrown.
OCPSolution solve(const OCPSpec& spec, const KineticParams& params,
                  std::shared_ptr<const ResidualModels> models, std::uint64_t seed);

// Exhaustive search over two-stage schedules and a uniform s_G0 grid. Both
// orders are enumerated: off then full on (switch at every boundary,
// including never) and full on then off.
OCPSolution two_stage_oracle(const OCPSpec& spec, const KineticParams& params,
                             std::shared_ptr<const ResidualModels> models);

// Index of the first induced interval when the schedule is zero before it and
// max_light from it on (levels within `tol`). Returns levels.size() for an
// all-zero schedule and nullopt when the schedule is not two-stage.
std::optional<std::size_t> two_stage_switch(const ControlSchedule& schedule, double max_light,
                                            double tol = 1.0);

OCPSpec ocp_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const OCPSpec& spec);
nlohmann::json to_json(const OCPSolution& solution);

}  // namespace optoatp
