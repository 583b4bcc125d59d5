#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "optoatp/model.hpp"

namespace optoatp {

// Default fixed RK4 step, in hours.
inline constexpr double kDefaultStep = 0.01;
// Round-off tolerance on negative state components.
inline constexpr double kClampEpsilon = 1e-9;
// Upper bound of the green-light actuator (umol m^-2 s^-1).
inline constexpr double kDefaultMaxLight = 873.0;

// Piecewise-constant light input. Interval j covers
// [t0 + j*interval_width, min(t0 + (j+1)*interval_width, tf)).
struct ControlSchedule {
  double t0 = 0.0;
  double tf = 0.0;
  double interval_width = 1.0;
  std::vector<double> levels;

  static ControlSchedule constant(double t0, double tf, double interval_width, double light);

  static std::size_t interval_count(double t0, double tf, double interval_width);
  std::size_t interval_count() const { return interval_count(t0, tf, interval_width); }

  double interval_start(std::size_t j) const { return t0 + static_cast<double>(j) * interval_width; }
  double interval_end(std::size_t j) const;

  // Interval index containing t; t == tf maps to the last interval.
  std::size_t interval_at(double t) const;
  double level_at(double t) const { return levels[interval_at(t)]; }

  // Throws ConfigError on a malformed schedule or a level outside [0, max_light].
  void validate(double max_light = kDefaultMaxLight) const;
};

using RhsFunction = std::function<StateDerivative(const State&, double light)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  ControlSchedule schedule;

  const State& initial() const { return states.front(); }
  const State& final() const { return states.back(); }
  double light_at_sample(std::size_t i) const { return schedule.level_at(times[i]); }
};

// Fixed-step classical RK4 over the whole schedule. The step must divide the
// interval width so that input switches fall on step boundaries. States are
// recorded at every step.
//
// Positivity handling: right-hand sides are evaluated on the componentwise
// non-negative part of each stage state; once glucose is exhausted the
// biomass and lactate derivatives are forced to zero and glucose may not
// decrease further; negative components after a step are clamped to zero.
Trajectory integrate(const State& x0, const ControlSchedule& schedule, const RhsFunction& rhs,
                     double step = kDefaultStep);

// Same integration, returning only the final state.
State integrate_final(const State& x0, const ControlSchedule& schedule, const RhsFunction& rhs,
                      double step = kDefaultStep);

// Integrates from t_begin to t_end (both within the schedule horizon),
// splitting at input switches. Each sub-interval uses the smallest number of
// equal steps not exceeding max_step, so arbitrary sample times are allowed.
State advance(const State& x, double t_begin, double t_end, const ControlSchedule& schedule,
              const RhsFunction& rhs, double max_step = kDefaultStep);

RhsFunction nominal_rhs(const KineticParams& params);

struct BatchMetrics {
  std::optional<double> lactate_on_glucose;  // Y_LG,batch, g/g
  std::optional<double> biomass_on_glucose;  // Y_BG,batch, g/g
  double lactate_productivity = 0.0;         // r_L,batch, g/l/h

  // False when no glucose was consumed; yields are then left unset.
  bool yields_defined() const { return lactate_on_glucose.has_value(); }
};

BatchMetrics batch_metrics(const State& initial, const State& final, double t0, double tf);
BatchMetrics batch_metrics(const Trajectory& trajectory);

}  // namespace optoatp
