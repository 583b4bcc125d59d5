#include "optoatp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>

#include "optoatp/error.hpp"

namespace optoatp {
namespace {

constexpr double kTimeTol = 1e-9;

std::string fmt_time(double t) {
  std::ostringstream os;
  os << t << " h";
  return os.str();
}

State positive_part(const State& x) {
  return {std::max(x.biomass, 0.0), std::max(x.atpase, 0.0), std::max(x.glucose, 0.0),
          std::max(x.lactate, 0.0)};
}

StateDerivative guarded_rhs(const RhsFunction& rhs, const State& x, double light) {
  const State xp = positive_part(x);
  StateDerivative d = rhs(xp, light);
  if (xp.glucose <= 0.0) {
    // Exhausted substrate: no growth, no lactate, no further uptake.
    d.biomass = 0.0;
    d.lactate = 0.0;
    d.glucose = 0.0;
  }
  return d;
}

State clamp_after_step(State x) {
  // Tolerance band for round-off; glucose overshoot past depletion by the
  // stiff Monod term is also projected back to zero.
  for (double* v : {&x.biomass, &x.atpase, &x.glucose, &x.lactate}) {
    if (*v < 0.0) *v = 0.0;
  }
  return x;
}

State rk4_step(const RhsFunction& rhs, const State& x, double light, double h) {
  const StateDerivative k1 = guarded_rhs(rhs, x, light);
  const StateDerivative k2 = guarded_rhs(rhs, x + (0.5 * h) * k1, light);
  const StateDerivative k3 = guarded_rhs(rhs, x + (0.5 * h) * k2, light);
  const StateDerivative k4 = guarded_rhs(rhs, x + h * k3, light);
  return clamp_after_step(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

// Runs n equal steps of size h over [t_start, t_start + n*h] at constant light.
// When `record` is non-null every post-step state is appended.
State run_segment(const RhsFunction& rhs, State x, double t_start, double h, std::size_t n,
                  double light, Trajectory* record) {
  for (std::size_t i = 1; i <= n; ++i) {
    x = rk4_step(rhs, x, light, h);
    const double t = t_start + static_cast<double>(i) * h;
    if (!x.finite()) throw NumericalError("integration produced a non-finite state at t = " + fmt_time(t));
    if (record != nullptr) {
      record->times.push_back(t);
      record->states.push_back(x);
    }
  }
  return x;
}

std::size_t aligned_steps(double length, double step) {
  const double ratio = length / step;
  const double n = std::round(ratio);
  if (n < 1.0 || std::abs(ratio - n) > 1e-7 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "integration step " << step << " h does not evenly divide segment length " << length << " h";
    throw ConfigError(os.str());
  }
  return static_cast<std::size_t>(n);
}

State integrate_impl(const State& x0, const ControlSchedule& schedule, const RhsFunction& rhs,
                     double step, Trajectory* record) {
  schedule.validate(std::numeric_limits<double>::infinity());
  if (!(step > 0.0) || !std::isfinite(step)) throw ConfigError("integration step must be positive");
  if (!x0.finite()) throw DomainError("initial state is not finite");

  // Check alignment before doing any work.
  const std::size_t count = schedule.interval_count();
  std::vector<std::size_t> steps(count);
  for (std::size_t j = 0; j < count; ++j) {
    steps[j] = aligned_steps(schedule.interval_end(j) - schedule.interval_start(j), step);
  }

  State x = clamp_after_step(x0);
  if (record != nullptr) {
    record->times.push_back(schedule.t0);
    record->states.push_back(x);
  }
  for (std::size_t j = 0; j < count; ++j) {
    const double start = schedule.interval_start(j);
    const double h = (schedule.interval_end(j) - start) / static_cast<double>(steps[j]);
    x = run_segment(rhs, x, start, h, steps[j], schedule.levels[j], record);
  }
  if (record != nullptr) record->times.back() = schedule.tf;
  return x;
}

}  // namespace

ControlSchedule ControlSchedule::constant(double t0, double tf, double interval_width, double light) {
  ControlSchedule s;
  s.t0 = t0;
  s.tf = tf;
  s.interval_width = interval_width;
  s.levels.assign(interval_count(t0, tf, interval_width), light);
  return s;
}

std::size_t ControlSchedule::interval_count(double t0, double tf, double interval_width) {
  if (!(tf > t0) || !(interval_width > 0.0)) return 0;
  return static_cast<std::size_t>(std::ceil((tf - t0) / interval_width - kTimeTol));
}

double ControlSchedule::interval_end(std::size_t j) const {
  return std::min(tf, t0 + static_cast<double>(j + 1) * interval_width);
}

std::size_t ControlSchedule::interval_at(double t) const {
  const double pos = (t - t0) / interval_width + kTimeTol;
  if (pos <= 0.0) return 0;
  const auto j = static_cast<std::size_t>(std::floor(pos));
  return std::min(j, levels.size() - 1);
}

void ControlSchedule::validate(double max_light) const {
  if (!std::isfinite(t0) || !std::isfinite(tf) || !(tf > t0)) {
    throw ConfigError("control schedule requires finite tf > t0");
  }
  if (!std::isfinite(interval_width) || !(interval_width > 0.0)) {
    throw ConfigError("control schedule interval width must be positive");
  }
  const std::size_t expected = interval_count();
  if (levels.size() != expected) {
    throw ConfigError("control schedule has " + std::to_string(levels.size()) +
                      " levels, expected " + std::to_string(expected));
  }
  for (std::size_t j = 0; j < levels.size(); ++j) {
    const double u = levels[j];
    if (!std::isfinite(u) || u < 0.0 || u > max_light) {
      std::ostringstream os;
      os << "light level " << u << " in interval " << j << " outside [0, " << max_light << "]";
      throw ConfigError(os.str());
    }
  }
}

Trajectory integrate(const State& x0, const ControlSchedule& schedule, const RhsFunction& rhs,
                     double step) {
  Trajectory traj;
  traj.schedule = schedule;
  const std::size_t per_interval =
      static_cast<std::size_t>(std::max(1.0, std::round(schedule.interval_width / step)));
  traj.times.reserve(per_interval * schedule.levels.size() + 1);
  traj.states.reserve(per_interval * schedule.levels.size() + 1);
  integrate_impl(x0, schedule, rhs, step, &traj);
  return traj;
}

State integrate_final(const State& x0, const ControlSchedule& schedule, const RhsFunction& rhs,
                      double step) {
  return integrate_impl(x0, schedule, rhs, step, nullptr);
}

State advance(const State& x, double t_begin, double t_end, const ControlSchedule& schedule,
              const RhsFunction& rhs, double max_step) {
  if (!(max_step > 0.0)) throw ConfigError("integration step must be positive");
  if (t_begin < schedule.t0 - kTimeTol || t_end > schedule.tf + kTimeTol || t_end < t_begin) {
    std::ostringstream os;
    os << "cannot advance from " << t_begin << " h to " << t_end << " h within schedule ["
       << schedule.t0 << ", " << schedule.tf << "] h";
    throw DataError(os.str());
  }
  State state = x;
  double start = t_begin;
  while (t_end - start > kTimeTol) {
    const std::size_t j = schedule.interval_at(start);
    const double end = std::min(t_end, schedule.interval_end(j));
    const double length = end - start;
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(length / max_step - 1e-7)));
    state = run_segment(rhs, state, start, length / static_cast<double>(n), n, schedule.levels[j],
                        nullptr);
    start = end;
  }
  return state;
}

RhsFunction nominal_rhs(const KineticParams& params) {
  return [params](const State& x, double light) { return rhs_nominal(x, light, params); };
}

BatchMetrics batch_metrics(const State& initial, const State& final, double t0, double tf) {
  if (!(tf > t0)) throw DomainError("batch metrics require tf > t0");
  BatchMetrics m;
  const double consumed = initial.glucose - final.glucose;
  const double produced = final.lactate - initial.lactate;
  m.lactate_productivity = produced / (tf - t0);
  if (consumed != 0.0) {
    m.lactate_on_glucose = produced / consumed;
    m.biomass_on_glucose = (final.biomass - initial.biomass) / consumed;
  }
  return m;
}

BatchMetrics batch_metrics(const Trajectory& t) {
  if (t.states.size() < 2) throw DomainError("batch metrics require a non-degenerate trajectory");
  return batch_metrics(t.initial(), t.final(), t.times.front(), t.times.back());
}

}  // namespace optoatp
