#include "optoatp/ocp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "optoatp/error.hpp"
#include "optoatp/parallel.hpp"
#include "optoatp/pso.hpp"

namespace optoatp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Evaluation {
  bool ok = false;
  double objective = 0.0;
  ConstraintResiduals residuals;
};

ControlSchedule make_schedule(const OCPSpec& spec, std::vector<double> levels) {
  ControlSchedule s;
  s.t0 = spec.t0;
  s.tf = spec.t0 + spec.horizon;
  s.interval_width = spec.interval_width;
  s.levels = std::move(levels);
  return s;
}

State initial_state(const OCPSpec& spec, double glucose) {
  return {spec.initial_biomass, spec.initial_atpase, glucose, spec.initial_lactate};
}

Evaluation evaluate_final(const OCPSpec& spec, const State& x0, const State& xf) {
  Evaluation e;
  e.ok = xf.finite();
  e.objective = xf.lactate;
  e.residuals.depletion = xf.glucose;
  const double consumed = x0.glucose - xf.glucose;
  const double yield = consumed > 0.0 ? (xf.lactate - x0.lactate) / consumed : 0.0;
  e.residuals.yield = yield - spec.target_yield;
  return e;
}

Evaluation evaluate(const OCPSpec& spec, const RhsFunction& rhs, std::vector<double> levels,
                    double glucose) {
  const State x0 = initial_state(spec, glucose);
  try {
    const State xf = integrate_final(x0, make_schedule(spec, std::move(levels)), rhs, spec.step);
    return evaluate_final(spec, x0, xf);
  } catch (const NumericalError&) {
    return {};
  } catch (const DomainError&) {
    return {};
  }
}

// Quadratic penalty on the part of each residual beyond half its tolerance,
// so that penalized optima sit strictly inside the feasible band.
double penalized(const Evaluation& e, const OCPSpec& spec, double weight) {
  if (!e.ok) return kInf;
  auto excess = [](double v, double tol) { return std::max(0.0, std::abs(v) - 0.5 * tol) / tol; };
  const double a = excess(e.residuals.depletion, spec.depletion_tol);
  const double b = excess(e.residuals.yield, spec.yield_tol);
  return -e.objective + weight * (a * a + b * b);
}

std::vector<double> levels_of(const std::vector<double>& z) { return {z.begin(), z.end() - 1}; }

RhsFunction select_rhs(const OCPSpec& spec, const KineticParams& params,
                       std::shared_ptr<const ResidualModels> models) {
  if (spec.model == ModelKind::kHybrid) {
    if (!models) throw ConfigError("hybrid optimization requires trained residual models");
    return hybrid_rhs(params, std::move(models));
  }
  return nominal_rhs(params);
}

OCPSolution finish(const OCPSpec& spec, const RhsFunction& rhs, std::vector<double> levels,
                   double glucose) {
  OCPSolution sol;
  sol.schedule = make_schedule(spec, std::move(levels));
  sol.max_light = spec.max_light;
  sol.initial_glucose = glucose;
  const State x0 = initial_state(spec, glucose);
  sol.trajectory = integrate(x0, sol.schedule, rhs, spec.step);
  const Evaluation e = evaluate_final(spec, x0, sol.trajectory.final());
  sol.objective = e.objective;
  sol.residuals = e.residuals;
  sol.feasible = within_tolerances(e.residuals, spec);
  return sol;
}

using Penalized = std::function<double(const std::vector<double>&)>;

// Re-optimizes the last coordinate (s_G0) of z by a shrinking 1-D pattern
// search starting at +-radius and stopping below min_step. Returns the
// penalized value at the result.
double refit_glucose(const Penalized& f, std::vector<double>& z, double fz, double lo, double hi,
                     double radius, double min_step, long& evaluations) {
  double step = radius;
  while (step > min_step) {
    bool moved = false;
    for (double dir : {-1.0, 1.0}) {
      std::vector<double> c = z;
      c.back() = std::clamp(z.back() + dir * step, lo, hi);
      if (c.back() == z.back()) continue;
      const double fc = f(c);
      ++evaluations;
      if (fc < fz) {
        z = std::move(c);
        fz = fc;
        moved = true;
        break;
      }
    }
    if (!moved) step *= 0.5;
  }
  return fz;
}

// Coordinate pattern search on the penalized objective. Every move of a light
// level is followed by a local re-fit of s_G0, which keeps the iterate on the
// thin set where both equality constraints hold. While the pattern is still
// coarse, levels are also snapped to their bounds, singly and in blocks: the
// yield is not monotone in the light level, so bang-bang moves can escape
// traps that small steps cannot.
std::vector<double> polish(const Penalized& f, std::vector<double> z, const std::vector<double>& lo,
                           const std::vector<double>& hi, long& evaluations) {
  const std::size_t g = z.size() - 1;
  const double glucose_span = hi[g] - lo[g];
  double scale = 0.125;  // pattern step as a fraction of each level's range
  double fz = f(z);
  ++evaluations;
  fz = refit_glucose(f, z, fz, lo[g], hi[g], scale * glucose_span, 1e-6 * glucose_span, evaluations);

  auto attempt = [&](std::vector<double> c) {
    if (c == z) return false;
    double fc = f(c);
    ++evaluations;
    const double radius = 0.4 * scale * glucose_span;
    fc = refit_glucose(f, c, fc, lo[g], hi[g], radius, 1e-3 * radius, evaluations);
    if (fc < fz) {
      z = std::move(c);
      fz = fc;
      return true;
    }
    return false;
  };

  while (scale > 1e-3) {
    const bool coarse = scale > 0.03;
    bool improved = false;
    for (std::size_t d = 0; d < g && !improved; ++d) {
      const double step = scale * (hi[d] - lo[d]);
      std::vector<double> values{z[d] - step, z[d] + step};
      if (coarse) values.insert(values.end(), {lo[d], hi[d]});
      for (double value : values) {
        std::vector<double> c = z;
        c[d] = std::clamp(value, lo[d], hi[d]);
        if (attempt(std::move(c))) {
          improved = true;
          break;
        }
      }
    }
    // Block moves: every level from interval j on (or up to j) to one bound.
    for (std::size_t j = 0; coarse && j < g && !improved; ++j) {
      for (int variant = 0; variant < 4 && !improved; ++variant) {
        std::vector<double> c = z;
        const bool suffix = variant < 2;
        const bool upper = variant % 2 == 1;
        for (std::size_t d = suffix ? j : 0; d < (suffix ? g : j + 1); ++d) c[d] = upper ? hi[d] : lo[d];
        improved = attempt(std::move(c));
      }
    }
    if (!improved) scale *= 0.5;
  }
  refit_glucose(f, z, fz, lo[g], hi[g], 1e-3 * glucose_span, 1e-7 * glucose_span, evaluations);
  return z;
}

}  // namespace

std::size_t OCPSpec::interval_count() const {
  return ControlSchedule::interval_count(t0, t0 + horizon, interval_width);
}

void OCPSpec::validate() const {
  auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!std::isfinite(target_yield) || target_yield <= 0.0)
    throw ConfigError("target yield must be positive");
  if (target_yield > 1.0) {
    std::ostringstream os;
    os << "target yield " << target_yield << " g/g exceeds the stoichiometric ceiling of 1 g/g";
    throw InfeasibleError(os.str());
  }
  if (!std::isfinite(t0)) throw ConfigError("t0 must be finite");
  if (!positive(horizon)) throw ConfigError("horizon must be positive");
  if (!positive(interval_width)) throw ConfigError("interval width must be positive");
  if (!positive(max_light)) throw ConfigError("max light must be positive");
  if (!positive(max_initial_glucose) || !positive(min_initial_glucose) ||
      !(min_initial_glucose < max_initial_glucose))
    throw ConfigError("initial glucose bounds must satisfy 0 < min < max");
  if (!std::isfinite(initial_biomass) || initial_biomass < 0.0 || !std::isfinite(initial_lactate) ||
      initial_lactate < 0.0 || !std::isfinite(initial_atpase) || initial_atpase < 0.0)
    throw ConfigError("fixed initial states must be finite and non-negative");
  if (!positive(depletion_tol) || !positive(yield_tol)) throw ConfigError("tolerances must be positive");
  if (!positive(step)) throw ConfigError("integration step must be positive");
  const double steps = interval_width / step;
  if (std::abs(steps - std::round(steps)) > 1e-7 * steps)
    throw ConfigError("integration step must divide the interval width");
  if (swarm_size < 1 || iterations < 0 || outer_iterations < 1 || stall_iterations < 0)
    throw ConfigError("invalid solver budget");
  if (!positive(penalty_initial) || !(penalty_growth >= 1.0)) throw ConfigError("invalid penalty schedule");
  if (!positive(oracle_glucose_resolution)) throw ConfigError("oracle resolution must be positive");
}

bool within_tolerances(const ConstraintResiduals& r, const OCPSpec& spec) {
  return std::abs(r.depletion) <= spec.depletion_tol && std::abs(r.yield) <= spec.yield_tol;
}

double total_violation(const ConstraintResiduals& r, const OCPSpec& spec) {
  return std::max(0.0, std::abs(r.depletion) - spec.depletion_tol) / spec.depletion_tol +
         std::max(0.0, std::abs(r.yield) - spec.yield_tol) / spec.yield_tol;
}

OCPSolution solve(const OCPSpec& spec, const KineticParams& params,
                  std::shared_ptr<const ResidualModels> models, std::uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  spec.validate();
  params.validate();
  const RhsFunction rhs = select_rhs(spec, params, std::move(models));

  const std::size_t n = spec.interval_count();
  std::vector<double> lo(n + 1, 0.0), hi(n + 1, spec.max_light);
  lo[n] = spec.min_initial_glucose;
  hi[n] = spec.max_initial_glucose;

  auto eval_z = [&](const std::vector<double>& z) { return evaluate(spec, rhs, levels_of(z), z.back()); };

  // Generic starting guesses: dark, half and full light at mid glucose.
  const double mid = 0.5 * (spec.min_initial_glucose + spec.max_initial_glucose);
  std::vector<std::vector<double>> generic;
  for (double fraction : {0.0, 0.5, 1.0}) {
    std::vector<double> z(n + 1, fraction * spec.max_light);
    z[n] = mid;
    generic.push_back(std::move(z));
  }

  OCPDiagnostics diag;
  // `current` is carried through the penalty continuation; `incumbent` is the
  // best point seen so far (feasible beats infeasible, then objective, and
  // among infeasible points the smaller violation).
  std::optional<std::vector<double>> current;
  std::optional<std::vector<double>> incumbent;
  Evaluation incumbent_eval;

  auto better = [&](const Evaluation& cand) {
    if (!cand.ok) return false;
    if (!incumbent) return true;
    const double vc = total_violation(cand.residuals, spec);
    const double vi = total_violation(incumbent_eval.residuals, spec);
    if (vc < vi) return true;
    return vc == vi && cand.objective > incumbent_eval.objective;
  };
  auto consider = [&](const std::vector<double>& z) {
    const Evaluation e = eval_z(z);
    ++diag.evaluations;
    if (better(e)) {
      incumbent = z;
      incumbent_eval = e;
    }
  };

  for (int k = 0; k < spec.outer_iterations; ++k) {
    const double weight = spec.penalty_initial * std::pow(spec.penalty_growth, k);
    auto f = [&](const std::vector<double>& z) { return penalized(eval_z(z), spec, weight); };

    std::vector<std::vector<double>> seeds;
    if (current) seeds.push_back(*current);
    if (incumbent && incumbent != current) seeds.push_back(*incumbent);
    seeds.insert(seeds.end(), generic.begin(), generic.end());

    pso::Options opt;
    opt.swarm_size = spec.swarm_size;
    opt.max_iterations = spec.iterations;
    opt.stall_iterations = spec.stall_iterations;
    opt.seed = seed + static_cast<std::uint64_t>(k) * 0x9E3779B97F4A7C15ULL;
    const pso::Result r = pso::minimize(f, lo, hi, opt, seeds);
    diag.evaluations += r.evaluations;

    std::vector<std::vector<double>> starts{r.best};
    if (current && *current != r.best) starts.push_back(*current);
    std::optional<std::vector<double>> next;
    double next_value = kInf;
    for (const auto& start : starts) {
      std::vector<double> z = polish(f, start, lo, hi, diag.evaluations);
      const double v = f(z);
      ++diag.evaluations;
      consider(z);
      if (!next || v < next_value) {
        next = std::move(z);
        next_value = v;
      }
    }
    current = next;
    diag.penalty_weights.push_back(weight);
    diag.violation_history.push_back(incumbent ? total_violation(incumbent_eval.residuals, spec) : kInf);
    diag.objective_history.push_back(incumbent ? incumbent_eval.objective : -kInf);
    diag.outer_iterations = k + 1;
  }
  if (!incumbent) throw NumericalError("optimal control: every candidate simulation failed");

  OCPSolution sol = finish(spec, rhs, levels_of(*incumbent), incumbent->back());
  diag.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  sol.diagnostics = std::move(diag);
  return sol;
}

OCPSolution two_stage_oracle(const OCPSpec& spec, const KineticParams& params,
                             std::shared_ptr<const ResidualModels> models) {
  const auto started = std::chrono::steady_clock::now();
  spec.validate();
  params.validate();
  const RhsFunction rhs = select_rhs(spec, params, std::move(models));

  const std::size_t n = spec.interval_count();
  const auto grid = static_cast<std::size_t>(
      std::floor(spec.max_initial_glucose / spec.oracle_glucose_resolution + 1e-9));
  // Policies 0..n: dark then light from interval k (k == n never induces).
  // Policies n+1..2n-1: light then dark from interval k - n.
  const std::size_t policies = 2 * n;
  std::vector<Evaluation> evals(policies * grid);
  auto glucose_at = [&](std::size_t g) {
    return static_cast<double>(g + 1) * spec.oracle_glucose_resolution;
  };
  auto levels_for = [&](std::size_t policy) {
    std::vector<double> levels(n, 0.0);
    if (policy <= n) {
      for (std::size_t j = policy; j < n; ++j) levels[j] = spec.max_light;
    } else {
      for (std::size_t j = 0; j < policy - n; ++j) levels[j] = spec.max_light;
    }
    return levels;
  };

  parallel_for(evals.size(), [&](std::size_t idx) {
    const std::size_t sw = idx / grid;
    const std::size_t g = idx % grid;
    evals[idx] = evaluate(spec, rhs, levels_for(sw), glucose_at(g));
  });

  std::optional<std::size_t> best;
  std::size_t closest = 0;
  for (std::size_t idx = 0; idx < evals.size(); ++idx) {
    const Evaluation& e = evals[idx];
    if (!e.ok) continue;
    if (within_tolerances(e.residuals, spec) && (!best || e.objective > evals[*best].objective)) best = idx;
    if (!evals[closest].ok ||
        total_violation(e.residuals, spec) < total_violation(evals[closest].residuals, spec))
      closest = idx;
  }
  const std::size_t pick = best.value_or(closest);
  OCPSolution sol = finish(spec, rhs, levels_for(pick / grid), glucose_at(pick % grid));
  sol.diagnostics.evaluations = static_cast<long>(evals.size());
  sol.diagnostics.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return sol;
}

std::optional<std::size_t> two_stage_switch(const ControlSchedule& schedule, double max_light,
                                            double tol) {
  std::size_t first_on = schedule.levels.size();
  for (std::size_t j = 0; j < schedule.levels.size(); ++j) {
    const double u = schedule.levels[j];
    const bool off = std::abs(u) <= tol;
    const bool on = std::abs(u - max_light) <= tol;
    if (!off && !on) return std::nullopt;
    if (on && first_on == schedule.levels.size()) first_on = j;
    if (off && first_on < j) return std::nullopt;
  }
  return first_on;
}

OCPSpec ocp_spec_from_json(const nlohmann::json& j) {
  OCPSpec s;
  try {
    s.t0 = j.value("t0_h", s.t0);
    s.horizon = j.value("horizon_h", s.horizon);
    s.interval_width = j.value("interval_width_h", s.interval_width);
    s.max_light = j.value("u_max", s.max_light);
    s.target_yield = j.value("target_yield", s.target_yield);
    s.max_initial_glucose = j.value("s_G_max", s.max_initial_glucose);
    s.min_initial_glucose = j.value("s_G_min", s.min_initial_glucose);
    s.initial_biomass = j.value("B_c0", s.initial_biomass);
    s.initial_lactate = j.value("p_L0", s.initial_lactate);
    s.initial_atpase = j.value("E0", s.initial_atpase);
    const std::string model = j.value("model", std::string("nominal"));
    if (model == "nominal") {
      s.model = ModelKind::kNominal;
    } else if (model == "hybrid") {
      s.model = ModelKind::kHybrid;
    } else {
      throw ConfigError("model must be 'nominal' or 'hybrid', got '" + model + "'");
    }
    s.depletion_tol = j.value("depletion_tol", s.depletion_tol);
    s.yield_tol = j.value("yield_tol", s.yield_tol);
    s.step = j.value("step_h", s.step);
    s.swarm_size = j.value("swarm_size", s.swarm_size);
    s.iterations = j.value("iterations", s.iterations);
    s.stall_iterations = j.value("stall_iterations", s.stall_iterations);
    s.outer_iterations = j.value("outer_iterations", s.outer_iterations);
    s.penalty_initial = j.value("penalty_initial", s.penalty_initial);
    s.penalty_growth = j.value("penalty_growth", s.penalty_growth);
    s.oracle_glucose_resolution = j.value("oracle_glucose_resolution", s.oracle_glucose_resolution);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed optimization spec: ") + e.what());
  }
  return s;
}

nlohmann::json to_json(const OCPSpec& s) {
  return {{"t0_h", s.t0},
          {"horizon_h", s.horizon},
          {"interval_width_h", s.interval_width},
          {"u_max", s.max_light},
          {"target_yield", s.target_yield},
          {"s_G_max", s.max_initial_glucose},
          {"s_G_min", s.min_initial_glucose},
          {"B_c0", s.initial_biomass},
          {"p_L0", s.initial_lactate},
          {"E0", s.initial_atpase},
          {"model", s.model == ModelKind::kHybrid ? "hybrid" : "nominal"},
          {"depletion_tol", s.depletion_tol},
          {"yield_tol", s.yield_tol},
          {"step_h", s.step},
          {"swarm_size", s.swarm_size},
          {"iterations", s.iterations},
          {"stall_iterations", s.stall_iterations},
          {"outer_iterations", s.outer_iterations},
          {"penalty_initial", s.penalty_initial},
          {"penalty_growth", s.penalty_growth},
          {"oracle_glucose_resolution", s.oracle_glucose_resolution}};
}

nlohmann::json to_json(const OCPSolution& s) {
  nlohmann::json j;
  j["feasible"] = s.feasible;
  j["s_G0"] = s.initial_glucose;
  j["objective_p_L_tf"] = s.objective;
  j["schedule"] = {{"t0_h", s.schedule.t0},
                   {"tf_h", s.schedule.tf},
                   {"interval_width_h", s.schedule.interval_width},
                   {"levels", s.schedule.levels}};
  j["residuals"] = {{"depletion_s_G_tf", s.residuals.depletion}, {"yield_error", s.residuals.yield}};
  const auto sw = two_stage_switch(s.schedule, s.max_light);
  j["two_stage_switch_h"] = sw ? nlohmann::json(s.schedule.interval_start(*sw)) : nlohmann::json(nullptr);
  j["diagnostics"] = {{"outer_iterations", s.diagnostics.outer_iterations},
                      {"evaluations", s.diagnostics.evaluations},
                      {"penalty_weights", s.diagnostics.penalty_weights},
                      {"violation_history", s.diagnostics.violation_history},
                      {"objective_history", s.diagnostics.objective_history},
                      {"seconds", s.diagnostics.seconds}};
  return j;
}

}  // namespace optoatp
