#include "optoatp/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "optoatp/error.hpp"

namespace optoatp {
namespace {

struct ColumnScale {
  double glucose = 1.0;
  double biomass = 1.0;
  double lactate = 1.0;
};

double column_sd(const std::vector<Sample>& samples, std::optional<double> Sample::*field) {
  double sum = 0.0, sum2 = 0.0;
  int n = 0;
  for (const Sample& s : samples) {
    if (const auto& v = s.*field) {
      sum += *v;
      sum2 += *v * *v;
      ++n;
    }
  }
  if (n < 2) return 1.0;
  const double mean = sum / n;
  const double var = std::max(0.0, sum2 / n - mean * mean);
  const double sd = std::sqrt(var);
  return sd > 1e-12 ? sd : 1.0;
}

bool uses_log(const ParamBound& b) { return b.log_scale && b.lower > 0.0; }

}  // namespace

void FitSpec::validate() const {
  if (bounds.empty()) throw ConfigError("fit spec has no free parameters");
  std::set<std::size_t> seen;
  for (const ParamBound& b : bounds) {
    if (b.index >= KineticParams::kCount) throw ConfigError("fit bound refers to an unknown parameter");
    const std::string name(kParamNames[b.index]);
    if (!seen.insert(b.index).second) throw ConfigError("parameter " + name + " bounded twice");
    if (!std::isfinite(b.lower) || !std::isfinite(b.upper) || !(b.lower < b.upper))
      throw ConfigError("bounds for " + name + " must be finite with lower < upper");
    if (b.log_scale && b.lower <= 0.0 && b.index != 4 && b.index != 5 && b.index != 12)
      throw ConfigError("log-scaled bounds for " + name + " need lower > 0");
  }
  if (swarm_size < 1) throw ConfigError("swarm_size must be at least 1");
  if (max_iterations < 0) throw ConfigError("max_iterations must be non-negative");
  if (!(step > 0.0)) throw ConfigError("integration step must be positive");
  if (weights.glucose < 0 || weights.biomass < 0 || weights.lactate < 0)
    throw ConfigError("state weights must be non-negative");
}

double sse_objective(const KineticParams& params, std::span<const BatchDataset> datasets,
                     const StateWeights& weights, double step) {
  double total = 0.0;
  try {
    params.validate();
    const RhsFunction model = nominal_rhs(params);
    for (const BatchDataset& data : datasets) {
      const ColumnScale scale{column_sd(data.samples, &Sample::glucose),
                              column_sd(data.samples, &Sample::biomass),
                              column_sd(data.samples, &Sample::lactate)};
      State x = data.initial_state;
      double t = data.schedule.t0;
      for (const Sample& s : data.samples) {
        x = advance(x, t, s.t, data.schedule, model, step);
        t = s.t;
        auto add = [&](const std::optional<double>& measured, double simulated, double sd, double w) {
          if (!measured) return;
          const double e = (simulated - *measured) / sd;
          total += w * e * e;
        };
        add(s.glucose, x.glucose, scale.glucose, weights.glucose);
        add(s.biomass, x.biomass, scale.biomass, weights.biomass);
        add(s.lactate, x.lactate, scale.lactate, weights.lactate);
      }
    }
  } catch (const NumericalError&) {
    return kFailurePenalty;
  } catch (const DomainError&) {
    return kFailurePenalty;
  }
  return std::isfinite(total) ? total : kFailurePenalty;
}

FitResult fit_parameters(std::span<const BatchDataset> datasets, const FitSpec& spec) {
  if (datasets.empty()) throw ConfigError("parameter fitting needs at least one dataset");
  spec.validate();
  for (const BatchDataset& d : datasets) d.validate();

  const std::size_t dim = spec.bounds.size();
  std::vector<double> lower(dim), upper(dim), seed(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const ParamBound& b = spec.bounds[i];
    const bool lg = uses_log(b);
    lower[i] = lg ? std::log(b.lower) : b.lower;
    upper[i] = lg ? std::log(b.upper) : b.upper;
    const double v = spec.start.at(b.index);
    seed[i] = lg ? std::log(std::max(v, b.lower)) : v;
  }

  auto decode = [&](const std::vector<double>& z) {
    KineticParams p = spec.start;
    for (std::size_t i = 0; i < dim; ++i) {
      p.at(spec.bounds[i].index) = uses_log(spec.bounds[i]) ? std::exp(z[i]) : z[i];
    }
    return p;
  };

  pso::Options opt;
  opt.swarm_size = spec.swarm_size;
  opt.max_iterations = spec.max_iterations;
  opt.seed = spec.seed;
  const pso::Result r = pso::minimize(
      [&](const std::vector<double>& z) { return sse_objective(decode(z), datasets, spec.weights, spec.step); },
      lower, upper, opt, {seed});

  // The start particle maps back to spec.start exactly, not via exp(log(v)).
  std::vector<double> seed_clipped(dim);
  KineticParams start_clipped = spec.start;
  for (std::size_t i = 0; i < dim; ++i) {
    seed_clipped[i] = std::clamp(seed[i], lower[i], upper[i]);
    const ParamBound& b = spec.bounds[i];
    start_clipped.at(b.index) = std::clamp(spec.start.at(b.index), b.lower, b.upper);
  }
  FitResult out;
  out.params = r.best == seed_clipped ? start_clipped : decode(r.best);
  out.objective = r.best_value;
  out.history = r.history;
  out.evaluations = r.evaluations;
  return out;
}

nlohmann::json to_json(const KineticParams& params) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < KineticParams::kCount; ++i) j[std::string(kParamNames[i])] = params.at(i);
  return j;
}

KineticParams params_from_json(const nlohmann::json& j, const KineticParams& base) {
  if (!j.is_object()) throw ConfigError("kinetic parameters must be a JSON object");
  KineticParams p = base;
  for (const auto& [key, value] : j.items()) {
    if (!value.is_number()) throw ConfigError("kinetic parameter " + key + " must be a number");
    p.at(param_index(key)) = value.get<double>();
  }
  p.validate();
  return p;
}

FitSpec fit_spec_from_json(const nlohmann::json& j) {
  FitSpec spec;
  try {
    if (j.contains("start")) spec.start = params_from_json(j["start"]);
    for (const auto& b : j.at("bounds")) {
      ParamBound pb;
      pb.index = param_index(b.at("name").get<std::string>());
      pb.lower = b.at("lower").get<double>();
      pb.upper = b.at("upper").get<double>();
      pb.log_scale = b.value("log_scale", true);
      spec.bounds.push_back(pb);
    }
    spec.swarm_size = j.value("swarm_size", spec.swarm_size);
    spec.max_iterations = j.value("max_iterations", spec.max_iterations);
    spec.seed = j.value("seed", spec.seed);
    spec.step = j.value("step_h", spec.step);
    if (j.contains("weights")) {
      const auto& w = j["weights"];
      spec.weights.glucose = w.value("s_G", 1.0);
      spec.weights.biomass = w.value("B_c", 1.0);
      spec.weights.lactate = w.value("p_L", 1.0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed fit spec: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::json to_json(const FitResult& result) {
  return {{"params", to_json(result.params)},
          {"objective", result.objective},
          {"objective_trace", result.history},
          {"evaluations", result.evaluations}};
}

}  // namespace optoatp
