#pragma once

// Multi-batch estimation of the kinetic parameters by particle swarm.

#include <cstdint>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "optoatp/dataset.hpp"
#include "optoatp/model.hpp"
#include "optoatp/pso.hpp"
#include "optoatp/sim.hpp"

namespace optoatp {

// Returned by sse_objective when a simulation fails.
inline constexpr double kFailurePenalty = 1e12;

struct StateWeights {
  double glucose = 1.0;
  double biomass = 1.0;
  double lactate = 1.0;
};

// Search interval for one free parameter; parameters without a bound keep
// their value from FitSpec::start. Log-scaled intervals require lower > 0,
// except for m_G, m_L and q_E0, which may be zero and are then searched on a
// linear scale.
struct ParamBound {
  std::size_t index = 0;
  double lower = 0.0;
  double upper = 0.0;
  bool log_scale = true;
};

struct FitSpec {
  KineticParams start = KineticParams::nominal();
  std::vector<ParamBound> bounds;
  int swarm_size = 30;
  int max_iterations = 100;
  std::uint64_t seed = 0;
  StateWeights weights;
  double step = kDefaultStep;

  // Throws ConfigError on empty, duplicate, non-finite or inverted bounds.
  void validate() const;
};

// Weighted sum of squared errors between simulated and measured states over
// all datasets. Each state column is divided by its standard deviation within
// its dataset before weighting. Missing measurements are skipped.
double sse_objective(const KineticParams& params, std::span<const BatchDataset> datasets,
                     const StateWeights& weights = {}, double step = kDefaultStep);

struct FitResult {
  KineticParams params;
  double objective = 0.0;
  std::vector<double> history;  // best objective after each PSO iteration
  long evaluations = 0;
};

// Fits the parameters named in spec.bounds. The first particle is spec.start
// (clipped to the bounds), so a zero-iteration run returns it unchanged.
FitResult fit_parameters(std::span<const BatchDataset> datasets, const FitSpec& spec);

nlohmann::json to_json(const KineticParams& params);
KineticParams params_from_json(const nlohmann::json& j, const KineticParams& base = KineticParams::nominal());
FitSpec fit_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FitResult& result);

}  // namespace optoatp
