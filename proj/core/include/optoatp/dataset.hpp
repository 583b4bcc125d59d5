#pragma once

#include <optional>
#include <string>
#include <vector>

#include "optoatp/model.hpp"
#include "optoatp/sim.hpp"

namespace optoatp {

// One sampling time of a batch. Any of the measured states may be missing.
struct Sample {
  double t = 0.0;  // h
  std::optional<double> glucose;
  std::optional<double> biomass;
  std::optional<double> lactate;

  bool any_observed() const { return glucose || biomass || lactate; }
  bool fully_observed() const { return glucose && biomass && lactate; }
};

// Measurements of one fermentation together with the light schedule applied.
struct BatchDataset {
  std::string id;
  ControlSchedule schedule;
  std::vector<Sample> samples;
  State initial_state;

  // Throws DataError on non-increasing times, samples outside the schedule
  // horizon, or a sample with nothing observed.
  void validate() const;
};

// Noise-free synthetic batch: simulates `model` from x0 and records the
// states at `sample_times`.
BatchDataset synthesize_batch(std::string id, const State& x0, const ControlSchedule& schedule,
                              const std::vector<double>& sample_times, const RhsFunction& model,
                              double step = kDefaultStep);

}  // namespace optoatp
