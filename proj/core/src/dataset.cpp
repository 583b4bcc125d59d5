#include "optoatp/dataset.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "optoatp/error.hpp"

namespace optoatp {

void BatchDataset::validate() const {
  try {
    schedule.validate(std::numeric_limits<double>::infinity());
  } catch (const ConfigError& e) {
    throw DataError("batch '" + id + "': " + e.what());
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Sample& s = samples[i];
    std::ostringstream where;
    where << "batch '" << id << "', sample " << i << " (t = " << s.t << " h)";
    if (!std::isfinite(s.t)) throw DataError(where.str() + ": non-finite time");
    if (i > 0 && !(s.t > samples[i - 1].t)) throw DataError(where.str() + ": time does not increase");
    if (s.t < schedule.t0 - 1e-9 || s.t > schedule.tf + 1e-9)
      throw DataError(where.str() + ": outside the schedule horizon");
    if (!s.any_observed()) throw DataError(where.str() + ": no observed state");
    for (const auto& v : {s.glucose, s.biomass, s.lactate}) {
      if (v && !std::isfinite(*v)) throw DataError(where.str() + ": non-finite measurement");
    }
  }
  if (!initial_state.finite()) throw DataError("batch '" + id + "': non-finite initial state");
}

BatchDataset synthesize_batch(std::string id, const State& x0, const ControlSchedule& schedule,
                              const std::vector<double>& sample_times, const RhsFunction& model,
                              double step) {
  BatchDataset data;
  data.id = std::move(id);
  data.schedule = schedule;
  data.initial_state = x0;
  State x = x0;
  double t = schedule.t0;
  for (double ts : sample_times) {
    x = advance(x, t, ts, schedule, model, step);
    t = ts;
    data.samples.push_back({ts, x.glucose, x.biomass, x.lactate});
  }
  data.validate();
  return data;
}

}  // namespace optoatp
