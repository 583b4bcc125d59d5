#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace optoatp::pso {

// Global-best particle swarm with constriction-type constants.
struct Options {
  int swarm_size = 40;
  int max_iterations = 200;
  std::uint64_t seed = 0;
  double inertia = 0.729;
  double cognitive = 1.49445;
  double social = 1.49445;
  // Stop early when the best value has not improved by more than
  // `tolerance` (relative) for this many iterations; 0 disables.
  int stall_iterations = 0;
  double tolerance = 1e-12;
};

struct Result {
  std::vector<double> best;
  double best_value = 0.0;
  // Best-so-far value after initialization and after each iteration.
  std::vector<double> history;
  int iterations = 0;
  long evaluations = 0;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Minimizes `objective` over the box [lower, upper]. Particles are placed
// uniformly in the box, except that the supplied `seeds` (clipped to the box)
// replace the first particles. Objective evaluations within one iteration run
// in parallel; all random draws happen on the calling thread, so the result
// depends only on the seed. Non-finite objective values count as +inf.
Result minimize(const Objective& objective, const std::vector<double>& lower,
                const std::vector<double>& upper, const Options& options,
                const std::vector<std::vector<double>>& seeds = {});

}  // namespace optoatp::pso
