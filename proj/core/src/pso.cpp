#include "optoatp/pso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "optoatp/error.hpp"
#include "optoatp/parallel.hpp"

namespace optoatp::pso {
namespace {

double sanitize(double v) {
  return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
}

}  // namespace

Result minimize(const Objective& objective, const std::vector<double>& lower,
                const std::vector<double>& upper, const Options& options,
                const std::vector<std::vector<double>>& seeds) {
  const std::size_t dim = lower.size();
  if (upper.size() != dim || dim == 0) throw ConfigError("PSO bounds must be non-empty and equal length");
  for (std::size_t d = 0; d < dim; ++d) {
    if (!std::isfinite(lower[d]) || !std::isfinite(upper[d]) || !(lower[d] < upper[d]))
      throw ConfigError("PSO bounds must be finite with lower < upper");
  }
  if (options.swarm_size < 1) throw ConfigError("PSO swarm size must be at least 1");
  if (options.max_iterations < 0) throw ConfigError("PSO iteration count must be non-negative");

  const auto n = static_cast<std::size_t>(options.swarm_size);
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::vector<double>> pos(n, std::vector<double>(dim));
  std::vector<std::vector<double>> vel(n, std::vector<double>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double span = upper[d] - lower[d];
      pos[i][d] = lower[d] + unit(rng) * span;
      vel[i][d] = (unit(rng) - 0.5) * span * 0.2;
    }
    if (i < seeds.size()) {
      if (seeds[i].size() != dim) throw ConfigError("PSO seed particle has wrong dimension");
      for (std::size_t d = 0; d < dim; ++d) pos[i][d] = std::clamp(seeds[i][d], lower[d], upper[d]);
    }
  }

  Result result;
  std::vector<double> value(n);
  auto evaluate_all = [&] {
    parallel_for(n, [&](std::size_t i) { value[i] = sanitize(objective(pos[i])); });
    result.evaluations += static_cast<long>(n);
  };

  evaluate_all();
  std::vector<std::vector<double>> personal = pos;
  std::vector<double> personal_value = value;
  std::size_t g = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (personal_value[i] < personal_value[g]) g = i;
  result.best = personal[g];
  result.best_value = personal_value[g];
  result.history.push_back(result.best_value);

  int stall = 0;
  for (int it = 0; it < options.max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double span = upper[d] - lower[d];
        const double r1 = unit(rng);
        const double r2 = unit(rng);
        double v = options.inertia * vel[i][d] +
                   options.cognitive * r1 * (personal[i][d] - pos[i][d]) +
                   options.social * r2 * (result.best[d] - pos[i][d]);
        v = std::clamp(v, -span, span);
        double x = pos[i][d] + v;
        if (x < lower[d]) {
          x = lower[d];
          v = 0.0;
        } else if (x > upper[d]) {
          x = upper[d];
          v = 0.0;
        }
        pos[i][d] = x;
        vel[i][d] = v;
      }
    }
    evaluate_all();

    const double previous = result.best_value;
    for (std::size_t i = 0; i < n; ++i) {
      if (value[i] < personal_value[i]) {
        personal_value[i] = value[i];
        personal[i] = pos[i];
      }
      if (personal_value[i] < result.best_value) {
        result.best_value = personal_value[i];
        result.best = personal[i];
      }
    }
    result.history.push_back(result.best_value);
    result.iterations = it + 1;

    if (options.stall_iterations > 0) {
      const bool improved =
          std::isinf(previous) ||
          previous - result.best_value > options.tolerance * (1.0 + std::abs(previous));
      stall = improved ? 0 : stall + 1;
      if (stall >= options.stall_iterations) break;
    }
  }
  return result;
}

}  // namespace optoatp::pso
