#include <doctest.h>

#include <cmath>

#include "optoatp/pso.hpp"

using namespace optoatp;

namespace {

double sphere(const std::vector<double>& x) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - 0.3 * i) * (x[i] - 0.3 * i);
  return s;
}

double rosenbrock(const std::vector<double>& x) {
  return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
}

}  // namespace

TEST_CASE("finds the minimum of a shifted sphere") {
  pso::Options opt;
  opt.seed = 3;
  const auto r = pso::minimize(sphere, {-5, -5, -5}, {5, 5, 5}, opt);
  CHECK(r.best_value < 1e-8);
  CHECK(r.best[2] == doctest::Approx(0.6).epsilon(1e-3));
}

TEST_CASE("handles a curved valley") {
  pso::Options opt;
  opt.seed = 11;
  opt.max_iterations = 400;
  const auto r = pso::minimize(rosenbrock, {-2, -2}, {2, 2}, opt);
  CHECK(r.best_value < 1e-4);
}

TEST_CASE("same seed, same answer; history never increases") {
  pso::Options opt;
  opt.seed = 99;
  opt.max_iterations = 50;
  const auto a = pso::minimize(rosenbrock, {-2, -2}, {2, 2}, opt);
  const auto b = pso::minimize(rosenbrock, {-2, -2}, {2, 2}, opt);
  CHECK(a.best == b.best);
  CHECK(a.history == b.history);
  REQUIRE(a.history.size() == 51);
  for (std::size_t i = 1; i < a.history.size(); ++i) CHECK(a.history[i] <= a.history[i - 1]);
  opt.seed = 100;
  const auto c = pso::minimize(rosenbrock, {-2, -2}, {2, 2}, opt);
  CHECK(c.best != a.best);
}

TEST_CASE("particles respect the box") {
  pso::Options opt;
  opt.seed = 5;
  opt.max_iterations = 30;
  auto f = [](const std::vector<double>& x) {
    CHECK(x[0] >= 1.0);
    CHECK(x[0] <= 2.0);
    return -x[0];
  };
  const auto r = pso::minimize(f, {1.0}, {2.0}, opt);
  CHECK(r.best[0] == 2.0);
}

TEST_CASE("a single seeded particle with no iterations returns the seed") {
  pso::Options opt;
  opt.swarm_size = 1;
  opt.max_iterations = 0;
  const auto r = pso::minimize(sphere, {-1, -1}, {1, 1}, opt, {{0.25, 7.0}});
  CHECK(r.best == std::vector<double>{0.25, 1.0});
  CHECK(r.evaluations == 1);
  CHECK(r.iterations == 0);
}

TEST_CASE("non-finite objective values lose") {
  pso::Options opt;
  opt.seed = 2;
  opt.max_iterations = 40;
  auto f = [](const std::vector<double>& x) { return x[0] < 0.0 ? std::nan("") : (x[0] - 0.5) * (x[0] - 0.5); };
  const auto r = pso::minimize(f, {-1.0}, {1.0}, opt);
  CHECK(r.best[0] == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("stall criterion stops early") {
  pso::Options opt;
  opt.seed = 1;
  opt.max_iterations = 1000;
  opt.stall_iterations = 5;
  const auto r = pso::minimize([](const std::vector<double>&) { return 1.0; }, {0.0}, {1.0}, opt);
  CHECK(r.iterations <= 6);
}
