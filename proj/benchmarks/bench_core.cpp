#include <benchmark/benchmark.h>

#include <memory>

#include "optoatp/hybrid.hpp"
#include "optoatp/ocp.hpp"

using namespace optoatp;

namespace {

const KineticParams P = KineticParams::nominal();

ControlSchedule two_stage(std::size_t sw) {
  ControlSchedule s = ControlSchedule::constant(0.0, 8.0, 1.0, 0.0);
  for (std::size_t j = sw; j < s.levels.size(); ++j) s.levels[j] = kDefaultMaxLight;
  return s;
}

std::shared_ptr<const ResidualModels> trained_models() {
  KineticParams truth = P;
  truth.m_L *= 1.1;
  std::vector<ResidualSample> samples;
  for (double u : {0.0, 175.0, 349.0, 524.0, 873.0}) {
    const BatchDataset d = synthesize_batch("b", {0.03, 0.0, 2.7, 0.0}, ControlSchedule::constant(0.0, 8.0, 1.0, u),
                                            {0, 1, 2, 3, 4, 5, 6, 7, 8}, nominal_rhs(truth));
    const auto r = compute_residuals(d, P);
    samples.insert(samples.end(), r.begin(), r.end());
  }
  ResidualTrainOptions o;
  o.fit.budget = 100;
  o.fit.starts = 2;
  return std::make_shared<const ResidualModels>(train_residual_models(samples, o));
}

}  // namespace

static void BM_NominalBatch(benchmark::State& state) {
  const ControlSchedule s = two_stage(3);
  const RhsFunction rhs = nominal_rhs(P);
  for (auto _ : state) benchmark::DoNotOptimize(integrate_final({0.071, 0.0, 2.745, 0.0}, s, rhs));
}
BENCHMARK(BM_NominalBatch);

static void BM_HybridBatch(benchmark::State& state) {
  const ControlSchedule s = two_stage(3);
  const RhsFunction rhs = hybrid_rhs(P, trained_models());
  for (auto _ : state) benchmark::DoNotOptimize(integrate_final({0.071, 0.0, 2.745, 0.0}, s, rhs));
}
BENCHMARK(BM_HybridBatch);

static void BM_GpPredictMean(benchmark::State& state) {
  const auto models = trained_models();
  const Features x{1.5, 0.05, 1.0, 4.0, 349.0};
  for (auto _ : state) benchmark::DoNotOptimize(models->lactate.predict_mean(x));
}
BENCHMARK(BM_GpPredictMean);

static void BM_Oracle(benchmark::State& state) {
  OCPSpec spec;
  spec.oracle_glucose_resolution = 0.1;
  for (auto _ : state) benchmark::DoNotOptimize(two_stage_oracle(spec, P, nullptr));
}
BENCHMARK(BM_Oracle)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
