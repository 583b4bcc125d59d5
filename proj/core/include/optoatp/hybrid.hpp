#pragma once

// Hybrid model: the nominal kinetics plus Gaussian-process estimates of the
// model error in the glucose, biomass and lactate balances.

#include <array>
#include <memory>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "optoatp/dataset.hpp"
#include "optoatp/gp.hpp"
#include "optoatp/model.hpp"
#include "optoatp/sim.hpp"

namespace optoatp {

// Feature order shared by all residual regressors.
inline constexpr std::size_t kFeatureCount = 5;
using Features = std::array<double, kFeatureCount>;  // s_G, B_c, p_L, E, u_l

inline Features features_of(const State& x, double light) {
  return {x.glucose, x.biomass, x.lactate, x.atpase, light};
}

// Finite-difference model error at one sampling time t_k, with the features
// measured at t_k (E reconstructed). Targets are state units per hour.
struct ResidualSample {
  double t = 0.0;
  double glucose = 0.0;
  double biomass = 0.0;
  double lactate = 0.0;
  double atpase = 0.0;
  double light = 0.0;
  double w_glucose = 0.0;
  double w_biomass = 0.0;
  double w_lactate = 0.0;

  Features features() const { return {glucose, biomass, lactate, atpase, light}; }
};

// For each consecutive pair of fully observed samples, re-anchors the
// nominal model at the measured state and compares slopes. E is unmeasured:
// it is reconstructed from E(t0) = 0 under the recorded schedule. Pairs with a
// missing measurement are skipped. Throws DataError if fewer than two samples
// exist, times do not increase, or a state column is never observed.
std::vector<ResidualSample> compute_residuals(const BatchDataset& data, const KineticParams& params,
                                              double step = kDefaultStep);

struct ResidualModels {
  gp::Model glucose;  // w_G
  gp::Model biomass;  // w_c
  gp::Model lactate;  // w_L

  nlohmann::json to_json() const;
  static ResidualModels from_json(const nlohmann::json& j);
};

struct ResidualTrainOptions {
  gp::FitOptions fit;
  // Starting hyperparameters; when unset they are derived from each label set.
  std::optional<gp::Hyperparams> init;
};

// Trains the three regressors on one shared feature matrix. Throws DataError
// with fewer than two samples or when every feature column is constant.
ResidualModels train_residual_models(std::span<const ResidualSample> samples,
                                     const ResidualTrainOptions& options = {});

// rhs_nominal plus the posterior means of w_G, w_c, w_L. dE/dt is untouched.
StateDerivative rhs_hybrid(const State& state, double light, const KineticParams& params,
                           const ResidualModels& models);

RhsFunction hybrid_rhs(const KineticParams& params, std::shared_ptr<const ResidualModels> models);

}  // namespace optoatp
