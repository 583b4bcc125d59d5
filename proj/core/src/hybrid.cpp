#include "optoatp/hybrid.hpp"

#include <cmath>
#include <sstream>

#include "optoatp/error.hpp"

namespace optoatp {
namespace {

gp::Hyperparams default_init(const Eigen::VectorXd& labels) {
  const double power = labels.squaredNorm() / static_cast<double>(labels.size());
  const double s = power > 1e-12 ? power : 1e-12;
  return {s, 1.0, 1e-2 * s};
}

}  // namespace

std::vector<ResidualSample> compute_residuals(const BatchDataset& data, const KineticParams& params,
                                              double step) {
  if (data.samples.size() < 2) {
    throw DataError("batch '" + data.id + "': residuals need at least two samples");
  }
  for (std::size_t i = 1; i < data.samples.size(); ++i) {
    if (!(data.samples[i].t > data.samples[i - 1].t)) {
      std::ostringstream os;
      os << "batch '" << data.id << "': sample times not increasing at index " << i;
      throw DataError(os.str());
    }
  }
  bool has_g = false, has_b = false, has_l = false;
  for (const Sample& s : data.samples) {
    has_g = has_g || s.glucose.has_value();
    has_b = has_b || s.biomass.has_value();
    has_l = has_l || s.lactate.has_value();
  }
  if (!has_g) throw DataError("batch '" + data.id + "': glucose column missing");
  if (!has_b) throw DataError("batch '" + data.id + "': biomass column missing");
  if (!has_l) throw DataError("batch '" + data.id + "': lactate column missing");
  data.validate();
  params.validate();

  const RhsFunction model = nominal_rhs(params);

  // E evolves independently of the extracellular states, so it is tracked on
  // its own from E(t0) = 0.
  State atpase_track{0.0, 0.0, 0.0, 0.0};
  double track_time = data.schedule.t0;

  std::vector<ResidualSample> out;
  for (std::size_t k = 0; k + 1 < data.samples.size(); ++k) {
    const Sample& a = data.samples[k];
    const Sample& b = data.samples[k + 1];
    atpase_track = advance(atpase_track, track_time, a.t, data.schedule, model, step);
    track_time = a.t;
    if (!a.fully_observed() || !b.fully_observed()) continue;

    const State anchor{*a.biomass, atpase_track.atpase, *a.glucose, *a.lactate};
    const State predicted = advance(anchor, a.t, b.t, data.schedule, model, step);
    const double dt = b.t - a.t;

    ResidualSample r;
    r.t = a.t;
    r.glucose = anchor.glucose;
    r.biomass = anchor.biomass;
    r.lactate = anchor.lactate;
    r.atpase = anchor.atpase;
    r.light = data.schedule.level_at(a.t);
    r.w_glucose = (*b.glucose - anchor.glucose) / dt - (predicted.glucose - anchor.glucose) / dt;
    r.w_biomass = (*b.biomass - anchor.biomass) / dt - (predicted.biomass - anchor.biomass) / dt;
    r.w_lactate = (*b.lactate - anchor.lactate) / dt - (predicted.lactate - anchor.lactate) / dt;
    out.push_back(r);
  }
  return out;
}

nlohmann::json ResidualModels::to_json() const {
  return {{"feature_order", {"s_G", "B_c", "p_L", "E", "u_l"}},
          {"w_G", glucose.to_json()},
          {"w_c", biomass.to_json()},
          {"w_L", lactate.to_json()}};
}

ResidualModels ResidualModels::from_json(const nlohmann::json& j) {
  if (!j.contains("w_G") || !j.contains("w_c") || !j.contains("w_L")) {
    throw DataError("residual model JSON needs w_G, w_c and w_L entries");
  }
  ResidualModels m{gp::Model::from_json(j["w_G"]), gp::Model::from_json(j["w_c"]),
                   gp::Model::from_json(j["w_L"])};
  for (const gp::Model* g : {&m.glucose, &m.biomass, &m.lactate}) {
    if (g->feature_count() != static_cast<Eigen::Index>(kFeatureCount))
      throw DataError("residual model JSON has wrong feature count");
  }
  return m;
}

ResidualModels train_residual_models(std::span<const ResidualSample> samples,
                                     const ResidualTrainOptions& options) {
  if (samples.size() < 2) throw DataError("residual training needs at least two samples");
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::MatrixXd v(static_cast<Eigen::Index>(kFeatureCount), n);
  Eigen::VectorXd wg(n), wc(n), wl(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const ResidualSample& s = samples[static_cast<std::size_t>(i)];
    const Features f = s.features();
    for (std::size_t d = 0; d < kFeatureCount; ++d) v(static_cast<Eigen::Index>(d), i) = f[d];
    wg(i) = s.w_glucose;
    wc(i) = s.w_biomass;
    wl(i) = s.w_lactate;
  }
  if (!v.allFinite() || !wg.allFinite() || !wc.allFinite() || !wl.allFinite())
    throw DataError("residual samples contain non-finite values");

  bool varies = false;
  for (Eigen::Index d = 0; d < v.rows() && !varies; ++d) {
    varies = (v.row(d).array() != v(d, 0)).any();
  }
  if (!varies) throw DataError("residual features are constant in every column; cannot train");

  auto fit = [&](const Eigen::VectorXd& labels, std::uint64_t salt) {
    gp::FitOptions fo = options.fit;
    fo.seed = options.fit.seed + salt;
    return gp::Model::train(v, labels, options.init.value_or(default_init(labels)), fo);
  };
  return {fit(wg, 0), fit(wc, 1), fit(wl, 2)};
}

StateDerivative rhs_hybrid(const State& state, double light, const KineticParams& params,
                           const ResidualModels& models) {
  StateDerivative d = rhs_nominal(state, light, params);
  const Features f = features_of(state, light);
  d.glucose += models.glucose.predict_mean(f);
  d.biomass += models.biomass.predict_mean(f);
  d.lactate += models.lactate.predict_mean(f);
  return d;
}

RhsFunction hybrid_rhs(const KineticParams& params, std::shared_ptr<const ResidualModels> models) {
  if (!models) throw ConfigError("hybrid model requested without residual models");
  return [params, models = std::move(models)](const State& x, double light) {
    return rhs_hybrid(x, light, params, *models);
  };
}

}  // namespace optoatp
