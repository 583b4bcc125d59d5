#include "optoatp/cli.hpp"

#include <iostream>
#include <memory>
#include <set>

#include "optoatp/error.hpp"
#include "optoatp/estimate.hpp"
#include "optoatp/hybrid.hpp"
#include "optoatp/io.hpp"
#include "optoatp/ocp.hpp"
#include "optoatp/sim.hpp"

namespace optoatp::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

fs::path resolve(const RunConfig& rc, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : rc.base_dir / path;
}

json envelope(const RunConfig& rc) {
  json j;
  j["tool"] = "optoatp";
  j["version"] = kVersion;
  j["command"] = rc.command;
  j["config"] = rc.config;
  j["seed"] = rc.seed ? json(*rc.seed) : json(nullptr);
  return j;
}

KineticParams load_params(const RunConfig& rc) {
  const json& c = rc.config;
  KineticParams p = KineticParams::nominal();
  try {
    if (c.contains("params_file")) {
      json pj = io::read_json(resolve(rc, c["params_file"].get<std::string>()));
      // Accept either a bare parameter object or a fit report.
      if (pj.contains("params")) pj = pj["params"];
      p = params_from_json(pj, p);
    }
    if (c.contains("params")) p = params_from_json(c["params"], p);
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return p;
}

std::shared_ptr<const ResidualModels> load_models(const RunConfig& rc, bool required) {
  if (!rc.config.contains("residual_models")) {
    if (required) throw ConfigError("hybrid model requires 'residual_models' (path to JSON)");
    return nullptr;
  }
  const json j = io::read_json(resolve(rc, rc.config["residual_models"].get<std::string>()));
  return std::make_shared<const ResidualModels>(ResidualModels::from_json(j));
}

std::vector<BatchDataset> load_datasets(const RunConfig& rc) {
  if (!rc.config.contains("datasets") || !rc.config["datasets"].is_array())
    throw ConfigError("config needs a 'datasets' array");
  std::vector<BatchDataset> out;
  for (const json& d : rc.config["datasets"]) {
    io::BatchCsvOptions opt;
    if (d.contains("schedule_csv")) opt.schedule_path = resolve(rc, d["schedule_csv"].get<std::string>());
    opt.interval_width = d.value("interval_width_h", 1.0);
    BatchDataset data = io::load_batch_csv(resolve(rc, d.at("csv").get<std::string>()), opt);
    if (d.contains("id")) data.id = d["id"].get<std::string>();
    out.push_back(std::move(data));
  }
  if (out.empty()) throw ConfigError("'datasets' is empty");
  return out;
}

bool hybrid_selected(const json& c) {
  const std::string model = c.value("model", std::string("nominal"));
  if (model != "nominal" && model != "hybrid") throw ConfigError("model must be 'nominal' or 'hybrid'");
  return model == "hybrid";
}

int cmd_simulate(const RunConfig& rc) {
  const json& c = rc.config;
  const KineticParams params = load_params(rc);
  const State x0 = io::state_from_json(c.at("initial_state"));
  const ControlSchedule schedule = io::schedule_from_json(c.at("schedule"));
  schedule.validate(c.value("u_max", kDefaultMaxLight));
  const double step = c.value("step_h", kDefaultStep);
  const RhsFunction rhs =
      hybrid_selected(c) ? hybrid_rhs(params, load_models(rc, true)) : nominal_rhs(params);
  const Trajectory traj = integrate(x0, schedule, rhs, step);

  io::write_trajectory_csv(rc.out_dir / "trajectory.csv", traj, c.value("output_every_h", 0.0));
  json summary = envelope(rc);
  summary["metrics"] = io::to_json(batch_metrics(traj));
  summary["final_state"] = io::to_json(traj.final());
  io::write_json(rc.out_dir / "summary.json", summary);
  return 0;
}

int cmd_metrics(const RunConfig& rc) {
  const json& c = rc.config;
  io::BatchCsvOptions opt;
  opt.require_schedule = false;
  std::string key = c.contains("batch_csv") ? "batch_csv" : "trajectory_csv";
  if (!c.contains(key)) throw ConfigError("metrics needs 'batch_csv' or 'trajectory_csv'");
  const BatchDataset data = io::load_batch_csv(resolve(rc, c[key].get<std::string>()), opt);
  // Use the last fully observed sample as the end of the batch.
  const Sample* last = nullptr;
  for (const Sample& s : data.samples)
    if (s.fully_observed()) last = &s;
  if (last == nullptr || last == &data.samples.front())
    throw DataError("metrics need a fully observed final sample");
  const State end{*last->biomass, 0.0, *last->glucose, *last->lactate};
  const BatchMetrics m = batch_metrics(data.initial_state, end, data.samples.front().t, last->t);
  json summary = envelope(rc);
  summary["metrics"] = io::to_json(m);
  io::write_json(rc.out_dir / "metrics.json", summary);
  return 0;
}

int cmd_fit(const RunConfig& rc) {
  const std::vector<BatchDataset> datasets = load_datasets(rc);
  FitSpec spec = fit_spec_from_json(rc.config.at("fit"));
  if (rc.seed) spec.seed = *rc.seed;
  const FitResult r = fit_parameters(datasets, spec);
  json out = envelope(rc);
  out["fit"] = to_json(r);
  io::write_json(rc.out_dir / "fit.json", out);
  return 0;
}

int cmd_residuals(const RunConfig& rc) {
  const std::vector<BatchDataset> datasets = load_datasets(rc);
  const KineticParams params = load_params(rc);
  const double step = rc.config.value("step_h", kDefaultStep);
  std::vector<ResidualSample> all;
  json per_batch = json::object();
  for (const BatchDataset& d : datasets) {
    const auto r = compute_residuals(d, params, step);
    per_batch[d.id] = r.size();
    all.insert(all.end(), r.begin(), r.end());
  }
  io::write_residuals_csv(rc.out_dir / "residuals.csv", all);
  json out = envelope(rc);
  out["samples_per_batch"] = per_batch;
  out["samples"] = all.size();
  io::write_json(rc.out_dir / "summary.json", out);
  return 0;
}

int cmd_train_gp(const RunConfig& rc) {
  const json& c = rc.config;
  const auto samples = io::read_residuals_csv(resolve(rc, c.at("residuals_csv").get<std::string>()));
  ResidualTrainOptions opt;
  opt.fit.budget = c.value("budget", opt.fit.budget);
  opt.fit.starts = c.value("starts", opt.fit.starts);
  opt.fit.seed = rc.seed.value_or(c.value("seed", std::uint64_t{0}));
  const ResidualModels models = train_residual_models(samples, opt);
  io::write_json(rc.out_dir / "residual_models.json", models.to_json());
  json out = envelope(rc);
  auto describe = [](const gp::Model& m) {
    return json{{"signal_variance", m.hyperparams().signal_variance},
                {"length_scale", m.hyperparams().length_scale},
                {"noise_variance", m.hyperparams().noise_variance},
                {"log_marginal_likelihood", m.log_marginal_likelihood()}};
  };
  out["w_G"] = describe(models.glucose);
  out["w_c"] = describe(models.biomass);
  out["w_L"] = describe(models.lactate);
  out["samples"] = samples.size();
  io::write_json(rc.out_dir / "summary.json", out);
  return 0;
}

int cmd_optimize(const RunConfig& rc) {
  const json& c = rc.config;
  const OCPSpec spec = ocp_spec_from_json(c.value("ocp", json::object()));
  spec.validate();
  const KineticParams params = load_params(rc);
  const auto models = load_models(rc, spec.model == ModelKind::kHybrid);
  const OCPSolution sol = solve(spec, params, models, rc.seed.value_or(c.value("seed", std::uint64_t{0})));
  io::write_trajectory_csv(rc.out_dir / "trajectory.csv", sol.trajectory, c.value("output_every_h", 0.1));
  json out = envelope(rc);
  out["spec"] = to_json(spec);
  out["solution"] = to_json(sol);
  out["metrics"] = io::to_json(batch_metrics(sol.trajectory));
  io::write_json(rc.out_dir / "solution.json", out);
  return sol.feasible ? 0 : static_cast<int>(ExitCode::kInfeasible);
}

}  // namespace

RunConfig make_run_config(std::string command, const std::optional<fs::path>& config_path,
                          std::optional<std::uint64_t> seed, fs::path out_dir) {
  RunConfig rc;
  rc.command = std::move(command);
  rc.seed = seed;
  rc.out_dir = std::move(out_dir);
  if (config_path) {
    rc.config = io::read_json(*config_path);
    rc.base_dir = config_path->has_parent_path() ? config_path->parent_path() : fs::path(".");
  }
  return rc;
}

int run(const RunConfig& rc, std::ostream& log) {
  try {
    if (!rc.config.is_object()) throw ConfigError("config must be a JSON object");
    fs::create_directories(rc.out_dir);
    if (rc.command == "simulate") return cmd_simulate(rc);
    if (rc.command == "metrics") return cmd_metrics(rc);
    if (rc.command == "fit") return cmd_fit(rc);
    if (rc.command == "residuals") return cmd_residuals(rc);
    if (rc.command == "train-gp") return cmd_train_gp(rc);
    if (rc.command == "optimize") return cmd_optimize(rc);
    throw ConfigError("unknown command '" + rc.command + "'");
  } catch (const Error& e) {
    log << "optoatp " << rc.command << ": " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const nlohmann::json::exception& e) {
    log << "optoatp " << rc.command << ": configuration error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfig);
  } catch (const fs::filesystem_error& e) {
    log << "optoatp " << rc.command << ": " << e.what() << '\n';
    return static_cast<int>(ExitCode::kConfig);
  } catch (const std::exception& e) {
    log << "optoatp " << rc.command << ": unexpected error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace optoatp::cli
