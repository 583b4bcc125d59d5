#include "optoatp/gp.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "optoatp/error.hpp"

namespace optoatp::gp {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double squared_distance(const double* a, const double* b, Eigen::Index n) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

// Box-constrained Nelder-Mead maximizer over a small dimension.
template <std::size_t N, class F>
std::pair<std::array<double, N>, double> nelder_mead_max(F&& f, std::array<double, N> start,
                                                         const std::array<double, N>& lo,
                                                         const std::array<double, N>& hi,
                                                         double initial_step, int budget) {
  using Point = std::array<double, N>;
  auto clip = [&](Point p) {
    for (std::size_t i = 0; i < N; ++i) p[i] = std::clamp(p[i], lo[i], hi[i]);
    return p;
  };
  int evals = 0;
  auto eval = [&](const Point& p) {
    ++evals;
    return f(p);
  };

  std::array<Point, N + 1> simplex;
  std::array<double, N + 1> value;
  simplex[0] = clip(start);
  value[0] = eval(simplex[0]);
  for (std::size_t i = 0; i < N; ++i) {
    Point p = simplex[0];
    p[i] += (p[i] + initial_step <= hi[i]) ? initial_step : -initial_step;
    simplex[i + 1] = clip(p);
    value[i + 1] = eval(simplex[i + 1]);
  }

  auto affine = [&](const Point& c, const Point& p, double t) {
    Point r;
    for (std::size_t i = 0; i < N; ++i) r[i] = c[i] + t * (p[i] - c[i]);
    return clip(r);
  };

  while (evals < budget) {
    // Sort best (largest) first; -inf values sink to the end.
    std::array<std::size_t, N + 1> order;
    for (std::size_t i = 0; i <= N; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return value[a] > value[b]; });
    std::array<Point, N + 1> s2;
    std::array<double, N + 1> v2;
    for (std::size_t i = 0; i <= N; ++i) {
      s2[i] = simplex[order[i]];
      v2[i] = value[order[i]];
    }
    simplex = s2;
    value = v2;

    if (std::isfinite(value[0]) && std::isfinite(value[N]) &&
        std::abs(value[0] - value[N]) <= 1e-10 * (1.0 + std::abs(value[0]))) {
      double spread = 0.0;
      for (std::size_t i = 1; i <= N; ++i)
        for (std::size_t k = 0; k < N; ++k) spread = std::max(spread, std::abs(simplex[i][k] - simplex[0][k]));
      if (spread < 1e-8) break;
    }

    Point centroid{};
    for (std::size_t i = 0; i < N; ++i)
      for (std::size_t k = 0; k < N; ++k) centroid[k] += simplex[i][k] / static_cast<double>(N);

    const Point reflected = affine(centroid, simplex[N], -1.0);
    const double fr = eval(reflected);
    if (fr > value[0]) {
      const Point expanded = affine(centroid, simplex[N], -2.0);
      const double fe = eval(expanded);
      if (fe > fr) {
        simplex[N] = expanded;
        value[N] = fe;
      } else {
        simplex[N] = reflected;
        value[N] = fr;
      }
    } else if (fr > value[N - 1]) {
      simplex[N] = reflected;
      value[N] = fr;
    } else {
      const bool outside = fr > value[N];
      const Point contracted = affine(centroid, outside ? reflected : simplex[N], 0.5);
      const double fc = eval(contracted);
      if (fc > std::max(fr, value[N])) {
        simplex[N] = contracted;
        value[N] = fc;
      } else {
        for (std::size_t i = 1; i <= N; ++i) {
          simplex[i] = affine(simplex[0], simplex[i], 0.5);
          value[i] = eval(simplex[i]);
        }
      }
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i <= N; ++i)
    if (value[i] > value[best]) best = i;
  return {simplex[best], value[best]};
}

void check_shapes(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels) {
  if (inputs.cols() != labels.size()) {
    throw DomainError("GP training inputs have " + std::to_string(inputs.cols()) +
                      " samples but " + std::to_string(labels.size()) + " labels");
  }
  if (inputs.cols() == 0) throw DomainError("GP requires at least one training sample");
  if (!inputs.allFinite() || !labels.allFinite()) throw DomainError("GP training data not finite");
}

double lml_from_factor(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& labels) {
  const Eigen::VectorXd alpha = llt.solve(labels);
  const auto& l = llt.matrixLLT();
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) log_det += 2.0 * std::log(l(i, i));
  const double n = static_cast<double>(labels.size());
  return -0.5 * labels.dot(alpha) - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace

void Hyperparams::validate() const {
  if (!std::isfinite(signal_variance) || signal_variance <= 0.0)
    throw DomainError("GP signal variance must be positive");
  if (!std::isfinite(length_scale) || length_scale <= 0.0)
    throw DomainError("GP length scale must be positive");
  if (!std::isfinite(noise_variance) || noise_variance < 0.0)
    throw DomainError("GP noise variance must be non-negative");
}

double kernel(std::span<const double> a, std::span<const double> b, const Hyperparams& hp) {
  if (a.size() != b.size()) {
    throw DomainError("kernel arguments differ in dimension (" + std::to_string(a.size()) +
                      " vs " + std::to_string(b.size()) + ")");
  }
  const double r2 = squared_distance(a.data(), b.data(), static_cast<Eigen::Index>(a.size()));
  return hp.signal_variance * std::exp(-r2 / (2.0 * hp.length_scale * hp.length_scale));
}

double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const Hyperparams& hp) {
  if (a.size() != b.size()) throw DomainError("kernel arguments differ in dimension");
  return hp.signal_variance *
         std::exp(-(a - b).squaredNorm() / (2.0 * hp.length_scale * hp.length_scale));
}

Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& inputs, const Hyperparams& hp) {
  const Eigen::Index n = inputs.cols();
  const Eigen::Index dim = inputs.rows();
  const double inv = 1.0 / (2.0 * hp.length_scale * hp.length_scale);
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k(j, j) = hp.signal_variance;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double r2 = squared_distance(inputs.col(i).data(), inputs.col(j).data(), dim);
      k(i, j) = k(j, i) = hp.signal_variance * std::exp(-r2 * inv);
    }
  }
  return k;
}

Factorization factorize(const Eigen::MatrixXd& inputs, const Hyperparams& hp) {
  hp.validate();
  Eigen::MatrixXd k = covariance_matrix(inputs, hp);
  k.diagonal().array() += hp.noise_variance;
  Factorization f;
  f.llt.compute(k);
  if (f.llt.info() == Eigen::Success) return f;
  double jitter = 1e-8 * hp.signal_variance;
  for (int attempt = 0; attempt < 3; ++attempt, jitter *= 10.0) {
    Eigen::MatrixXd kj = k;
    kj.diagonal().array() += jitter;
    f.llt.compute(kj);
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  throw NumericalError("GP covariance matrix is not positive definite even with jitter");
}

double log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels,
                               const Hyperparams& hp) {
  check_shapes(inputs, labels);
  return lml_from_factor(factorize(inputs, hp).llt, labels);
}

Hyperparams fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels,
                                const Hyperparams& init, const FitOptions& options) {
  check_shapes(inputs, labels);
  init.validate();
  if (inputs.cols() < 2) throw DomainError("hyperparameter fitting needs at least two samples");
  if (options.budget < 1 || options.starts < 1) throw ConfigError("GP fit budget and starts must be positive");

  // Search box, relative to label power and feature spread.
  const double power = labels.squaredNorm() / static_cast<double>(labels.size());
  const double s = power > 0.0 ? power : 1.0;
  const Eigen::VectorXd centroid = inputs.rowwise().mean();
  const double spread2 = (inputs.colwise() - centroid).squaredNorm() / static_cast<double>(inputs.cols());
  const double r = spread2 > 0.0 ? std::sqrt(spread2) : 1.0;
  const std::array<double, 3> lo = {std::log(s * 1e-6), std::log(r * 1e-3), std::log(s * 1e-12)};
  const std::array<double, 3> hi = {std::log(s * 1e6), std::log(r * 1e3), std::log(s * 1e2)};

  auto to_hp = [](const std::array<double, 3>& z) {
    return Hyperparams{std::exp(z[0]), std::exp(z[1]), std::exp(z[2])};
  };
  auto objective = [&](const std::array<double, 3>& z) {
    try {
      return lml_from_factor(factorize(inputs, to_hp(z)).llt, labels);
    } catch (const NumericalError&) {
      return kNegInf;
    }
  };

  double init_value = kNegInf;
  try {
    init_value = log_marginal_likelihood(inputs, labels, init);
  } catch (const NumericalError&) {
  }

  const std::array<double, 3> z0 = {std::log(init.signal_variance), std::log(init.length_scale),
                                    std::log(std::max(init.noise_variance, 1e-300))};
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(-2.5, 2.5);

  Hyperparams best = init;
  double best_value = init_value;
  for (int k = 0; k < options.starts; ++k) {
    std::array<double, 3> start = z0;
    if (k > 0) {
      for (auto& v : start) v += jitter(rng);
    }
    for (std::size_t i = 0; i < 3; ++i) start[i] = std::clamp(start[i], lo[i], hi[i]);
    const auto [z, value] = nelder_mead_max<3>(objective, start, lo, hi, 1.0, options.budget);
    if (value > best_value) {
      best_value = value;
      best = to_hp(z);
    }
  }
  if (!std::isfinite(best_value)) {
    throw NumericalError("GP hyperparameter search: every start failed to factorize");
  }
  return best;
}

Standardization Standardization::identity(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Standardization Standardization::fit(const Eigen::MatrixXd& inputs) {
  Standardization s;
  const double n = static_cast<double>(inputs.cols());
  s.offset = inputs.rowwise().mean();
  s.scale.resize(inputs.rows());
  for (Eigen::Index f = 0; f < inputs.rows(); ++f) {
    const double var = (inputs.row(f).array() - s.offset(f)).square().sum() / n;
    const double sd = std::sqrt(var);
    s.scale(f) = sd > 1e-12 * std::max(1.0, std::abs(s.offset(f))) ? sd : 1.0;
  }
  return s;
}

Eigen::VectorXd Standardization::apply(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  return ((x - offset).array() / scale.array()).matrix();
}

Eigen::MatrixXd Standardization::apply_columns(const Eigen::MatrixXd& inputs) const {
  return ((inputs.colwise() - offset).array().colwise() / scale.array()).matrix();
}

Model::Model(Eigen::MatrixXd inputs, Eigen::VectorXd labels, const Hyperparams& hp)
    : Model(std::move(inputs), std::move(labels), hp, Standardization{}) {}

Model::Model(Eigen::MatrixXd inputs, Eigen::VectorXd labels, const Hyperparams& hp,
             Standardization standardization)
    : inputs_(std::move(inputs)),
      labels_(std::move(labels)),
      hp_(hp),
      standardization_(std::move(standardization)) {
  check_shapes(inputs_, labels_);
  if (standardization_.offset.size() == 0) standardization_ = Standardization::identity(inputs_.rows());
  if (standardization_.offset.size() != inputs_.rows() || standardization_.scale.size() != inputs_.rows())
    throw DomainError("GP standardization does not match the feature count");
  condition();
}

Model Model::train(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels,
                   const Hyperparams& init, const FitOptions& options) {
  check_shapes(inputs, labels);
  Standardization st = Standardization::fit(inputs);
  const Hyperparams hp = fit_hyperparameters(st.apply_columns(inputs), labels, init, options);
  return Model(inputs, labels, hp, std::move(st));
}

void Model::condition() {
  hp_.validate();
  scaled_ = standardization_.apply_columns(inputs_);
  Factorization f = factorize(scaled_, hp_);
  jitter_ = f.jitter;
  chol_lower_ = f.llt.matrixL();
  alpha_ = f.llt.solve(labels_);
}

void Model::check_dim(Eigen::Index n) const {
  if (n != inputs_.rows()) {
    throw DomainError("GP prediction input has dimension " + std::to_string(n) + ", expected " +
                      std::to_string(inputs_.rows()));
  }
}

double Model::predict_mean(std::span<const double> x) const {
  check_dim(static_cast<Eigen::Index>(x.size()));
  const Eigen::Map<const Eigen::ArrayXd> raw(x.data(), inputs_.rows());
  const Eigen::ArrayXd z = (raw - standardization_.offset.array()) / standardization_.scale.array();
  const double inv = 1.0 / (2.0 * hp_.length_scale * hp_.length_scale);
  thread_local Eigen::ArrayXd d2;
  d2 = (scaled_.colwise() - z.matrix()).colwise().squaredNorm().transpose().array();
  return hp_.signal_variance * (-inv * d2).exp().matrix().dot(alpha_);
}

Prediction Model::predict(std::span<const double> x) const {
  check_dim(static_cast<Eigen::Index>(x.size()));
  return predict(Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())));
}

Prediction Model::predict(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_dim(x.size());
  const Eigen::VectorXd z = standardization_.apply(x);
  Eigen::VectorXd k(scaled_.cols());
  for (Eigen::Index i = 0; i < scaled_.cols(); ++i) k(i) = kernel(z, scaled_.col(i), hp_);
  Prediction p;
  p.mean = k.dot(alpha_);
  const Eigen::VectorXd v = chol_lower_.triangularView<Eigen::Lower>().solve(k);
  p.variance = std::max(0.0, hp_.signal_variance - v.squaredNorm());
  return p;
}

double Model::log_marginal_likelihood() const {
  const Eigen::VectorXd v = chol_lower_.triangularView<Eigen::Lower>().solve(labels_);
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < chol_lower_.rows(); ++i) log_det += 2.0 * std::log(chol_lower_(i, i));
  const double n = static_cast<double>(labels_.size());
  return -0.5 * v.squaredNorm() - 0.5 * log_det - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

nlohmann::json Model::to_json() const {
  nlohmann::json j;
  j["hyperparams"] = {{"signal_variance", hp_.signal_variance},
                      {"length_scale", hp_.length_scale},
                      {"noise_variance", hp_.noise_variance}};
  j["standardization"] = {
      {"offset", std::vector<double>(standardization_.offset.data(),
                                     standardization_.offset.data() + standardization_.offset.size())},
      {"scale", std::vector<double>(standardization_.scale.data(),
                                    standardization_.scale.data() + standardization_.scale.size())}};
  auto samples = nlohmann::json::array();
  for (Eigen::Index i = 0; i < inputs_.cols(); ++i) {
    samples.push_back(std::vector<double>(inputs_.col(i).data(), inputs_.col(i).data() + inputs_.rows()));
  }
  j["inputs"] = std::move(samples);
  j["labels"] = std::vector<double>(labels_.data(), labels_.data() + labels_.size());
  return j;
}

Model Model::from_json(const nlohmann::json& j) {
  try {
    const auto& h = j.at("hyperparams");
    Hyperparams hp{h.at("signal_variance").get<double>(), h.at("length_scale").get<double>(),
                   h.at("noise_variance").get<double>()};
    const auto samples = j.at("inputs").get<std::vector<std::vector<double>>>();
    const auto labels = j.at("labels").get<std::vector<double>>();
    if (samples.empty()) throw DataError("GP model JSON has no training inputs");
    const auto dim = static_cast<Eigen::Index>(samples.front().size());
    Eigen::MatrixXd v(dim, static_cast<Eigen::Index>(samples.size()));
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (static_cast<Eigen::Index>(samples[i].size()) != dim)
        throw DataError("GP model JSON has ragged training inputs");
      v.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(samples[i].data(), dim);
    }
    Eigen::VectorXd l = Eigen::Map<const Eigen::VectorXd>(labels.data(), static_cast<Eigen::Index>(labels.size()));
    Standardization st;
    if (j.contains("standardization")) {
      const auto off = j["standardization"].at("offset").get<std::vector<double>>();
      const auto sc = j["standardization"].at("scale").get<std::vector<double>>();
      st.offset = Eigen::Map<const Eigen::VectorXd>(off.data(), static_cast<Eigen::Index>(off.size()));
      st.scale = Eigen::Map<const Eigen::VectorXd>(sc.data(), static_cast<Eigen::Index>(sc.size()));
    }
    return Model(std::move(v), std::move(l), hp, std::move(st));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed GP model JSON: ") + e.what());
  }
}

}  // namespace optoatp::gp
