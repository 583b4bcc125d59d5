#pragma once

// Gaussian-process regression with a squared-exponential kernel and a zero
// prior mean. Training inputs are stored column-wise: V is n_features x n_samples.

#include <cstdint>
#include <optional>
#include <span>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <nlohmann/json.hpp>

namespace optoatp::gp {

struct Hyperparams {
  double signal_variance = 1.0;  // sigma^2
  double length_scale = 1.0;     // d
  double noise_variance = 1e-4;  // sigma_n^2

  // Throws DomainError unless sigma^2 > 0, d > 0, sigma_n^2 >= 0 (all finite).
  void validate() const;
};

// sigma^2 * exp(-|a - b|^2 / (2 d^2)).
double kernel(std::span<const double> a, std::span<const double> b, const Hyperparams& hp);
double kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b,
              const Hyperparams& hp);

// K with K(i, j) = k(v_i, v_j) over the columns of V.
Eigen::MatrixXd covariance_matrix(const Eigen::MatrixXd& inputs, const Hyperparams& hp);

// Cholesky factor of K + sigma_n^2 I. If that is not positive definite,
// jitter of 1e-8 sigma^2 is added to the diagonal and grown tenfold, at most
// three times. Throws NumericalError when every attempt fails.
struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};
Factorization factorize(const Eigen::MatrixXd& inputs, const Hyperparams& hp);

// log p(L | V, tau), evaluated through the Cholesky factor.
double log_marginal_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels,
                               const Hyperparams& hp);

struct FitOptions {
  int budget = 400;       // likelihood evaluations per start
  int starts = 8;
  std::uint64_t seed = 0;
};

// Maximizes the log marginal likelihood by multi-start Nelder-Mead in the
// log of (sigma^2, d, sigma_n^2). The first start is `init`; the result never
// has lower likelihood than `init`. Requires at least two samples.
Hyperparams fit_hyperparameters(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels,
                                const Hyperparams& init, const FitOptions& options = {});

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

// Per-feature affine map x -> (x - offset) / scale.
struct Standardization {
  Eigen::VectorXd offset;
  Eigen::VectorXd scale;

  static Standardization identity(Eigen::Index dim);
  // Zero mean and unit variance over the columns of `inputs`; constant
  // features keep scale 1.
  static Standardization fit(const Eigen::MatrixXd& inputs);
  Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd apply_columns(const Eigen::MatrixXd& inputs) const;
};

// Trained regressor. Immutable after construction; prediction is thread-safe.
class Model {
 public:
  // Conditions a GP on raw data with fixed hyperparameters (no scaling).
  Model(Eigen::MatrixXd inputs, Eigen::VectorXd labels, const Hyperparams& hp);
  // Same, with features mapped through `standardization` first.
  Model(Eigen::MatrixXd inputs, Eigen::VectorXd labels, const Hyperparams& hp,
        Standardization standardization);

  // Standardizes features, fits hyperparameters starting from `init`, and
  // conditions on the data.
  static Model train(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& labels,
                     const Hyperparams& init, const FitOptions& options = {});

  Prediction predict(std::span<const double> x) const;
  Prediction predict(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  // Posterior mean only; skips the variance solve.
  double predict_mean(std::span<const double> x) const;

  Eigen::Index feature_count() const { return inputs_.rows(); }
  Eigen::Index sample_count() const { return inputs_.cols(); }
  const Hyperparams& hyperparams() const { return hp_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }   // raw, unscaled
  const Eigen::VectorXd& labels() const { return labels_; }
  const Standardization& standardization() const { return standardization_; }
  double jitter() const { return jitter_; }
  double log_marginal_likelihood() const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);

 private:
  void condition();
  void check_dim(Eigen::Index n) const;

  Eigen::MatrixXd inputs_;
  Eigen::VectorXd labels_;
  Hyperparams hp_;
  Standardization standardization_;
  Eigen::MatrixXd scaled_;          // standardized inputs
  Eigen::MatrixXd chol_lower_;      // L with L L^T = K + sigma_n^2 I (+ jitter)
  Eigen::VectorXd alpha_;           // (K + sigma_n^2 I)^-1 labels
  double jitter_ = 0.0;
};

}  // namespace optoatp::gp
