#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "optoatp/error.hpp"
#include "optoatp/gp.hpp"

using namespace optoatp;
using gp::Hyperparams;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

Eigen::MatrixXd dense_k(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Hyperparams& hp) {
  Eigen::MatrixXd k(a.cols(), b.cols());
  for (Eigen::Index i = 0; i < a.cols(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      k(i, j) = hp.signal_variance *
                std::exp(-(a.col(i) - b.col(j)).squaredNorm() / (2.0 * hp.length_scale * hp.length_scale));
  return k;
}

// Textbook evaluation through an explicit inverse and determinant.
double dense_lml(const Eigen::MatrixXd& v, const Eigen::VectorXd& l, const Hyperparams& hp) {
  const Eigen::Index n = v.cols();
  Eigen::MatrixXd k = dense_k(v, v, hp) + hp.noise_variance * Eigen::MatrixXd::Identity(n, n);
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(k);
  const double quad = l.dot(lu.inverse() * l);
  return -0.5 * quad - 0.5 * std::log(lu.determinant()) - 0.5 * static_cast<double>(n) * kLog2Pi;
}

Eigen::MatrixXd random_inputs(int dim, int n, std::uint64_t seed, double spread = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-spread, spread);
  Eigen::MatrixXd v(dim, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < dim; ++i) v(i, j) = u(rng);
  return v;
}

Eigen::VectorXd smooth_labels(const Eigen::MatrixXd& v) {
  Eigen::VectorXd l(v.cols());
  for (Eigen::Index j = 0; j < v.cols(); ++j) l(j) = std::sin(2.0 * v(0, j)) + 0.5 * v.col(j).squaredNorm();
  return l;
}

}  // namespace

TEST_CASE("kernel values") {
  const Hyperparams hp{1.0, 1.0, 0.0};
  const std::vector<double> a{0.3, -1.0}, b{1.3, 0.0};
  CHECK(gp::kernel(a, a, hp) == 1.0);
  CHECK(gp::kernel(a, b, hp) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(gp::kernel(a, b, hp) == doctest::Approx(0.36788).epsilon(1e-5));
  const std::vector<double> far{1e6, 1e6};
  CHECK(gp::kernel(a, far, hp) == 0.0);
  const std::vector<double> short_vec{1.0};
  CHECK_THROWS_AS(gp::kernel(a, short_vec, hp), DomainError);
}

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS_AS((Hyperparams{0.0, 1.0, 0.0}.validate()), DomainError);
  CHECK_THROWS_AS((Hyperparams{1.0, -1.0, 0.0}.validate()), DomainError);
  CHECK_THROWS_AS((Hyperparams{1.0, 1.0, -1e-3}.validate()), DomainError);
  CHECK_NOTHROW((Hyperparams{1.0, 1.0, 0.0}.validate()));
}

TEST_CASE("single-point likelihoods") {
  Eigen::MatrixXd v(1, 1);
  v << 0.7;
  Eigen::VectorXd l(1);
  l << 0.0;
  const Hyperparams hp{2.0, 0.3, 0.5};
  CHECK(gp::log_marginal_likelihood(v, l, hp) ==
        doctest::Approx(-0.5 * std::log(2.5) - 0.5 * kLog2Pi).epsilon(1e-12));

  l << 1.0;
  const Hyperparams unit{1.0, 1.0, 0.25};
  const double expected = -0.5 / 1.25 - 0.5 * std::log(1.25) - 0.5 * kLog2Pi;
  CHECK(gp::log_marginal_likelihood(v, l, unit) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(-1.4305).epsilon(1e-4));
}

TEST_CASE("distant points decouple") {
  Eigen::MatrixXd v(1, 2);
  v << 0.0, 100.0;
  Eigen::VectorXd l(2);
  l << 0.4, -1.1;
  const Hyperparams hp{1.0, 1.0, 0.1};
  const double one = -0.5 * 0.16 / 1.1 - 0.5 * std::log(1.1) - 0.5 * kLog2Pi;
  const double two = -0.5 * 1.21 / 1.1 - 0.5 * std::log(1.1) - 0.5 * kLog2Pi;
  CHECK(gp::log_marginal_likelihood(v, l, hp) == doctest::Approx(one + two).epsilon(1e-12));
}

TEST_CASE("factorized likelihood matches dense formula") {
  for (int n : {2, 5, 12, 20}) {
    const Eigen::MatrixXd v = random_inputs(3, n, 17u + static_cast<std::uint64_t>(n));
    const Eigen::VectorXd l = smooth_labels(v);
    for (const Hyperparams& hp : {Hyperparams{1.0, 0.7, 1e-2}, Hyperparams{3.0, 1.5, 1e-3},
                                  Hyperparams{0.5, 0.3, 0.2}}) {
      CHECK(std::abs(gp::log_marginal_likelihood(v, l, hp) - dense_lml(v, l, hp)) < 1e-8);
    }
  }
}

TEST_CASE("one-point posterior") {
  Eigen::MatrixXd v(1, 1);
  v << 0.0;
  Eigen::VectorXd l(1);
  l << 1.0;
  const gp::Model m(v, l, Hyperparams{1.0, 1.0, 0.0});
  const std::vector<double> x{1.0};
  const gp::Prediction p = m.predict(x);
  CHECK(p.mean == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(p.variance == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(p.mean == doctest::Approx(0.6065).epsilon(1e-4));
  CHECK(p.variance == doctest::Approx(0.6321).epsilon(1e-4));
}

TEST_CASE("posterior matches dense formulas") {
  const Eigen::MatrixXd v = random_inputs(2, 15, 5);
  const Eigen::VectorXd l = smooth_labels(v);
  const Hyperparams hp{1.5, 0.8, 1e-3};
  const gp::Model m(v, l, hp);
  const Eigen::MatrixXd k =
      dense_k(v, v, hp) + hp.noise_variance * Eigen::MatrixXd::Identity(v.cols(), v.cols());
  const Eigen::MatrixXd kinv = k.inverse();
  const Eigen::MatrixXd probes = random_inputs(2, 10, 6, 1.5);
  for (Eigen::Index j = 0; j < probes.cols(); ++j) {
    const Eigen::VectorXd ks = dense_k(v, probes.col(j), hp).col(0);
    const gp::Prediction p = m.predict(Eigen::VectorXd(probes.col(j)));
    CHECK(std::abs(p.mean - ks.dot(kinv * l)) < 1e-8);
    CHECK(std::abs(p.variance - (hp.signal_variance - ks.dot(kinv * ks))) < 1e-8);
    const std::vector<double> x{probes(0, j), probes(1, j)};
    CHECK(m.predict_mean(x) == doctest::Approx(p.mean).epsilon(1e-12));
  }
  CHECK(m.log_marginal_likelihood() == doctest::Approx(dense_lml(v, l, hp)).epsilon(1e-10));
}

TEST_CASE("noise-free interpolation and variance bounds") {
  const Eigen::MatrixXd v = random_inputs(3, 12, 9);
  const Eigen::VectorXd l = smooth_labels(v);
  const Hyperparams hp{2.0, 0.5, 0.0};
  const gp::Model m(v, l, hp);
  CHECK(m.jitter() == 0.0);
  for (Eigen::Index j = 0; j < v.cols(); ++j) {
    const gp::Prediction p = m.predict(Eigen::VectorXd(v.col(j)));
    CHECK(std::abs(p.mean - l(j)) < 1e-8);
    CHECK(p.variance >= 0.0);
    CHECK(p.variance <= hp.signal_variance);
  }
  const Eigen::MatrixXd probes = random_inputs(3, 50, 10, 3.0);
  for (Eigen::Index j = 0; j < probes.cols(); ++j) {
    const gp::Prediction p = m.predict(Eigen::VectorXd(probes.col(j)));
    CHECK(p.variance >= 0.0);
    CHECK(p.variance <= hp.signal_variance);
  }
}

TEST_CASE("prior reversion far from the data") {
  const Eigen::MatrixXd v = random_inputs(2, 8, 3);
  const gp::Model m(v, smooth_labels(v), Hyperparams{1.3, 0.5, 1e-4});
  const std::vector<double> far{50.0, -50.0};
  const gp::Prediction p = m.predict(far);
  CHECK(std::abs(p.mean) < 1e-12);
  CHECK(p.variance == doctest::Approx(1.3));
}

TEST_CASE("duplicate inputs trigger jitter") {
  Eigen::MatrixXd v(1, 3);
  v << 0.5, 0.5, 0.5;
  Eigen::VectorXd l(3);
  l << 1.0, 1.0, 1.0;
  const gp::Model m(v, l, Hyperparams{1.0, 1.0, 0.0});
  CHECK(m.jitter() > 0.0);
  CHECK(std::isfinite(m.predict_mean(std::vector<double>{0.5})));
}

TEST_CASE("length scale recovered from a GP draw") {
  const Hyperparams truth{1.0, 0.5, 0.01};
  const int n = 50;
  Eigen::MatrixXd v(1, n);
  for (int j = 0; j < n; ++j) v(0, j) = 5.0 * j / (n - 1);
  const Eigen::MatrixXd k = dense_k(v, v, truth) + truth.noise_variance * Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(k).matrixL();
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> z(0.0, 1.0);
  Eigen::VectorXd e(n);
  for (int j = 0; j < n; ++j) e(j) = z(rng);
  const Eigen::VectorXd l = chol * e;

  const Hyperparams init{1.0, 1.0, 0.1};
  gp::FitOptions opt;
  opt.seed = 1;
  const Hyperparams fit = gp::fit_hyperparameters(v, l, init, opt);
  CHECK(fit.length_scale > 0.25);
  CHECK(fit.length_scale < 1.0);
  CHECK(gp::log_marginal_likelihood(v, l, fit) >= gp::log_marginal_likelihood(v, l, init));
}

TEST_CASE("fit never loses likelihood and is seed-reproducible") {
  const Eigen::MatrixXd v = random_inputs(2, 20, 11);
  const Eigen::VectorXd l = smooth_labels(v);
  for (const Hyperparams& init : {Hyperparams{1.0, 1.0, 1e-2}, Hyperparams{0.01, 10.0, 1.0}}) {
    gp::FitOptions opt;
    opt.budget = 60;
    opt.starts = 2;
    opt.seed = 4;
    const Hyperparams a = gp::fit_hyperparameters(v, l, init, opt);
    const Hyperparams b = gp::fit_hyperparameters(v, l, init, opt);
    CHECK(gp::log_marginal_likelihood(v, l, a) >= gp::log_marginal_likelihood(v, l, init));
    CHECK(a.signal_variance == b.signal_variance);
    CHECK(a.length_scale == b.length_scale);
    CHECK(a.noise_variance == b.noise_variance);
  }
}

TEST_CASE("constant labels drive the noise down") {
  const Eigen::MatrixXd v = random_inputs(1, 15, 21);
  const Eigen::VectorXd l = Eigen::VectorXd::Constant(15, 0.8);
  const Hyperparams init{1.0, 1.0, 0.1};
  const Hyperparams fit = gp::fit_hyperparameters(v, l, init);
  CHECK(fit.noise_variance < 1e-3 * init.noise_variance);
}

TEST_CASE("standardization") {
  Eigen::MatrixXd v(2, 4);
  v << 1, 2, 3, 4, 5, 5, 5, 5;
  const gp::Standardization s = gp::Standardization::fit(v);
  const Eigen::MatrixXd z = s.apply_columns(v);
  CHECK(std::abs(z.row(0).mean()) < 1e-12);
  CHECK(z.row(0).squaredNorm() / 4.0 == doctest::Approx(1.0));
  CHECK(s.scale(1) == 1.0);
  CHECK(z.row(1).isZero());
}

TEST_CASE("trained model survives a JSON round trip") {
  const Eigen::MatrixXd v = random_inputs(3, 10, 30);
  const Eigen::VectorXd l = smooth_labels(v);
  gp::FitOptions opt;
  opt.budget = 50;
  opt.starts = 2;
  const gp::Model m = gp::Model::train(v, l, Hyperparams{1.0, 1.0, 1e-2}, opt);
  const gp::Model r = gp::Model::from_json(nlohmann::json::parse(m.to_json().dump()));
  const Eigen::MatrixXd probes = random_inputs(3, 5, 31);
  for (Eigen::Index j = 0; j < probes.cols(); ++j) {
    const Eigen::VectorXd x = probes.col(j);
    CHECK(r.predict(x).mean == doctest::Approx(m.predict(x).mean).epsilon(1e-12));
    CHECK(r.predict(x).variance == doctest::Approx(m.predict(x).variance).epsilon(1e-12));
  }
  CHECK_THROWS_AS(m.predict(Eigen::VectorXd::Zero(2)), DomainError);
}
