#include <doctest.h>

#include <cmath>
#include <limits>

#include "optoatp/error.hpp"
#include "optoatp/model.hpp"

using namespace optoatp;

namespace {

const KineticParams P = KineticParams::nominal();

// Independent evaluation of x^n / (x^n + k^n).
double ref_hill(double x, double k, double n) {
  if (x <= 0.0) return 0.0;
  return std::pow(x, n) / (std::pow(x, n) + std::pow(k, n));
}

}  // namespace

TEST_CASE("nominal parameter table") {
  CHECK(P.q_Gmax == 1.731);
  CHECK(P.k_G == 5.340e-7);
  CHECK(P.Y_BG == 0.1083);
  CHECK(P.k_u == 372.9);
  CHECK(P.k_d == 0.988);
  CHECK_NOTHROW(P.validate());
  for (std::size_t i = 0; i < KineticParams::kCount; ++i) CHECK(param_index(kParamNames[i]) == i);
  CHECK(KineticParams::from_array(P.to_array()) == P);
  CHECK_THROWS_AS(param_index("q_max"), Error);
}

TEST_CASE("parameter validation") {
  KineticParams p = P;
  p.k_G = -1.0;
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = P;
  p.q_Gmax = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(p.validate(), DomainError);
  p = P;
  p.m_L = 0.0;
  CHECK_NOTHROW(p.validate());
}

TEST_CASE("hill function") {
  CHECK(hill(0.0, 1.0, 2.0) == 0.0);
  CHECK(hill(1.0, 1.0, 3.0) == doctest::Approx(0.5));
  CHECK(hill(873.0, 372.9, 4.718) == doctest::Approx(ref_hill(873.0, 372.9, 4.718)).epsilon(1e-14));
  CHECK(hill(1e12, 1.0, 1.0) == doctest::Approx(1.0));
}

TEST_CASE("uptake at s_G=4 without ATPase") {
  const Rates r = eval_kinetics({0.1, 0.0, 4.0, 0.0}, 0.0, P);
  const double expected = 1.731 * 4.0 / (4.0 + 5.340e-7);
  CHECK(r.q_G == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.q_G == doctest::Approx(1.731).epsilon(1e-6));
  CHECK(r.mu == doctest::Approx(P.Y_BG * (expected - P.m_G)).epsilon(1e-12));
  CHECK(r.q_L == doctest::Approx(P.Y_LB * r.mu + P.m_L).epsilon(1e-12));
}

TEST_CASE("zero substrate stops uptake") {
  for (double e : {0.0, 1.0, 20.0}) {
    const Rates r = eval_kinetics({0.1, e, 0.0, 0.0}, 500.0, P);
    CHECK(r.q_G == 0.0);
  }
}

TEST_CASE("expression rate") {
  CHECK(eval_kinetics({0.1, 0.0, 1.0, 0.0}, 0.0, P).q_E == doctest::Approx(1e-6));
  const double expected = P.q_E0 + P.q_Emax * ref_hill(873.0, P.k_u, P.n_4);
  const double q_e = eval_kinetics({0.1, 0.0, 1.0, 0.0}, 873.0, P).q_E;
  CHECK(q_e == doctest::Approx(expected).epsilon(1e-12));
  CHECK(q_e == doctest::Approx(9.822).epsilon(1e-3));
}

TEST_CASE("saturating ATPase doubles uptake and stops growth") {
  // n_1 = 0.01 saturates extremely slowly, so probe far out.
  const double e = 1e300;
  const Rates r = eval_kinetics({0.1, e, 4.0, 0.0}, 0.0, P);
  const double q_g = P.q_Gmax * 4.0 / (4.0 + P.k_G) * (1.0 + ref_hill(e, P.k_GV, P.n_1));
  CHECK(r.q_G == doctest::Approx(q_g).epsilon(1e-12));
  CHECK(r.q_G == doctest::Approx(2.0 * P.q_Gmax).epsilon(1e-3));
  CHECK(std::abs(r.mu) < 1e-12);
  CHECK(r.q_L == doctest::Approx(P.m_L * 2.0).epsilon(1e-9));
}

TEST_CASE("rhs with zero biomass") {
  const StateDerivative d = rhs_nominal({0.0, 0.0, 3.0, 0.5}, 0.0, P);
  CHECK(d.glucose == 0.0);
  CHECK(d.biomass == 0.0);
  CHECK(d.lactate == 0.0);
  CHECK(d.atpase == doctest::Approx(1e-6));
}

TEST_CASE("ATPase steady state under full light") {
  const double q_e = P.q_E0 + P.q_Emax * ref_hill(873.0, P.k_u, P.n_4);
  const double e_star = q_e / P.k_d;
  CHECK(e_star == doctest::Approx(9.94).epsilon(1e-3));
  const StateDerivative d = rhs_nominal({0.1, e_star, 2.0, 0.0}, 873.0, P);
  CHECK(std::abs(d.atpase) < 1e-12);
}

TEST_CASE("glucose slope at s_G=4, B_c=0.1") {
  const StateDerivative d = rhs_nominal({0.1, 0.0, 4.0, 0.0}, 0.0, P);
  CHECK(d.glucose == doctest::Approx(-0.1 * 1.731 * 4.0 / (4.0 + 5.340e-7)).epsilon(1e-12));
  CHECK(d.glucose == doctest::Approx(-0.1731).epsilon(1e-5));
  CHECK(d.biomass == doctest::Approx(0.1 * P.Y_BG * (1.731 * 4.0 / (4.0 + 5.340e-7) - P.m_G)));
}

TEST_CASE("invalid inputs are rejected") {
  CHECK_THROWS_AS(eval_kinetics({0.1, 0.0, 1.0, 0.0}, -1.0, P), DomainError);
  CHECK_THROWS_AS(eval_kinetics({std::numeric_limits<double>::infinity(), 0.0, 1.0, 0.0}, 0.0, P),
                  DomainError);
}
