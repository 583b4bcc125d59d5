#include "optoatp/model.hpp"

#include <cmath>
#include <string>

#include "optoatp/error.hpp"

namespace optoatp {

bool State::finite() const noexcept {
  return std::isfinite(biomass) && std::isfinite(atpase) && std::isfinite(glucose) &&
         std::isfinite(lactate);
}

KineticParams KineticParams::nominal() noexcept {
  KineticParams p{};
  p.k_BV = 2.605e-4;
  p.k_G = 5.340e-7;
  p.k_GV = 1.053e-6;
  p.k_LV = 1.002e1;
  p.m_G = 1.232e-6;
  p.m_L = 1.910;
  p.n_1 = 1.000e-2;
  p.n_2 = 1.028e-1;
  p.n_3 = 1.000e1;
  p.q_Gmax = 1.731;
  p.Y_BG = 1.083e-1;
  p.Y_LB = 2.204;
  p.q_E0 = 1.000e-6;
  p.q_Emax = 1.000e1;
  p.n_4 = 4.718;
  p.k_u = 3.729e2;
  p.k_d = 0.988;
  return p;
}

std::array<double, KineticParams::kCount> KineticParams::to_array() const noexcept {
  return {k_BV, k_G, k_GV, k_LV, m_G, m_L, n_1, n_2, n_3,
          q_Gmax, Y_BG, Y_LB, q_E0, q_Emax, n_4, k_u, k_d};
}

KineticParams KineticParams::from_array(const std::array<double, kCount>& v) noexcept {
  return {v[0], v[1], v[2],  v[3],  v[4],  v[5],  v[6],  v[7], v[8],
          v[9], v[10], v[11], v[12], v[13], v[14], v[15], v[16]};
}

double& KineticParams::at(std::size_t index) {
  switch (index) {
    case 0: return k_BV;
    case 1: return k_G;
    case 2: return k_GV;
    case 3: return k_LV;
    case 4: return m_G;
    case 5: return m_L;
    case 6: return n_1;
    case 7: return n_2;
    case 8: return n_3;
    case 9: return q_Gmax;
    case 10: return Y_BG;
    case 11: return Y_LB;
    case 12: return q_E0;
    case 13: return q_Emax;
    case 14: return n_4;
    case 15: return k_u;
    case 16: return k_d;
    default: throw DomainError("kinetic parameter index out of range: " + std::to_string(index));
  }
}

double KineticParams::at(std::size_t index) const {
  return const_cast<KineticParams&>(*this).at(index);
}

void KineticParams::validate() const {
  for (std::size_t i = 0; i < kCount; ++i) {
    const double v = at(i);
    const auto name = std::string(kParamNames[i]);
    if (!std::isfinite(v)) throw DomainError("kinetic parameter " + name + " is not finite");
    const bool may_be_zero = (i == 4 || i == 5 || i == 12);  // m_G, m_L, q_E0
    if (may_be_zero ? v < 0.0 : v <= 0.0) {
      throw DomainError("kinetic parameter " + name + " must be " +
                        (may_be_zero ? "non-negative" : "positive") + ", got " +
                        std::to_string(v));
    }
  }
}

std::size_t param_index(std::string_view name) {
  for (std::size_t i = 0; i < kParamNames.size(); ++i) {
    if (kParamNames[i] == name) return i;
  }
  throw DomainError("unknown kinetic parameter '" + std::string(name) + "'");
}

double hill(double x, double k, double n) noexcept {
  if (x <= 0.0) return 0.0;
  // 1 / (1 + (k/x)^n) avoids overflow of x^n for steep exponents.
  return 1.0 / (1.0 + std::pow(k / x, n));
}

Rates eval_kinetics(const State& s, double light, const KineticParams& p) {
  if (!s.finite()) throw DomainError("eval_kinetics: non-finite state");
  if (!std::isfinite(light)) throw DomainError("eval_kinetics: non-finite light input");
  if (light < 0.0) throw DomainError("eval_kinetics: negative light input");

  Rates r{};
  const double monod = s.glucose / (s.glucose + p.k_G);
  r.q_G = p.q_Gmax * monod * (1.0 + hill(s.atpase, p.k_GV, p.n_1));
  r.mu = p.Y_BG * (r.q_G - p.m_G) * (1.0 - hill(s.atpase, p.k_BV, p.n_2));
  r.q_L = (p.Y_LB * r.mu + p.m_L) * (1.0 + hill(s.atpase, p.k_LV, p.n_3));
  r.q_E = p.q_E0 + p.q_Emax * hill(light, p.k_u, p.n_4);
  r.d_E = p.k_d * s.atpase;
  return r;
}

StateDerivative rhs_nominal(const State& s, double light, const KineticParams& p) {
  const Rates r = eval_kinetics(s, light, p);
  StateDerivative d;
  d.glucose = -r.q_G * s.biomass;
  d.biomass = r.mu * s.biomass;
  d.lactate = r.q_L * s.biomass;
  d.atpase = r.q_E - r.d_E;
  return d;
}

}  // namespace optoatp
