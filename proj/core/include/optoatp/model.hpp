#pragma once

// Four-state kinetic model of a batch lactate fermentation whose ATPase
// expression is driven by green light.

#include <array>
#include <string_view>

namespace optoatp {

// Dynamic state. Concentrations in g/l; ATPase in virtual units per gram of
// biomass (VU/g).
struct State {
  double biomass = 0.0;  // B_c
  double atpase = 0.0;   // E
  double glucose = 0.0;  // s_G
  double lactate = 0.0;  // p_L

  bool finite() const noexcept;
  friend bool operator==(const State&, const State&) = default;
};

// Time derivative of a State, per hour.
using StateDerivative = State;

inline State operator+(const State& a, const State& b) noexcept {
  return {a.biomass + b.biomass, a.atpase + b.atpase, a.glucose + b.glucose,
          a.lactate + b.lactate};
}
inline State operator-(const State& a, const State& b) noexcept {
  return {a.biomass - b.biomass, a.atpase - b.atpase, a.glucose - b.glucose,
          a.lactate - b.lactate};
}
inline State operator*(double s, const State& a) noexcept {
  return {s * a.biomass, s * a.atpase, s * a.glucose, s * a.lactate};
}

// The 17 kinetic parameters. Field order matches kParamNames.
struct KineticParams {
  double k_BV;     // VU/g, growth repression half-saturation
  double k_G;      // g/l, Monod constant
  double k_GV;     // VU/g, uptake activation half-saturation
  double k_LV;     // VU/g, lactate activation half-saturation
  double m_G;      // g/g/h
  double m_L;      // g/g/h
  double n_1;      // Hill exponents (dimensionless)
  double n_2;
  double n_3;
  double q_Gmax;   // g/g/h
  double Y_BG;     // g/g
  double Y_LB;     // g/g
  double q_E0;     // VU/g/h
  double q_Emax;   // VU/g/h
  double n_4;
  double k_u;      // umol m^-2 s^-1
  double k_d;      // 1/h

  static constexpr std::size_t kCount = 17;

  // Parameter set fitted to the five constant-light batches.
  static KineticParams nominal() noexcept;

  std::array<double, kCount> to_array() const noexcept;
  static KineticParams from_array(const std::array<double, kCount>& values) noexcept;

  double& at(std::size_t index);
  double at(std::size_t index) const;

  // Throws DomainError unless every entry is finite and positive (m_G, m_L
  // and q_E0 may be zero).
  void validate() const;

  friend bool operator==(const KineticParams&, const KineticParams&) = default;
};

inline constexpr std::array<std::string_view, KineticParams::kCount> kParamNames = {
    "k_BV", "k_G",  "k_GV", "k_LV", "m_G",    "m_L",    "n_1", "n_2", "n_3",
    "q_Gmax", "Y_BG", "Y_LB", "q_E0", "q_Emax", "n_4", "k_u", "k_d"};

// Index of a parameter name, or throws DomainError.
std::size_t param_index(std::string_view name);

// Specific rates at one state and light input.
struct Rates {
  double q_G;  // g/g/h, glucose uptake
  double mu;   // 1/h, growth
  double q_L;  // g/g/h, lactate production
  double q_E;  // VU/g/h, ATPase expression
  double d_E;  // VU/g/h, ATPase dilution/degradation
};

// x^n / (x^n + k^n) with 0^n := 0.
double hill(double x, double k, double n) noexcept;

// Raw rate laws. Throws DomainError on non-finite state, or light that is
// negative or non-finite.
Rates eval_kinetics(const State& state, double light, const KineticParams& params);

// Knowledge-based right-hand side with all model-error terms set to zero.
StateDerivative rhs_nominal(const State& state, double light, const KineticParams& params);

}  // namespace optoatp
