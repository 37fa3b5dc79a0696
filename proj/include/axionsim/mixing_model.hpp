// Photon-axion mixing: lab-unit inputs, natural-unit parameters, classical
// conversion probability and the mixing generator Q.
//
// Q = -i lambda sum_{s=+,-} [ U f b_s^dagger a_s - U f^* a_s^dagger b_s
//                             + V g b_s a_{-s} - V g^* a_s^dagger b_{-s}^dagger ]
//
// with lambda = g B / 2 for box-normalised (Kronecker) modes.

#pragma once

#include <string>
#include <utility>
#include <vector>

#include "axionsim/state_space.hpp"

namespace axionsim {

namespace units {

// CODATA 2018 exact / recommended values.
inline constexpr double hbar_c_eV_m = 1.973269804e-7;          // eV m
inline constexpr double elementary_charge_C = 1.602176634e-19;  // C (exact)
inline constexpr double mu0_SI = 1.25663706212e-6;              // N A^-2

double meter_in_inverse_eV();  // 1 m = 5.0677e6 eV^-1
double tesla_in_eV2();         // 1 T = 195.35 eV^2 (Heaviside-Lorentz, hbar = c = 1)
inline constexpr double inverse_GeV_in_inverse_eV = 1e-9;

struct ConstantRecord {
    std::string name;
    double value;
    std::string unit;
    std::string provenance;
};
std::vector<ConstantRecord> constant_table();

}  // namespace units

struct LabInputs {
    double m_eV = 1e-6;
    double E_gamma_eV = 1e-6;
    double g_per_GeV = 1e-10;
    double B_T = 10.0;
    double L_m = 1000.0;
};

struct MixingParams {
    // natural units (powers of eV)
    double m = 0.0;
    double k = 0.0;
    double g = 0.0;  // eV^-1
    double B = 0.0;  // eV^2
    double t = 0.0;  // eV^-1, identified with the propagation length L
    // derived
    double omega_phi = 0.0;
    double omega_psi = 0.0;
    double delta_minus = 0.0;  // omega_phi - omega_psi, computed as m^2/(omega_phi+omega_psi)
    double delta_plus = 0.0;
    double U = 1.0;
    double V = 0.0;
    double delta_M = 0.0;
    double delta_osc = 0.0;
    double lambda = 0.0;

    static MixingParams from_natural(double m, double k, double g, double B, double t);
    // Same physics with B rescaled so that g B / 2 == lambda.
    MixingParams with_lambda(double lambda_eV) const;
};

MixingParams to_natural_units(const LabInputs& lab);

struct MixingFactors {
    double U;
    double V;
};
MixingFactors mixing_factors(double omega_phi, double omega_psi);

struct WindowValues {
    Complex f;
    Complex g;
};
// f = sin(D_- t/2)/(D_-/2) e^{-i D_- t/2}, g likewise with D_+.
WindowValues window_functions(double omega_phi, double omega_psi, double t);
WindowValues window_functions_from_gaps(double delta_minus, double delta_plus, double t);
// sin(x t/2)/(x/2) e^{-i x t/2}, with a Taylor branch for |x t| < 1e-6
Complex window(double gap, double t);

// (Delta_M L)^2 sin^2(Delta_osc L / 2) / (Delta_osc L / 2)^2
double classical_probability(const MixingParams& params);
// (g B L / 2)^2 sin^2(m^2 L / 4E) / (m^2 L / 4E)^2
double classical_small_mixing_probability(const MixingParams& params);

struct FactorizedCoupling {
    double U = 1.0;
    double V = 0.0;
    Complex f{0.0, 0.0};
    Complex g{0.0, 0.0};
    double lambda = 1.0;

    static FactorizedCoupling from_params(const MixingParams& params);
};

// Which parts of Q to assemble. The defaults give the full generator.
struct GeneratorTerms {
    bool pair_terms = true;
    // conversion b_{-k} <-> a_{-k}; switching it off reproduces a bookkeeping
    // in which only the +k photon converts
    bool minus_k_conversion = true;
};

LinearOperator build_Q(const ModeLayout& layout, const MixingParams& params,
                       bool drop_pair_terms = false);
LinearOperator build_Q_factorized(const ModeLayout& layout, const FactorizedCoupling& fac,
                                  bool drop_pair_terms);
LinearOperator build_Q_factorized(const ModeLayout& layout, const FactorizedCoupling& fac,
                                  const GeneratorTerms& terms);

// A sequence of generators applied left-ordered: exp(-i Q_{n-1}) ... exp(-i Q_0).
class Evolution {
public:
    explicit Evolution(std::vector<LinearOperator> generators, EvolutionOptions options = {});

    StateVector apply(const StateVector& state) const;
    std::size_t steps() const { return generators_.size(); }
    const std::vector<LinearOperator>& generators() const { return generators_; }

private:
    std::vector<LinearOperator> generators_;
    EvolutionOptions options_;
};

// exp(-iQ) with the window-integrated generator, no time ordering.
Evolution windowed_unitary(const LinearOperator& Q, const EvolutionOptions& options = {});
// Product over `steps` slices of exp(-i [Q(t_{j+1}) - Q(t_j)]) with t_j increasing.
Evolution time_ordered_unitary(const MixingParams& params, const ModeLayout& layout, int steps,
                               const GeneratorTerms& terms = {},
                               const EvolutionOptions& options = {});

}  // namespace axionsim
