// Power-series coefficients of transition amplitudes in the coupling lambda,
// extracted exactly from repeated operator application, and their
// decomposition into monomials of U|f| and V|g|.

#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "axionsim/mixing_model.hpp"
#include "axionsim/state_space.hpp"

namespace axionsim {

struct SeriesCoefficients {
    // (n, c_n) with c_n = (-i)^n <out|Qhat^n|in> / n!, Q = lambda Qhat
    std::vector<std::pair<int, Complex>> orders;

    Complex coefficient(int n) const;
    Complex sum(double lambda) const;
};

// Coefficients for n = 0..max_order. fac.lambda is ignored (graded out).
// Requires support(in) + max_order <= n_max on every mode.
SeriesCoefficients amplitude_series(const ModeLayout& layout, const FactorizedCoupling& fac,
                                    const StateVector& in, const StateVector& out, int max_order,
                                    const GeneratorTerms& terms = {});

enum class Channel { conversion, survival };
std::string to_string(Channel channel);

// U^u V^v |f|^f |g|^g
struct Monomial {
    int u = 0;
    int v = 0;
    int f = 0;
    int g = 0;

    double eval(const FactorizedCoupling& fac) const;
    std::string label() const;
    friend bool operator==(const Monomial&, const Monomial&) = default;
};

// Bracket monomials at a given order: {1}, {U^2|f|^2, V^2|g|^2}, {U^4|f|^4, U^2V^2|f|^2|g|^2, V^4|g|^4}.
std::vector<Monomial> bracket_basis(int order);

struct MonomialDecomposition {
    Channel channel = Channel::conversion;
    int order = 0;
    std::vector<Monomial> basis;
    std::vector<double> coefficients;  // bracket coefficients, i.e. n! c_n with the leading factor removed
    std::vector<long long> rounded;
    double residual = 0.0;             // relative least-squares residual
    double condition = 0.0;            // of the probe design matrix
    double max_integrality_gap = 0.0;
    bool integral = false;
    double imaginary_part = 0.0;       // largest imaginary component of the normalised targets
};

// Solves n! c_n / lead (probe) = sign * sum_k coeff_k monomial_k(probe), where
// lead = U f^* for conversion and 1 for survival, and sign = (-1)^{floor(n/2)}.
// Throws if the probe design is ill-conditioned (condition number > 1e10).
MonomialDecomposition decompose_monomials(Channel channel, int order, const std::vector<Monomial>& basis,
                                          const std::vector<FactorizedCoupling>& probes,
                                          const ModeLayout& layout, const GeneratorTerms& terms = {});

// Random probe couplings. Every other probe is physical (V = sqrt(U^2-1)),
// the rest have V free in [0.2, 2]. U in [1, 3], |f|,|g| in [0.1, 2], random phases.
std::vector<FactorizedCoupling> random_probes(std::uint64_t seed, int count);

struct DegenerateClosedForm {
    double p_conversion;
    double p_survival;
};
// V = 0: the two-mode rotation gives sin^2(lambda U |f|), cos^2(lambda U |f|).
DegenerateClosedForm closed_form_check_degenerate(double lambda, double U, Complex f);

struct CoefficientCheck {
    Channel channel;
    int order;
    std::string monomial;
    double recovered;
    long long expected;
    double delta;
    double residual;
    bool pass;
};

struct VerificationReport {
    std::vector<CoefficientCheck> rows;
    std::uint64_t seed = 0;
    int n_max = 7;
    bool pass = false;
};

// Reference bracket table checked by verify_coefficients.
struct ExpectedBracket {
    Channel channel;
    int order;
    std::vector<long long> coefficients;
};
const std::vector<ExpectedBracket>& expected_brackets();

VerificationReport verify_coefficients(std::uint64_t seed, int n_max = 7, const GeneratorTerms& terms = {},
                                       double tolerance = 1e-6);

}  // namespace axionsim
