#include "axionsim/mixing_model.hpp"

#include <cmath>
#include <stdexcept>

namespace axionsim {

namespace units {

double meter_in_inverse_eV() { return 1.0 / hbar_c_eV_m; }

double tesla_in_eV2() {
    // energy density B^2/mu0 [J m^-3] expressed in eV^4 with hbar = c = 1
    return std::sqrt(hbar_c_eV_m * hbar_c_eV_m * hbar_c_eV_m / (mu0_SI * elementary_charge_C));
}

std::vector<ConstantRecord> constant_table() {
    return {
        {"hbar_c", hbar_c_eV_m, "eV m", "CODATA 2018"},
        {"elementary_charge", elementary_charge_C, "C", "CODATA 2018 (exact)"},
        {"mu0", mu0_SI, "N A^-2", "CODATA 2018"},
        {"meter", meter_in_inverse_eV(), "eV^-1", "1/hbar_c"},
        {"tesla", tesla_in_eV2(), "eV^2", "sqrt(hbar_c^3/(mu0 e)), Heaviside-Lorentz"},
        {"inverse_GeV", inverse_GeV_in_inverse_eV, "eV^-1", "definition"},
    };
}

}  // namespace units

namespace {

// sin(y)/y
double sinc(double y) {
    if (std::abs(y) < 1e-6) {
        const double y2 = y * y;
        return 1.0 - y2 / 6.0 + y2 * y2 / 120.0;
    }
    return std::sin(y) / y;
}

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite ") + what);
}

}  // namespace

MixingFactors mixing_factors(double omega_phi, double omega_psi) {
    if (!(omega_phi > 0.0) || !(omega_psi > 0.0)) {
        throw std::invalid_argument("mixing_factors: frequencies must be > 0");
    }
    const double root = std::sqrt(omega_phi * omega_psi);
    return {(omega_phi + omega_psi) / (2.0 * root), (omega_phi - omega_psi) / (2.0 * root)};
}

Complex window(double gap, double t) {
    const double x = gap * t;
    return t * sinc(0.5 * x) * std::polar(1.0, -0.5 * x);
}

WindowValues window_functions_from_gaps(double delta_minus, double delta_plus, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("window_functions: t must be >= 0");
    return {window(delta_minus, t), window(delta_plus, t)};
}

WindowValues window_functions(double omega_phi, double omega_psi, double t) {
    return window_functions_from_gaps(omega_phi - omega_psi, omega_phi + omega_psi, t);
}

MixingParams MixingParams::from_natural(double m, double k, double g, double B, double t) {
    for (double v : {m, k, g, B, t}) require_finite(v, "mixing parameter");
    if (m < 0.0) throw std::invalid_argument("mixing params: m must be >= 0");
    if (!(k > 0.0)) throw std::invalid_argument("mixing params: k must be > 0");
    if (g < 0.0 || B < 0.0 || t < 0.0) throw std::invalid_argument("mixing params: g, B, t must be >= 0");
    MixingParams p;
    p.m = m;
    p.k = k;
    p.g = g;
    p.B = B;
    p.t = t;
    p.omega_psi = k;
    p.omega_phi = std::hypot(k, m);
    p.delta_plus = p.omega_phi + p.omega_psi;
    p.delta_minus = m * m / p.delta_plus;
    const double root = std::sqrt(p.omega_phi * p.omega_psi);
    p.U = p.delta_plus / (2.0 * root);
    p.V = p.delta_minus / (2.0 * root);
    p.delta_M = 0.5 * g * B;
    p.lambda = p.delta_M;
    const double a = m * m / (2.0 * k);
    p.delta_osc = std::sqrt(a * a + 4.0 * p.delta_M * p.delta_M);
    return p;
}

MixingParams MixingParams::with_lambda(double lambda_eV) const {
    if (!(lambda_eV >= 0.0)) throw std::invalid_argument("with_lambda: lambda must be >= 0");
    if (!(g > 0.0)) throw std::invalid_argument("with_lambda: needs g > 0");
    return from_natural(m, k, g, 2.0 * lambda_eV / g, t);
}

MixingParams to_natural_units(const LabInputs& lab) {
    if (!(lab.m_eV >= 0.0)) throw std::invalid_argument("lab inputs: m must be >= 0");
    if (!(lab.E_gamma_eV > 0.0)) throw std::invalid_argument("lab inputs: E_gamma must be > 0");
    if (!(lab.g_per_GeV > 0.0)) throw std::invalid_argument("lab inputs: g must be > 0");
    if (!(lab.B_T > 0.0)) throw std::invalid_argument("lab inputs: B_T must be > 0");
    if (!(lab.L_m > 0.0)) throw std::invalid_argument("lab inputs: L must be > 0");
    return MixingParams::from_natural(lab.m_eV, lab.E_gamma_eV,
                                      lab.g_per_GeV * units::inverse_GeV_in_inverse_eV,
                                      lab.B_T * units::tesla_in_eV2(),
                                      lab.L_m * units::meter_in_inverse_eV());
}

double classical_probability(const MixingParams& p) {
    const double x = p.delta_M * p.t;
    const double s = sinc(0.5 * p.delta_osc * p.t);
    return x * x * s * s;
}

double classical_small_mixing_probability(const MixingParams& p) {
    const double x = 0.5 * p.g * p.B * p.t;
    const double s = sinc(p.m * p.m * p.t / (4.0 * p.k));
    return x * x * s * s;
}

FactorizedCoupling FactorizedCoupling::from_params(const MixingParams& p) {
    const WindowValues w = window_functions_from_gaps(p.delta_minus, p.delta_plus, p.t);
    return {p.U, p.V, w.f, w.g, p.lambda};
}

LinearOperator build_Q_factorized(const ModeLayout& layout, const FactorizedCoupling& fac,
                                  bool drop_pair_terms) {
    GeneratorTerms terms;
    terms.pair_terms = !drop_pair_terms;
    return build_Q_factorized(layout, fac, terms);
}

LinearOperator build_Q_factorized(const ModeLayout& layout, const FactorizedCoupling& fac,
                                  const GeneratorTerms& terms) {
    for (double v : {fac.U, fac.V, fac.lambda, fac.f.real(), fac.f.imag(), fac.g.real(), fac.g.imag()}) {
        require_finite(v, "coupling");
    }
    const bool reduced = layout.is_reduced();
    if (!reduced && !layout.is_four_mode()) {
        throw std::invalid_argument("build_Q: layout must be the four-mode set or the reduced pair");
    }
    if (reduced && terms.pair_terms && fac.V != 0.0) {
        throw std::invalid_argument("build_Q: reduced layout cannot carry pair terms (V != 0); drop them explicitly");
    }
    const Complex i(0.0, 1.0);
    const Complex uf = fac.lambda * fac.U * fac.f;
    const Complex vg = fac.lambda * fac.V * fac.g;

    SparseMatrix q(static_cast<Eigen::Index>(layout.dimension()), static_cast<Eigen::Index>(layout.dimension()));
    auto conversion = [&](Mode axion, Mode photon) {
        const SparseMatrix a = annihilation_op(layout, axion).matrix();
        const SparseMatrix b = annihilation_op(layout, photon).matrix();
        const SparseMatrix bd_a = SparseMatrix(b.adjoint()) * a;
        const SparseMatrix ad_b = SparseMatrix(a.adjoint()) * b;
        q += SparseMatrix(-i * uf * bd_a + i * std::conj(uf) * ad_b);
    };
    // -i (V g b_s a_{-s} - V g^* a_s^dagger b_{-s}^dagger), summed over s
    auto pair = [&](Mode photon_s, Mode axion_minus_s, Mode axion_s, Mode photon_minus_s) {
        const SparseMatrix b = annihilation_op(layout, photon_s).matrix();
        const SparseMatrix a = annihilation_op(layout, axion_minus_s).matrix();
        const SparseMatrix ad = creation_op(layout, axion_s).matrix();
        const SparseMatrix bd = creation_op(layout, photon_minus_s).matrix();
        const SparseMatrix ba = b * a;
        const SparseMatrix adbd = ad * bd;
        q += SparseMatrix(-i * vg * ba + i * std::conj(vg) * adbd);
    };

    conversion(Mode::axion_plus, Mode::photon_plus);
    if (!reduced) {
        if (terms.minus_k_conversion) conversion(Mode::axion_minus, Mode::photon_minus);
        if (terms.pair_terms && vg != Complex(0.0)) {
            pair(Mode::photon_plus, Mode::axion_minus, Mode::axion_plus, Mode::photon_minus);
            pair(Mode::photon_minus, Mode::axion_plus, Mode::axion_minus, Mode::photon_plus);
        }
    }
    q.prune(Complex(0.0));
    return LinearOperator(layout, std::move(q), true);
}

LinearOperator build_Q(const ModeLayout& layout, const MixingParams& params, bool drop_pair_terms) {
    return build_Q_factorized(layout, FactorizedCoupling::from_params(params), drop_pair_terms);
}

Evolution::Evolution(std::vector<LinearOperator> generators, EvolutionOptions options)
    : generators_(std::move(generators)), options_(options) {
    if (generators_.empty()) throw std::invalid_argument("Evolution: needs at least one generator");
    for (const auto& g : generators_) {
        if (!g.is_hermitian()) throw std::invalid_argument("Evolution: generators must be Hermitian");
        if (!(g.layout() == generators_.front().layout())) {
            throw std::invalid_argument("Evolution: generators on different layouts");
        }
    }
}

StateVector Evolution::apply(const StateVector& state) const {
    StateVector s = state;
    for (const auto& g : generators_) s = evolve_exact(g, s, options_);
    return s;
}

Evolution windowed_unitary(const LinearOperator& Q, const EvolutionOptions& options) {
    return Evolution({Q}, options);
}

Evolution time_ordered_unitary(const MixingParams& params, const ModeLayout& layout, int steps,
                               const GeneratorTerms& terms, const EvolutionOptions& options) {
    if (steps < 1) throw std::invalid_argument("time_ordered_unitary: steps must be >= 1");
    std::vector<LinearOperator> slices;
    slices.reserve(static_cast<std::size_t>(steps));
    WindowValues prev{Complex(0.0), Complex(0.0)};
    for (int j = 1; j <= steps; ++j) {
        const double tj = params.t * double(j) / double(steps);
        const WindowValues cur = window_functions_from_gaps(params.delta_minus, params.delta_plus, tj);
        // integral of H_I over [t_{j-1}, t_j] is Q(t_j) - Q(t_{j-1}) since Q is linear in (f, g)
        const FactorizedCoupling slice{params.U, params.V, cur.f - prev.f, cur.g - prev.g, params.lambda};
        slices.push_back(build_Q_factorized(layout, slice, terms));
        prev = cur;
    }
    return Evolution(std::move(slices), options);
}

}  // namespace axionsim
