#include "axionsim/photon_states.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace axionsim {

namespace {

double wrap_phase(double phase) {
    double w = std::remainder(phase, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

SparseMatrix local_lowering(int n_max) {
    SparseMatrix b(n_max + 1, n_max + 1);
    std::vector<Eigen::Triplet<Complex>> t;
    for (int n = 1; n <= n_max; ++n) t.emplace_back(n - 1, n, std::sqrt(double(n)));
    b.setFromTriplets(t.begin(), t.end());
    return b;
}

// i (beta b^dagger - beta^* b)
SparseMatrix displacement_generator(int n_max, Complex beta) {
    const SparseMatrix b = local_lowering(n_max);
    const SparseMatrix bd = b.adjoint();
    const Complex i(0.0, 1.0);
    return SparseMatrix(i * beta * bd - i * std::conj(beta) * b);
}

// i (zeta/2 b^dagger^2 - zeta^*/2 b^2)
SparseMatrix squeeze_generator(int n_max, Complex zeta) {
    const SparseMatrix b = local_lowering(n_max);
    const SparseMatrix b2 = b * b;
    const SparseMatrix bd2 = b2.adjoint();
    const Complex i(0.0, 1.0);
    return SparseMatrix(0.5 * i * zeta * bd2 - 0.5 * i * std::conj(zeta) * b2);
}

StateVector embed_local(const ModeLayout& layout, Mode mode, const CVector& local) {
    CVector full = CVector::Zero(static_cast<Eigen::Index>(layout.dimension()));
    const auto stride = static_cast<Eigen::Index>(layout.stride(mode));
    for (Eigen::Index n = 0; n < local.size(); ++n) full[n * stride] = local[n];
    return StateVector(layout, std::move(full));
}

std::string sci(double x) {
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific << x;
    return os.str();
}

std::string sizing_hint(double beta_abs, double r, int added, int current) {
    const int suggested = suggested_photon_n_max(beta_abs, r, added);
    if (suggested > current) return "; try photon n_max >= " + std::to_string(suggested);
    return "; the tail here is heavier than the sizing rule assumes, raise n_max above " + std::to_string(current);
}

}  // namespace

double CoherentAmplitude::phase() const { return beta == Complex(0.0) ? 0.0 : wrap_phase(std::arg(beta)); }

SqueezeParam::SqueezeParam(double r_, double varphi_) : r(r_), varphi(wrap_phase(varphi_)) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("SqueezeParam: r must be finite and >= 0");
}

double poisson_tail(double mean, int level) {
    if (mean <= 0.0) return 0.0;
    const double log_mean = std::log(mean);
    double tail = 0.0;
    for (int n = std::max(level + 1, 0);; ++n) {
        const double term = std::exp(-mean + n * log_mean - std::lgamma(n + 1.0));
        tail += term;
        if (n > mean && term <= 1e-18 * tail) break;
        if (n > level + 100000) break;
    }
    return tail;
}

double squeezed_vacuum_tail(double r, int level) {
    if (r <= 0.0) return 0.0;
    const double log_t2 = 2.0 * std::log(std::tanh(r));
    const double log_norm = -std::log(std::cosh(r));
    double tail = 0.0;
    int k = std::max(0, level / 2);
    while (2 * k <= level) ++k;
    for (int count = 0; count < 10000000; ++count, ++k) {
        const double log_p = log_norm + k * log_t2 + std::lgamma(2.0 * k + 1.0) -
                             2.0 * std::lgamma(k + 1.0) - 2.0 * k * std::log(2.0);
        const double term = std::exp(log_p);
        tail += term;
        if (term <= 1e-18 * tail || term == 0.0) break;
    }
    return tail;
}

int suggested_photon_n_max(double beta_abs, double r, int added_photons) {
    const double stretch = std::exp(r);
    return static_cast<int>(std::ceil(beta_abs * beta_abs * stretch * stretch)) + added_photons +
           10 * static_cast<int>(std::ceil(beta_abs * stretch)) + 10;
}

LinearOperator displacement_op(const ModeLayout& layout, Mode mode, CoherentAmplitude beta,
                               const TruncationPolicy& policy) {
    const int n_max = layout.n_max(mode);
    const double predicted = poisson_tail(std::norm(beta.beta), n_max - policy.guard_margin);
    if (predicted > policy.leakage_threshold) {
        throw TruncationError("displacement_op: predicted leakage " + sci(predicted) +
                              " exceeds threshold" + sizing_hint(beta.magnitude(), 0.0, 0, n_max));
    }
    const CMatrix u = dense_unitary(CMatrix(displacement_generator(n_max, beta.beta)));
    return single_mode_operator(layout, mode, u);
}

LinearOperator squeeze_op(const ModeLayout& layout, Mode mode, SqueezeParam zeta,
                          const TruncationPolicy& policy) {
    const int n_max = layout.n_max(mode);
    const double predicted = squeezed_vacuum_tail(zeta.r, n_max - policy.guard_margin);
    if (predicted > policy.leakage_threshold) {
        throw TruncationError("squeeze_op: predicted leakage " + sci(predicted) +
                              " exceeds threshold" + sizing_hint(0.0, zeta.r, 0, n_max));
    }
    const CMatrix u = dense_unitary(CMatrix(squeeze_generator(n_max, zeta.zeta())));
    return single_mode_operator(layout, mode, u);
}

StateVector squeezed_coherent(const ModeLayout& layout, Mode mode, SqueezeParam zeta,
                              CoherentAmplitude beta, const TruncationPolicy& policy,
                              SqueezeOrdering ordering) {
    const int n_max = layout.n_max(mode);
    if (policy.guard_margin < 1 || policy.guard_margin > n_max) {
        throw std::invalid_argument("squeezed_coherent: guard margin outside [1, n_max]");
    }
    // untruncated amplitudes from (cosh r b - e^{i phi} sinh r b^dagger) psi = gamma psi,
    // i.e. mu sqrt(n+1) c_{n+1} = gamma c_n + nu sqrt(n) c_{n-1}
    const double mu = std::cosh(zeta.r);
    const Complex nu = std::polar(std::sinh(zeta.r), zeta.varphi);
    const Complex gamma = ordering == SqueezeOrdering::squeeze_then_displace
                              ? beta.beta
                              : mu * beta.beta - nu * std::conj(beta.beta);
    std::vector<Complex> c{Complex(1.0)};
    double total = 1.0;
    double peak = 1.0;
    const int floor_level = std::max(2 * n_max + 20, 8);
    for (int n = 0; n < 2000000; ++n) {
        const Complex prev = n > 0 ? c[n - 1] : Complex(0.0);
        const Complex next = (gamma * c[n] + nu * std::sqrt(double(n)) * prev) / (mu * std::sqrt(n + 1.0));
        c.push_back(next);
        const double w = std::norm(next);
        total += w;
        peak = std::max(peak, w);
        if (peak > 1e200) {
            for (auto& a : c) a *= 1e-150;
            total *= 1e-300;
            peak *= 1e-300;
        }
        // the tail falls off no slower than tanh^n r once past the peak
        if (n + 1 >= floor_level && w <= 1e-34 * total && std::norm(c[n]) <= 1e-34 * total) break;
    }
    const int work = static_cast<int>(c.size()) - 1;
    CVector v(work + 1);
    for (int n = 0; n <= work; ++n) v[n] = c[n];
    v.normalize();
    double leaked = 0.0;
    for (int n = std::max(n_max - policy.guard_margin + 1, 0); n <= work; ++n) leaked += std::norm(v[n]);
    if (leaked > policy.leakage_threshold) {
        throw TruncationError("squeezed_coherent: leakage " + sci(leaked) +
                              " exceeds threshold at n_max " + std::to_string(n_max) +
                              sizing_hint(beta.magnitude(), zeta.r, 0, n_max));
    }
    CVector cut = v.head(n_max + 1);
    cut.normalize();
    return embed_local(layout, mode, cut);
}

PhotonAdded add_photons(const StateVector& state, Mode mode, PhotonAddition addition,
                        const TruncationPolicy& policy) {
    if (addition.n < 0) throw std::invalid_argument("add_photons: N must be >= 0");
    const auto& layout = state.layout();
    const int n_max = layout.n_max(mode);
    if (addition.n == 0) {
        const double nf = state.norm_squared();
        if (addition.normalize) return {state.normalized(), nf, true};
        return {state, nf, false};
    }
    // weight b^dagger^N would carry on the untruncated space, and the part of
    // it that the hard truncation would drop
    double full = 0.0;
    double lost = 0.0;
    for (std::size_t i = 0; i < layout.dimension(); ++i) {
        const double w = std::norm(state[i]);
        if (w == 0.0) continue;
        const int n = layout.occupation(i, mode);
        double gain = 1.0;
        for (int j = 1; j <= addition.n; ++j) gain *= double(n + j);
        full += w * gain;
        if (n > n_max - addition.n) lost += w * gain;
    }
    if (full > 0.0 && lost / full > policy.leakage_threshold) {
        throw TruncationError("add_photons: adding " + std::to_string(addition.n) +
                              " photons overflows n_max " + std::to_string(n_max) +
                              " (dropped weight fraction " + sci(lost / full) + ")");
    }
    const LinearOperator up = creation_op(layout, mode);
    StateVector out = matrix_power_apply(up, addition.n, state);
    const double nf = out.norm_squared();
    if (addition.normalize) {
        if (nf == 0.0) throw std::domain_error("add_photons: cannot normalize the zero vector");
        return {out.normalized(), nf, true};
    }
    return {std::move(out), nf, false};
}

double coherent_overlap(CoherentAmplitude alpha, CoherentAmplitude beta) {
    return std::exp(-std::norm(alpha.beta - beta.beta));
}

}  // namespace axionsim
