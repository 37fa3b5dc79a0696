#include "axionsim/perturbation_oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/SVD>

namespace axionsim {

namespace {

double factorial(int n) {
    double r = 1.0;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

Complex minus_i_pow(int n) {
    static const Complex table[4] = {{1.0, 0.0}, {0.0, -1.0}, {-1.0, 0.0}, {0.0, 1.0}};
    return table[n % 4];
}

// mt19937_64 output mapped to [0, 1) with 53 bits; identical on every platform
double uniform01(std::mt19937_64& rng) { return double(rng() >> 11) * 0x1.0p-53; }

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace

Complex SeriesCoefficients::coefficient(int n) const {
    for (const auto& [k, c] : orders) {
        if (k == n) return c;
    }
    throw std::out_of_range("SeriesCoefficients: order " + std::to_string(n) + " not computed");
}

Complex SeriesCoefficients::sum(double lambda) const {
    Complex total(0.0);
    for (const auto& [k, c] : orders) total += c * std::pow(lambda, k);
    return total;
}

SeriesCoefficients amplitude_series(const ModeLayout& layout, const FactorizedCoupling& fac,
                                    const StateVector& in, const StateVector& out, int max_order,
                                    const GeneratorTerms& terms) {
    if (max_order < 0) throw std::invalid_argument("amplitude_series: max_order must be >= 0");
    if (!(in.layout() == layout) || !(out.layout() == layout)) {
        throw std::invalid_argument("amplitude_series: layout mismatch");
    }
    for (Mode m : layout.modes()) {
        const int support = support_level(in, m);
        if (support + max_order > layout.n_max(m)) {
            std::ostringstream os;
            os << "amplitude_series: mode " << to_string(m) << " has support " << support << ", order "
               << max_order << " needs n_max >= " << support + max_order << " (have " << layout.n_max(m) << ")";
            throw TruncationError(os.str());
        }
    }
    FactorizedCoupling unit = fac;
    unit.lambda = 1.0;
    const LinearOperator q = build_Q_factorized(layout, unit, terms);
    SeriesCoefficients s;
    StateVector v = in;
    for (int n = 0; n <= max_order; ++n) {
        if (n > 0) v = apply(q, v);
        s.orders.emplace_back(n, minus_i_pow(n) * inner_product(out, v) / factorial(n));
    }
    return s;
}

std::string to_string(Channel channel) { return channel == Channel::conversion ? "conversion" : "survival"; }

double Monomial::eval(const FactorizedCoupling& fac) const {
    return std::pow(fac.U, u) * std::pow(fac.V, v) * std::pow(std::abs(fac.f), f) * std::pow(std::abs(fac.g), g);
}

std::string Monomial::label() const {
    std::string s;
    auto part = [&s](const char* sym, int p) {
        if (p == 0) return;
        if (!s.empty()) s += ' ';
        s += sym;
        if (p > 1) s += '^' + std::to_string(p);
    };
    part("U", u);
    part("V", v);
    part("|f|", f);
    part("|g|", g);
    return s.empty() ? "1" : s;
}

std::vector<Monomial> bracket_basis(int order) {
    switch (order) {
        case 0:
        case 1: return {Monomial{}};
        case 2:
        case 3: return {{2, 0, 2, 0}, {0, 2, 0, 2}};
        case 4:
        case 5: return {{4, 0, 4, 0}, {2, 2, 2, 2}, {0, 4, 0, 4}};
        default: throw std::invalid_argument("bracket_basis: orders 0..5 only");
    }
}

MonomialDecomposition decompose_monomials(Channel channel, int order, const std::vector<Monomial>& basis,
                                          const std::vector<FactorizedCoupling>& probes,
                                          const ModeLayout& layout, const GeneratorTerms& terms) {
    if (basis.empty()) throw std::invalid_argument("decompose_monomials: empty basis");
    if (probes.size() < basis.size()) {
        throw std::invalid_argument("decompose_monomials: need at least as many probes as monomials");
    }
    if (!layout.is_four_mode()) throw std::invalid_argument("decompose_monomials: needs the four-mode layout");
    const int parity = channel == Channel::conversion ? 1 : 0;
    if (order % 2 != parity) throw std::invalid_argument("decompose_monomials: order has the wrong parity");

    const std::vector<int> one_photon{0, 0, 1, 0};
    const std::vector<int> one_axion{1, 0, 0, 0};
    const StateVector in = StateVector::basis(layout, one_photon);
    const StateVector out = StateVector::basis(layout, channel == Channel::conversion ? one_axion : one_photon);
    const double sign = (order / 2) % 2 == 0 ? 1.0 : -1.0;

    const auto rows = static_cast<Eigen::Index>(probes.size());
    const auto cols = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd a(2 * rows, cols);
    Eigen::VectorXd b(2 * rows);
    a.setZero();
    MonomialDecomposition d;
    d.channel = channel;
    d.order = order;
    d.basis = basis;
    for (Eigen::Index p = 0; p < rows; ++p) {
        const FactorizedCoupling& fac = probes[static_cast<std::size_t>(p)];
        const Complex c = amplitude_series(layout, fac, in, out, order, terms).coefficient(order);
        const Complex lead = channel == Channel::conversion ? fac.U * std::conj(fac.f) : Complex(1.0);
        const Complex target = sign * factorial(order) * c / lead;
        d.imaginary_part = std::max(d.imaginary_part, std::abs(target.imag()));
        for (Eigen::Index k = 0; k < cols; ++k) a(p, k) = basis[static_cast<std::size_t>(k)].eval(fac);
        b[p] = target.real();
        b[rows + p] = target.imag();
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    d.condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : std::numeric_limits<double>::infinity();
    if (!(d.condition <= 1e10)) {
        std::ostringstream os;
        os << "decompose_monomials: probe design condition number " << d.condition
           << " exceeds 1e10; re-randomise the probes (different seed)";
        throw std::runtime_error(os.str());
    }
    const Eigen::VectorXd x = svd.solve(b);
    const double bnorm = b.norm();
    d.residual = bnorm > 0.0 ? (a * x - b).norm() / bnorm : (a * x - b).norm();
    d.integral = true;
    for (Eigen::Index k = 0; k < cols; ++k) {
        d.coefficients.push_back(x[k]);
        const long long r = std::llround(x[k]);
        d.rounded.push_back(r);
        const double gap = std::abs(x[k] - double(r));
        d.max_integrality_gap = std::max(d.max_integrality_gap, gap);
        if (gap > 1e-6) d.integral = false;
    }
    return d;
}

std::vector<FactorizedCoupling> random_probes(std::uint64_t seed, int count) {
    if (count < 1) throw std::invalid_argument("random_probes: count must be >= 1");
    std::mt19937_64 rng(seed);
    std::vector<FactorizedCoupling> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        FactorizedCoupling fac;
        fac.U = uniform(rng, 1.0, 3.0);
        const double free_v = uniform(rng, 0.2, 2.0);
        fac.V = i % 2 == 0 ? std::sqrt(fac.U * fac.U - 1.0) : free_v;
        const double fa = uniform(rng, 0.1, 2.0);
        const double ga = uniform(rng, 0.1, 2.0);
        const double fp = uniform(rng, -std::numbers::pi, std::numbers::pi);
        const double gp = uniform(rng, -std::numbers::pi, std::numbers::pi);
        fac.f = std::polar(fa, fp);
        fac.g = std::polar(ga, gp);
        fac.lambda = 1.0;
        out.push_back(fac);
    }
    return out;
}

DegenerateClosedForm closed_form_check_degenerate(double lambda, double U, Complex f) {
    const double theta = lambda * U * std::abs(f);
    const double s = std::sin(theta);
    const double c = std::cos(theta);
    return {s * s, c * c};
}

const std::vector<ExpectedBracket>& expected_brackets() {
    static const std::vector<ExpectedBracket> table{
        {Channel::conversion, 1, {1}},
        {Channel::conversion, 3, {1, 10}},
        {Channel::conversion, 5, {1, 62, 197}},
        {Channel::survival, 0, {1}},
        {Channel::survival, 2, {1, 3}},
        {Channel::survival, 4, {1, 25, 33}},
    };
    return table;
}

VerificationReport verify_coefficients(std::uint64_t seed, int n_max, const GeneratorTerms& terms,
                                       double tolerance) {
    const ModeLayout layout = ModeLayout::four_mode(n_max);
    VerificationReport report;
    report.seed = seed;
    report.n_max = n_max;
    report.pass = true;
    std::uint64_t stream = seed;
    for (const auto& e : expected_brackets()) {
        const auto basis = bracket_basis(e.order);
        const auto probes = random_probes(stream++, static_cast<int>(2 * basis.size() + 2));
        const MonomialDecomposition d = decompose_monomials(e.channel, e.order, basis, probes, layout, terms);
        for (std::size_t k = 0; k < basis.size(); ++k) {
            CoefficientCheck row{e.channel,
                                 e.order,
                                 basis[k].label(),
                                 d.coefficients[k],
                                 e.coefficients[k],
                                 std::abs(d.coefficients[k] - double(e.coefficients[k])),
                                 d.residual,
                                 false};
            row.pass = d.rounded[k] == e.coefficients[k] &&
                       std::abs(d.coefficients[k] - double(d.rounded[k])) <= tolerance && d.residual <= tolerance;
            report.pass = report.pass && row.pass;
            report.rows.push_back(row);
        }
    }
    return report;
}

}  // namespace axionsim
