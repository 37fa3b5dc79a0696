#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "axionsim/mixing_model.hpp"

using namespace axionsim;

namespace {

StateVector four(const ModeLayout& l, int ap, int am, int bp, int bm) {
    const int occ[4] = {ap, am, bp, bm};
    return StateVector::basis(l, occ);
}

double conversion(const ModeLayout& l, const Evolution& e) {
    return std::norm(inner_product(four(l, 1, 0, 0, 0), e.apply(four(l, 0, 0, 1, 0))));
}

}  // namespace

TEST_CASE("unit conversions") {
    CHECK(units::meter_in_inverse_eV() == doctest::Approx(5.0677e6).epsilon(1e-4));
    CHECK(units::tesla_in_eV2() == doctest::Approx(195.35).epsilon(1e-4));
    // 1 T = sqrt(hbar^3 c^5 / (mu0 e^2)) / ... spelled out in SI, independent of the helper
    const double hbar = 1.054571817e-34, c = 299792458.0, e = 1.602176634e-19;
    const double tesla = std::sqrt(hbar * hbar * hbar * c * c * c / units::mu0_SI) / (e * e);
    CHECK(units::tesla_in_eV2() == doctest::Approx(tesla).epsilon(1e-8));
    CHECK(units::constant_table().size() >= 5);

    const MixingParams p = to_natural_units(LabInputs{});
    const double gBL = p.g * p.B * p.t;
    CHECK(gBL > 0.5e-6);
    CHECK(gBL < 2e-6);
    const double phase = p.m * p.m * p.t / (2.0 * p.k);
    CHECK(phase == doctest::Approx(2533.8).epsilon(1e-4));
    CHECK(phase > 1e3);
    CHECK(phase < 1e5);
    CHECK_THROWS(to_natural_units(LabInputs{1e-6, 0.0, 1e-10, 10.0, 1000.0}));
    CHECK_THROWS(to_natural_units(LabInputs{-1.0, 1e-6, 1e-10, 10.0, 1000.0}));
    CHECK_THROWS(to_natural_units(LabInputs{1e-6, 1e-6, 1e-10, 0.0, 1000.0}));
}

TEST_CASE("massless degeneracy") {
    const MixingParams p = to_natural_units(LabInputs{0.0, 1e-3, 1e-10, 10.0, 1000.0});
    CHECK(p.omega_phi == p.omega_psi);
    CHECK(p.U == 1.0);
    CHECK(p.V == 0.0);
    CHECK(p.delta_minus == 0.0);
    CHECK(p.lambda == doctest::Approx(0.5 * p.g * p.B));
    CHECK(p.delta_osc == doctest::Approx(2.0 * p.delta_M));
}

TEST_CASE("mixing factors") {
    const auto d = mixing_factors(1.3, 1.3);
    CHECK(d.U == 1.0);
    CHECK(d.V == 0.0);
    const auto h = mixing_factors(2.0, 1.0);
    CHECK(h.U == doctest::Approx(3.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-14));
    CHECK(h.V == doctest::Approx(1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-14));
    CHECK(h.U == doctest::Approx(1.06066).epsilon(1e-5));
    CHECK(h.V == doctest::Approx(0.353553).epsilon(1e-5));
    CHECK_THROWS(mixing_factors(0.0, 1.0));

    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> ex(-6.0, 6.0);
    std::uniform_real_distribution<double> gap(-8.0, 2.0);
    for (int i = 0; i < 2000; ++i) {
        const double psi = std::pow(10.0, ex(rng));
        const double phi = psi * (1.0 + std::pow(10.0, gap(rng)));
        const auto f = mixing_factors(phi, psi);
        CHECK(std::abs(f.U * f.U - f.V * f.V - 1.0) <= 1e-12);
        CHECK(f.V >= 0.0);
    }
    const MixingParams p = MixingParams::from_natural(0.7, 0.2, 1.0, 1.0, 1.0);
    CHECK(p.U * p.U - p.V * p.V == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("window functions") {
    const auto z = window_functions(1.4, 1.0, 0.0);
    CHECK(std::abs(z.f) == 0.0);
    CHECK(std::abs(z.g) == 0.0);
    const auto d = window_functions(1.0, 1.0, 2.5);
    CHECK(d.f == Complex(2.5, 0.0));
    const double gap = 0.3;
    CHECK(std::abs(window(gap, 2.0 * std::numbers::pi / gap)) < 1e-15);
    CHECK_THROWS(window_functions(1.0, 1.0, -1.0));

    // closed-form integral of e^{-i gap t'} over [0, t]
    for (double x : {1e-3, 0.7, 5.0, 40.0}) {
        const double t = 1.7;
        const Complex direct = Complex(0.0, 1.0) * (std::polar(1.0, -x * t) - 1.0) / x;
        CHECK(std::abs(window(x, t) - direct) < 1e-12);
    }
    // either side of the series switch, against sum_n (-i x)^n t^{n+1} / (n+1)!
    const double t = 2.0;
    for (double x : {1e-8, 4.9e-7, 5.1e-7, 1e-5}) {
        Complex term = t, sum = 0.0;
        for (int n = 0; n < 12; ++n) {
            sum += term;
            term *= Complex(0.0, -x) * t / double(n + 2);
        }
        CHECK(std::abs(window(x, t) - sum) < 1e-15);
    }
}

TEST_CASE("classical probability") {
    MixingParams p = MixingParams::from_natural(1e-6, 1e-3, 1e-19, 1953.5, 0.0);
    CHECK(classical_probability(p) == 0.0);
    p = MixingParams::from_natural(0.0, 1e-3, 1e-19, 1953.5, 5e9);
    CHECK(classical_probability(p) == doctest::Approx(std::pow(p.delta_M * p.t, 2)).epsilon(1e-9));

    const MixingParams q = MixingParams::from_natural(2e-5, 1e-3, 1e-19, 1953.5, 1.0);
    const MixingParams node = MixingParams::from_natural(2e-5, 1e-3, 1e-19, 1953.5, 2.0 * std::numbers::pi / q.delta_osc);
    CHECK(classical_probability(node) < 1e-25);
    CHECK(std::isfinite(classical_probability(MixingParams::from_natural(0.0, 1.0, 0.0, 0.0, 1.0))));

    // small-mixing form agrees when Delta_M is negligible next to m^2/2k
    const MixingParams s = to_natural_units(LabInputs{});
    CHECK(classical_probability(s) == doctest::Approx(classical_small_mixing_probability(s)).epsilon(1e-9));
}

TEST_CASE("generator structure") {
    const ModeLayout l = ModeLayout::four_mode(3);
    const MixingParams p = MixingParams::from_natural(0.8, 1.0, 1.0, 0.2, 2.0);
    const LinearOperator q = build_Q(l, p);
    CHECK(q.is_hermitian());
    CHECK(q.hermiticity_residual() <= 1e-14);
    CHECK(q.nonzeros() > 0);

    MixingParams zero = p;
    zero.lambda = 0.0;
    CHECK(build_Q(l, zero).nonzeros() == 0);

    // same operator through the factorised entry point
    const auto fac = FactorizedCoupling::from_params(p);
    CHECK((build_Q_factorized(l, fac, false).dense() - q.dense()).norm() == 0.0);

    // explicit matrix elements
    const auto w = window_functions(p.omega_phi, p.omega_psi, p.t);
    const Complex i(0.0, 1.0);
    const Complex conv = inner_product(four(l, 1, 0, 0, 0), apply(q, four(l, 0, 0, 1, 0)));
    CHECK(std::abs(conv - i * p.lambda * p.U * std::conj(w.f)) < 1e-15);
    const Complex back = inner_product(four(l, 0, 0, 1, 0), apply(q, four(l, 1, 0, 0, 0)));
    CHECK(std::abs(back - (-i * p.lambda * p.U * w.f)) < 1e-15);
    // a_+^dagger b_-^dagger creates a pair from vacuum
    const Complex pair = inner_product(four(l, 1, 0, 0, 1), apply(q, StateVector::vacuum(l)));
    CHECK(std::abs(pair - i * p.lambda * p.V * std::conj(w.g)) < 1e-15);

    // random couplings stay Hermitian, including unphysical ones
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int k = 0; k < 20; ++k) {
        const FactorizedCoupling r{u(rng), u(rng), {u(rng), u(rng)}, {u(rng), u(rng)}, u(rng)};
        const LinearOperator qr = build_Q_factorized(l, r, false);
        CHECK((qr.dense() - qr.dense().adjoint()).cwiseAbs().maxCoeff() <= 1e-14);
    }
}

TEST_CASE("reduced layout") {
    const ModeLayout r = ModeLayout::reduced(2, 4);
    const MixingParams massive = MixingParams::from_natural(0.8, 1.0, 1.0, 0.2, 2.0);
    CHECK_THROWS(build_Q(r, massive));
    const LinearOperator q = build_Q(r, massive, true);
    CHECK(q.is_hermitian());

    // V = 0 with the pair terms dropped: only the (a+, b+) block carries entries
    const ModeLayout l = ModeLayout::four_mode(2);
    const MixingParams m0 = MixingParams::from_natural(0.0, 1.0, 1.0, 0.2, 2.0);
    GeneratorTerms plus;
    plus.pair_terms = false;
    plus.minus_k_conversion = false;
    const CMatrix d = build_Q_factorized(l, FactorizedCoupling::from_params(m0), plus).dense();
    for (Eigen::Index row = 0; row < d.rows(); ++row) {
        for (Eigen::Index col = 0; col < d.cols(); ++col) {
            if (d(row, col) == Complex(0.0)) continue;
            const auto a = l.occupations(std::size_t(row));
            const auto b = l.occupations(std::size_t(col));
            CHECK(a[1] == b[1]);
            CHECK(a[3] == b[3]);
        }
    }
    CHECK_THROWS(build_Q(ModeLayout({Mode::axion_plus, Mode::photon_minus}, {2, 2}), m0));
}

TEST_CASE("degenerate beam splitter") {
    const ModeLayout l = ModeLayout::four_mode(3);
    for (double lt : {0.05, 0.3, 1.0, 1.4}) {
        const MixingParams p = MixingParams::from_natural(0.0, 1.0, 1.0, 2.0 * lt / 2.0, 2.0);
        const double amp = p.lambda * p.U * std::abs(window_functions(p.omega_phi, p.omega_psi, p.t).f);
        const double P = conversion(l, windowed_unitary(build_Q(l, p)));
        CHECK(std::abs(P - std::pow(std::sin(amp), 2)) <= 1e-10);
        // V = 0 generators at different times commute, so ordering is irrelevant
        const double Pt = conversion(l, time_ordered_unitary(p, l, 16));
        CHECK(std::abs(P - Pt) <= 1e-8);
    }
}

TEST_CASE("time ordering") {
    const ModeLayout l = ModeLayout::four_mode(2);
    const MixingParams p = MixingParams::from_natural(0.8, 1.0, 1.0, 0.04, 3.0);
    const StateVector in = four(l, 0, 0, 1, 0);
    const StateVector a = windowed_unitary(build_Q(l, p)).apply(in);
    const StateVector b = time_ordered_unitary(p, l, 1).apply(in);
    CHECK((a.amplitudes() - b.amplitudes()).norm() <= 1e-14);
    CHECK_THROWS(time_ordered_unitary(p, l, 0));

    const Evolution e = time_ordered_unitary(p, l, 50);
    CHECK(e.steps() == 50);
    CHECK(std::abs(e.apply(in).norm() - 1.0) <= 1e-10);

    // the ordering correction is second order in lambda t
    std::vector<double> rel;
    const std::vector<double> lambdas = {0.005, 0.01, 0.02};
    for (double lam : lambdas) {
        const MixingParams q = MixingParams::from_natural(0.8, 1.0, 1.0, 2.0 * lam, 3.0);
        const double P1 = conversion(l, windowed_unitary(build_Q(l, q)));
        const double P2 = conversion(l, time_ordered_unitary(q, l, 100));
        rel.push_back(std::abs(P1 - P2) / P1);
    }
    for (std::size_t k = 1; k < rel.size(); ++k) {
        const double slope = std::log(rel[k] / rel[k - 1]) / std::log(lambdas[k] / lambdas[k - 1]);
        CHECK(slope == doctest::Approx(2.0).epsilon(0.1));
    }
    CHECK(rel.back() < 1e-4);
}

TEST_CASE("leading amplitude matches the classical small-mixing form") {
    // g B L << m^2 L / 2E, lambda t << 0.1 and m << E
    const MixingParams p = to_natural_units(LabInputs{1e-6, 1e-3, 1e-10, 10.0, 1000.0});
    const auto w = window_functions(p.omega_phi, p.omega_psi, p.t);
    const double leading = std::norm(p.lambda * p.U * w.f);
    CHECK(leading == doctest::Approx(classical_small_mixing_probability(p)).epsilon(1e-6));
}
