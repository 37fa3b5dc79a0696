#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "axionsim/mixing_model.hpp"
#include "axionsim/photon_states.hpp"
#include "axionsim/state_space.hpp"

using namespace axionsim;

namespace {

std::vector<int> occ(std::initializer_list<int> v) { return std::vector<int>(v); }

// exp(-i H) v by a plain Taylor series; only valid for small ||H||
CVector taylor_step(const SparseMatrix& h, const CVector& v, int terms = 30) {
    CVector out = v;
    CVector term = v;
    for (int k = 1; k < terms; ++k) {
        term = (Complex(0.0, -1.0) / double(k)) * (h * term);
        out += term;
        if (term.norm() < 1e-30) break;
    }
    return out;
}

LinearOperator random_hermitian(const ModeLayout& layout, std::mt19937_64& rng, int entries, double scale) {
    std::uniform_int_distribution<long> pick(0, static_cast<long>(layout.dimension()) - 1);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Eigen::Triplet<Complex>> t;
    for (int k = 0; k < entries; ++k) {
        const long i = pick(rng), j = pick(rng);
        const Complex z(scale * g(rng), scale * g(rng));
        if (i == j) {
            t.emplace_back(i, i, Complex(z.real(), 0.0));
        } else {
            t.emplace_back(i, j, z);
            t.emplace_back(j, i, std::conj(z));
        }
    }
    SparseMatrix m(static_cast<long>(layout.dimension()), static_cast<long>(layout.dimension()));
    m.setFromTriplets(t.begin(), t.end());
    return LinearOperator(layout, m, true);
}

}  // namespace

TEST_CASE("basis index is a mixed-radix map with the last mode fastest") {
    const ModeLayout two({Mode::axion_plus, Mode::photon_plus}, {1, 1});
    CHECK(basis_index(two, occ({0, 0})) == 0);
    CHECK(basis_index(two, occ({0, 1})) == 1);
    CHECK(basis_index(two, occ({1, 0})) == 2);

    const ModeLayout four = ModeLayout::four_mode(7);
    CHECK(four.dimension() == 4096);
    CHECK(basis_index(four, occ({7, 7, 7, 7})) == 4095);
    for (std::size_t i = 0; i < four.dimension(); i += 37) CHECK(four.basis_index(four.occupations(i)) == i);

    CHECK_THROWS_AS(basis_index(two, occ({2, 0})), std::out_of_range);
    CHECK_THROWS_AS(basis_index(two, occ({-1, 0})), std::out_of_range);
}

TEST_CASE("layout invariants") {
    CHECK_THROWS(ModeLayout({Mode::axion_plus, Mode::axion_plus}, {2, 2}));
    CHECK_THROWS(ModeLayout({Mode::axion_plus}, {0}));
    CHECK_THROWS(ModeLayout({Mode::axion_plus, Mode::photon_plus}, {2}));
    CHECK(ModeLayout::reduced(3, 5).is_reduced());
    CHECK_FALSE(ModeLayout::four_mode(3).is_reduced());
    CHECK(ModeLayout::four_mode(3).is_four_mode());
    CHECK(mode_from_string("photon-") == Mode::photon_minus);
    CHECK(std::string(to_string(Mode::axion_plus)) == "axion+");
    CHECK_THROWS(mode_from_string("gluon"));
    CHECK_THROWS(annihilation_op(ModeLayout::reduced(2, 2), Mode::photon_minus));
}

TEST_CASE("ladder operators") {
    const ModeLayout l({Mode::photon_plus}, {6});
    const LinearOperator b = annihilation_op(l, Mode::photon_plus);
    const LinearOperator bd = creation_op(l, Mode::photon_plus);
    const StateVector vac = StateVector::vacuum(l);

    CHECK(apply(b, vac).norm() == 0.0);
    const StateVector one = StateVector::basis(l, occ({1}));
    CHECK(std::abs(apply(b, one)[0] - 1.0) < 1e-15);
    CHECK(std::abs(inner_product(StateVector::basis(l, occ({4})), apply(b, StateVector::basis(l, occ({5})))) -
                   std::sqrt(5.0)) < 1e-14);
    // top level maps down with sqrt(n_max) and is annihilated by b^dagger
    const StateVector top = StateVector::basis(l, occ({6}));
    CHECK(std::abs(apply(b, top)[5] - std::sqrt(6.0)) < 1e-14);
    CHECK(apply(bd, top).norm() == 0.0);

    CHECK(std::abs(apply(bd, vac)[1] - 1.0) < 1e-15);
    const CMatrix n = number_op(l, Mode::photon_plus).dense();
    for (int k = 0; k <= 6; ++k) CHECK(std::abs(n(k, k) - double(k)) < 1e-14);
    CHECK((n - CMatrix(n.diagonal().asDiagonal())).norm() == 0.0);

    // dense commutator on the interior
    const CMatrix comm = b.dense() * bd.dense() - bd.dense() * b.dense();
    for (int k = 0; k < 6; ++k) CHECK(std::abs(comm(k, k) - 1.0) < 1e-14);
    CHECK(std::abs(comm(6, 6) + 6.0) < 1e-14);
}

TEST_CASE("ladder operators act on the chosen mode only") {
    const ModeLayout l = ModeLayout::four_mode(2, 3, 2);
    const StateVector s = StateVector::basis(l, occ({1, 2, 3, 1}));
    const StateVector t = apply(annihilation_op(l, Mode::photon_plus), s);
    CHECK(std::abs(t[l.basis_index(occ({1, 2, 2, 1}))] - std::sqrt(3.0)) < 1e-14);
    CHECK(std::abs(t.norm() - std::sqrt(3.0)) < 1e-14);
    const StateVector u = apply(creation_op(l, Mode::axion_plus), s);
    CHECK(std::abs(u[l.basis_index(occ({2, 2, 3, 1}))] - std::sqrt(2.0)) < 1e-14);
}

TEST_CASE("operator algebra") {
    const ModeLayout l({Mode::axion_plus, Mode::photon_plus}, {3, 4});
    const LinearOperator b = annihilation_op(l, Mode::photon_plus);
    const LinearOperator bd = creation_op(l, Mode::photon_plus);
    const CMatrix c = (compose(b, bd) - compose(bd, b)).dense();
    for (std::size_t i = 0; i < l.dimension(); ++i) {
        const bool interior = l.occupation(i, Mode::photon_plus) < 4;
        if (interior) CHECK(std::abs(c(long(i), long(i)) - 1.0) < 1e-14);
    }
    const LinearOperator n = number_op(l, Mode::photon_plus);
    CHECK(n.is_hermitian());
    CHECK((adjoint(n).dense() - n.dense()).norm() == 0.0);
    CHECK((adjoint(adjoint(b)).dense() - b.dense()).norm() == 0.0);
    CHECK((scale(2.0, b).dense() - 2.0 * b.dense()).norm() == 0.0);
    CHECK_FALSE(compose(b, bd).is_hermitian());
    CHECK(add(n, n).is_hermitian());

    const ModeLayout other({Mode::axion_plus, Mode::photon_plus}, {3, 5});
    CHECK_THROWS_AS(add(b, annihilation_op(other, Mode::photon_plus)), std::invalid_argument);
    CHECK_THROWS_AS(apply(b, StateVector::vacuum(other)), std::invalid_argument);
    CHECK_THROWS_AS(inner_product(StateVector::vacuum(l), StateVector::vacuum(other)), std::invalid_argument);
    CHECK_THROWS(LinearOperator(l, b.matrix(), true));
}

TEST_CASE("apply and inner product") {
    const ModeLayout l({Mode::photon_plus}, {5});
    const StateVector three = StateVector::basis(l, occ({3}));
    CHECK((apply(LinearOperator::identity(l), three).amplitudes() - three.amplitudes()).norm() == 0.0);
    CHECK(apply(LinearOperator::zero(l), three).norm() == 0.0);
    const StateVector n3 = apply(number_op(l, Mode::photon_plus), three);
    CHECK(std::abs(n3[3] - 3.0) < 1e-15);
    CHECK(std::abs(inner_product(StateVector::vacuum(l), StateVector::vacuum(l)) - 1.0) == 0.0);
    CHECK(std::abs(inner_product(StateVector::vacuum(l), StateVector::basis(l, occ({1})))) == 0.0);

    CVector a(6), b(6);
    a << 1.0, Complex(0, 1), 0.5, 0, 0, 0;
    b << Complex(0, 2), 1.0, 0, 0, 0, 1.0;
    const StateVector sa(l, a), sb(l, b);
    const Complex ip = inner_product(sa, sb);
    CHECK(std::abs(ip - (std::conj(a[0]) * b[0] + std::conj(a[1]) * b[1])) < 1e-15);
    const Complex scaled = inner_product(StateVector(l, Complex(0, 3) * a), sb);
    CHECK(std::abs(scaled - Complex(0, -3) * ip) < 1e-14);
    CHECK(inner_product(sa, sa).imag() == 0.0);
    CHECK(inner_product(sa, sa).real() > 0.0);
}

TEST_CASE("normalisation flag tolerance") {
    const ModeLayout l({Mode::photon_plus}, {2});
    CVector v(3);
    v << 1.0 + 1e-13, 0.0, 0.0;
    CHECK(StateVector(l, v).is_normalized());
    v[0] = 1.0 + 1e-11;
    CHECK_FALSE(StateVector(l, v).is_normalized());
    CHECK(StateVector(l, v).normalized().is_normalized());
    CHECK_THROWS(StateVector(l, CVector::Zero(4)));
}

TEST_CASE("evolve_exact: trivial generators") {
    const ModeLayout l({Mode::photon_plus}, {4});
    const StateVector one = StateVector::basis(l, occ({1}));
    const StateVector same = evolve_exact(LinearOperator::zero(l).as_hermitian(), one);
    CHECK((same.amplitudes() - one.amplitudes()).norm() == 0.0);

    const LinearOperator q = scale(std::numbers::pi, number_op(l, Mode::photon_plus));
    const StateVector out = evolve_exact(q, one);
    CHECK(std::abs(out[1] + 1.0) < 1e-12);
    CHECK_THROWS_AS(evolve_exact(annihilation_op(l, Mode::photon_plus), one), std::invalid_argument);
}

TEST_CASE("evolve_exact agrees with a 200-step product of Taylor steps") {
    const ModeLayout l = ModeLayout::four_mode(3);
    FactorizedCoupling fac{1.3, 0.8, Complex(0.7, -0.4), Complex(-0.2, 0.9), 0.6};
    const LinearOperator q = build_Q_factorized(l, fac, false);
    const StateVector in = StateVector::basis(l, occ({0, 0, 1, 0}));
    const StateVector exact = evolve_exact(q, in);

    const SparseMatrix step = q.matrix() / 200.0;
    CVector v = in.amplitudes();
    for (int k = 0; k < 200; ++k) v = taylor_step(step, v);
    CHECK((exact.amplitudes() - v).norm() <= 1e-8);
    CHECK(std::abs(exact.norm() - 1.0) <= 1e-10);
}

TEST_CASE("krylov and dense evolution agree") {
    std::mt19937_64 rng(11);
    const ModeLayout l({Mode::axion_plus, Mode::photon_plus}, {9, 59});
    const LinearOperator h = random_hermitian(l, rng, 3000, 0.3);
    CVector v = CVector::Zero(long(l.dimension()));
    std::normal_distribution<double> g;
    for (long i = 0; i < v.size(); ++i) v[i] = Complex(g(rng), g(rng));
    const StateVector s(l, v.normalized());
    EvolutionOptions dense, krylov;
    dense.method = EvolutionOptions::Method::dense;
    krylov.method = EvolutionOptions::Method::krylov;
    const StateVector a = evolve_exact(h, s, dense);
    const StateVector b = evolve_exact(h, s, krylov);
    CHECK((a.amplitudes() - b.amplitudes()).norm() <= 1e-10);
    CHECK(std::abs(b.norm() - 1.0) <= 1e-10);
}

TEST_CASE("memory budget is enforced") {
    const ModeLayout l = ModeLayout::four_mode(5);
    EvolutionOptions tight;
    tight.method = EvolutionOptions::Method::dense;
    tight.memory_budget_bytes = 1 << 20;
    const LinearOperator q = build_Q_factorized(l, FactorizedCoupling{1.0, 0.0, 1.0, 0.0, 0.1}, false);
    CHECK_THROWS_AS(evolve_exact(q, StateVector::vacuum(l), tight), BudgetError);
}

TEST_CASE("matrix_power_apply") {
    const ModeLayout l = ModeLayout::four_mode(6);
    const LinearOperator q = build_Q_factorized(l, FactorizedCoupling{1.2, 0.7, 0.9, Complex(0.3, 0.5), 1.0}, false);
    const StateVector in = StateVector::basis(l, occ({0, 0, 1, 0}));
    CHECK((matrix_power_apply(q, 0, in).amplitudes() - in.amplitudes()).norm() == 0.0);
    CHECK((matrix_power_apply(q, 1, in).amplitudes() - apply(q, in).amplitudes()).norm() == 0.0);
    // at most one quantum per mode per application: support <= 1 + 3 = n_max - 2
    const StateVector q3 = matrix_power_apply(q, 3, in);
    CHECK(q3.norm() > 0.0);
    CHECK(truncation_leakage(q3, 2) == 0.0);
    CHECK_THROWS(matrix_power_apply(q, -1, in));
}

TEST_CASE("truncation leakage") {
    const ModeLayout l({Mode::axion_plus, Mode::photon_plus}, {3, 30});
    CHECK(truncation_leakage(StateVector::vacuum(l), 1) == 0.0);
    CHECK(truncation_leakage(StateVector::vacuum(l), 3) == 0.0);
    CHECK(truncation_leakage(StateVector::basis(l, occ({0, 30})), 1) == doctest::Approx(1.0));
    CHECK(truncation_leakage(StateVector::basis(l, occ({3, 0})), 1) == doctest::Approx(1.0));
    CHECK_THROWS(truncation_leakage(StateVector::vacuum(l), 0));
    CHECK_THROWS(truncation_leakage(StateVector::vacuum(l), 4));

    const StateVector coh = coherent_state(l, Mode::photon_plus, CoherentAmplitude{1.0});
    const double leak = truncation_leakage(coh, 2);
    CHECK(leak < 1e-20);
    CHECK(poisson_tail(1.0, 28) < 1e-20);
}
