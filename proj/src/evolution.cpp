#include <algorithm>
#include <cmath>
#include <string>

#include "axionsim/state_space.hpp"

namespace axionsim {

namespace {

using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

double gershgorin_bound(const SparseMatrix& h) {
    double bound = 0.0;
    for (Eigen::Index r = 0; r < h.outerSize(); ++r) {
        double row = 0.0;
        for (SparseMatrix::InnerIterator it(h, r); it; ++it) row += std::abs(it.value());
        bound = std::max(bound, row);
    }
    return bound;
}

CVector dense_evolve(const SparseMatrix& h, const CVector& v) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(CMatrix(h), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw std::runtime_error("evolve_exact: eigensolver failed");
    const CMatrix& w = solver.eigenvectors();
    CVector coeff = w.adjoint() * v;
    for (Eigen::Index k = 0; k < coeff.size(); ++k) {
        coeff[k] *= std::polar(1.0, -solver.eigenvalues()[k]);
    }
    return w * coeff;
}

// exp(-i H) v by Lanczos with full reorthogonalisation. Time is split into
// substeps whose length is chosen from the a-posteriori estimate
// beta * h_{m+1,m} * |e_m^T exp(-i tau T) e_1|.
CVector krylov_evolve(const SparseMatrix& h, const CVector& v, const EvolutionOptions& opt) {
    const Eigen::Index dim = v.size();
    const int m_max = static_cast<int>(std::min<Eigen::Index>(opt.krylov_subspace, dim));
    const double hnorm = gershgorin_bound(h);

    CVector w = v;
    double t_done = 0.0;
    double tau = hnorm > 0.0 ? std::min(1.0, 0.5 * m_max / hnorm) : 1.0;
    CMatrix basis(dim, m_max + 1);

    int guard = 0;
    while (t_done < 1.0) {
        if (++guard > 1000000) throw std::runtime_error("evolve_exact: Krylov stepping did not converge");
        const double beta = w.norm();
        if (beta == 0.0) break;

        basis.col(0) = w / beta;
        RVector alpha(m_max), offdiag(m_max);
        int k = 0;
        bool breakdown = false;
        for (int j = 0; j < m_max; ++j) {
            CVector u = h * basis.col(j);
            alpha[j] = basis.col(j).dot(u).real();
            // two passes of classical Gram-Schmidt against the whole basis
            for (int pass = 0; pass < 2; ++pass) {
                CVector proj = basis.leftCols(j + 1).adjoint() * u;
                u.noalias() -= basis.leftCols(j + 1) * proj;
            }
            offdiag[j] = u.norm();
            k = j + 1;
            if (offdiag[j] <= 1e-14 * std::max(1.0, hnorm)) {
                breakdown = true;
                break;
            }
            basis.col(j + 1) = u / offdiag[j];
        }

        RMatrix tri = RMatrix::Zero(k, k);
        for (int j = 0; j < k; ++j) {
            tri(j, j) = alpha[j];
            if (j + 1 < k) tri(j, j + 1) = tri(j + 1, j) = offdiag[j];
        }
        Eigen::SelfAdjointEigenSolver<RMatrix> tri_solver(tri);
        const RMatrix& s = tri_solver.eigenvectors();
        const RVector& theta = tri_solver.eigenvalues();
        const RVector first_row = s.row(0).transpose();

        CVector y(k);
        // an invariant subspace was found: the remaining time is exact in one step
        double step = breakdown ? 1.0 - t_done : std::min(tau, 1.0 - t_done);
        for (;;) {
            CVector phase(k);
            for (int q = 0; q < k; ++q) phase[q] = std::polar(first_row[q], -step * theta[q]);
            y = s.cast<Complex>() * phase;
            const double err = breakdown ? 0.0 : beta * offdiag[k - 1] * std::abs(y[k - 1]);
            if (err <= opt.krylov_tolerance * step * beta || step < 1e-300) {
                if (err < 0.01 * opt.krylov_tolerance * step * beta) tau = std::min(1.0, 2.0 * step);
                else tau = step;
                break;
            }
            step *= 0.5;
        }
        w = beta * (basis.leftCols(k) * y);
        t_done += step;
    }
    return w;
}

}  // namespace

CMatrix dense_unitary(const CMatrix& hermitian) {
    Eigen::SelfAdjointEigenSolver<CMatrix> solver(hermitian, Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) throw std::runtime_error("dense_unitary: eigensolver failed");
    const CMatrix& w = solver.eigenvectors();
    CVector phases(w.cols());
    for (Eigen::Index k = 0; k < phases.size(); ++k) phases[k] = std::polar(1.0, -solver.eigenvalues()[k]);
    return w * phases.asDiagonal() * w.adjoint();
}

StateVector evolve_exact(const LinearOperator& generator, const StateVector& state,
                         const EvolutionOptions& options) {
    if (!generator.is_hermitian()) {
        throw std::invalid_argument("evolve_exact: generator must carry the hermitian flag");
    }
    if (!(generator.layout() == state.layout())) {
        throw std::invalid_argument("evolve_exact: layout mismatch");
    }
    const std::size_t dim = state.layout().dimension();
    using Method = EvolutionOptions::Method;
    Method method = options.method;
    if (method == Method::automatic) {
        method = dim <= options.krylov_switch_dimension ? Method::dense : Method::krylov;
    }
    const std::size_t bytes_per = sizeof(Complex);
    const std::size_t needed =
        method == Method::dense
            ? 3 * dim * dim * bytes_per
            : (static_cast<std::size_t>(options.krylov_subspace) + 4) * dim * bytes_per +
                  generator.nonzeros() * (bytes_per + sizeof(int));
    if (needed > options.memory_budget_bytes) {
        throw BudgetError("evolve_exact: dimension " + std::to_string(dim) + " needs ~" +
                          std::to_string(needed >> 20) + " MiB, budget is " +
                          std::to_string(options.memory_budget_bytes >> 20) + " MiB");
    }
    if (generator.nonzeros() == 0) return state;
    CVector out = method == Method::dense
                      ? dense_evolve(generator.matrix(), state.amplitudes())
                      : krylov_evolve(generator.matrix(), state.amplitudes(), options);
    return StateVector(state.layout(), std::move(out));
}

}  // namespace axionsim
