// Truncated multi-mode bosonic Fock space: basis indexing, ladder operators,
// sparse operator algebra and unitary evolution.
//
// Basis ordering is mixed-radix with the last listed mode varying fastest.
// Creation operators annihilate the top level of each mode (hard truncation);
// adequacy of a truncation is measured with truncation_leakage().

#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace axionsim {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

// Thrown when a truncated Fock space is too small for the requested state or
// evolution. The message carries a sizing suggestion where one is known.
class TruncationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Thrown when an evolution would exceed the configured memory budget.
class BudgetError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Mode { axion_plus, axion_minus, photon_plus, photon_minus };

std::string_view to_string(Mode mode);
Mode mode_from_string(std::string_view label);

class ModeLayout {
public:
    ModeLayout(std::vector<Mode> modes, std::vector<int> truncations);

    // (axion+, axion-, photon+, photon-)
    static ModeLayout four_mode(int n_max);
    static ModeLayout four_mode(int axion_n_max, int photon_plus_n_max, int photon_minus_n_max);
    // (axion+, photon+)
    static ModeLayout reduced(int axion_n_max, int photon_n_max);

    std::size_t dimension() const { return dimension_; }
    std::size_t mode_count() const { return modes_.size(); }
    const std::vector<Mode>& modes() const { return modes_; }
    const std::vector<int>& truncations() const { return truncations_; }

    bool contains(Mode mode) const;
    std::size_t position(Mode mode) const;
    int n_max(Mode mode) const { return truncations_[position(mode)]; }
    std::size_t stride(Mode mode) const { return strides_[position(mode)]; }
    int min_n_max() const;

    bool is_four_mode() const;
    bool is_reduced() const;

    std::size_t basis_index(std::span<const int> occupations) const;
    std::vector<int> occupations(std::size_t index) const;
    int occupation(std::size_t index, Mode mode) const;

    std::string describe() const;

    friend bool operator==(const ModeLayout& a, const ModeLayout& b) {
        return a.modes_ == b.modes_ && a.truncations_ == b.truncations_;
    }

private:
    std::vector<Mode> modes_;
    std::vector<int> truncations_;
    std::vector<std::size_t> strides_;
    std::size_t dimension_ = 0;
};

std::size_t basis_index(const ModeLayout& layout, std::span<const int> occupations);

class StateVector {
public:
    StateVector(ModeLayout layout, CVector amplitudes);

    static StateVector vacuum(const ModeLayout& layout);
    static StateVector basis(const ModeLayout& layout, std::span<const int> occupations);

    const ModeLayout& layout() const { return layout_; }
    const CVector& amplitudes() const { return amplitudes_; }
    Complex operator[](std::size_t i) const { return amplitudes_[static_cast<Eigen::Index>(i)]; }

    double norm() const { return amplitudes_.norm(); }
    double norm_squared() const { return amplitudes_.squaredNorm(); }
    bool is_normalized(double tol = 1e-12) const;
    StateVector normalized() const;

private:
    ModeLayout layout_;
    CVector amplitudes_;
};

class LinearOperator {
public:
    // A hermitian flag is verified: the largest entry of |M - M^dagger| must
    // not exceed 1e-12 times max(1, largest |entry|).
    LinearOperator(ModeLayout layout, SparseMatrix matrix, bool hermitian = false);

    static LinearOperator identity(const ModeLayout& layout);
    static LinearOperator zero(const ModeLayout& layout);

    const ModeLayout& layout() const { return layout_; }
    const SparseMatrix& matrix() const { return matrix_; }
    bool is_hermitian() const { return hermitian_; }
    std::size_t nonzeros() const { return static_cast<std::size_t>(matrix_.nonZeros()); }

    double hermiticity_residual() const;
    // Returns a copy with the hermitian flag set after numeric verification.
    LinearOperator as_hermitian() const;
    CMatrix dense() const;

private:
    ModeLayout layout_;
    SparseMatrix matrix_;
    bool hermitian_ = false;
};

LinearOperator annihilation_op(const ModeLayout& layout, Mode mode);
LinearOperator creation_op(const ModeLayout& layout, Mode mode);
LinearOperator number_op(const ModeLayout& layout, Mode mode);

// Lifts a (n_max+1)x(n_max+1) matrix acting on one mode to the full layout.
LinearOperator single_mode_operator(const ModeLayout& layout, Mode mode, const CMatrix& local,
                                    bool hermitian = false);

LinearOperator add(const LinearOperator& a, const LinearOperator& b);
LinearOperator scale(Complex c, const LinearOperator& a);
LinearOperator compose(const LinearOperator& a, const LinearOperator& b);
LinearOperator adjoint(const LinearOperator& a);

inline LinearOperator operator+(const LinearOperator& a, const LinearOperator& b) { return add(a, b); }
inline LinearOperator operator-(const LinearOperator& a, const LinearOperator& b) {
    return add(a, scale(-1.0, b));
}
inline LinearOperator operator*(Complex c, const LinearOperator& a) { return scale(c, a); }
inline LinearOperator operator*(const LinearOperator& a, const LinearOperator& b) { return compose(a, b); }

StateVector apply(const LinearOperator& op, const StateVector& state);
Complex inner_product(const StateVector& bra, const StateVector& ket);

StateVector matrix_power_apply(const LinearOperator& op, int power, const StateVector& state);

// Probability weight (relative to the state's own norm) in basis states where
// any mode's occupation exceeds n_max - margin.
double truncation_leakage(const StateVector& state, int margin);

// Smallest level L on `mode` such that the weight above L is <= eps (relative).
int support_level(const StateVector& state, Mode mode, double eps = 0.0);

struct EvolutionOptions {
    enum class Method { automatic, dense, krylov };
    Method method = Method::automatic;
    std::size_t krylov_switch_dimension = 1000;
    std::size_t memory_budget_bytes = std::size_t{4} << 30;
    int krylov_subspace = 40;
    double krylov_tolerance = 1e-13;
};

// exp(-i Q) s for Hermitian Q.
StateVector evolve_exact(const LinearOperator& generator, const StateVector& state,
                         const EvolutionOptions& options = {});

// Dense exp(-i H) for a small Hermitian matrix.
CMatrix dense_unitary(const CMatrix& hermitian);

}  // namespace axionsim
