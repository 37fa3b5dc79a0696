#include "axionsim/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace axionsim {

namespace {

constexpr std::size_t kMaxDimension = std::size_t{1} << 31;

void require_same_layout(const ModeLayout& a, const ModeLayout& b, const char* what) {
    if (!(a == b)) {
        throw std::invalid_argument(std::string(what) + ": layout mismatch (" + a.describe() +
                                    " vs " + b.describe() + ")");
    }
}

using Triplet = Eigen::Triplet<Complex>;

SparseMatrix from_triplets(std::size_t dim, const std::vector<Triplet>& triplets) {
    const auto n = static_cast<Eigen::Index>(dim);
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

}  // namespace

std::string_view to_string(Mode mode) {
    switch (mode) {
        case Mode::axion_plus: return "axion+";
        case Mode::axion_minus: return "axion-";
        case Mode::photon_plus: return "photon+";
        case Mode::photon_minus: return "photon-";
    }
    return "?";
}

Mode mode_from_string(std::string_view label) {
    if (label == "axion+") return Mode::axion_plus;
    if (label == "axion-") return Mode::axion_minus;
    if (label == "photon+") return Mode::photon_plus;
    if (label == "photon-") return Mode::photon_minus;
    throw std::invalid_argument("unknown mode label '" + std::string(label) + "'");
}

ModeLayout::ModeLayout(std::vector<Mode> modes, std::vector<int> truncations)
    : modes_(std::move(modes)), truncations_(std::move(truncations)) {
    if (modes_.empty()) throw std::invalid_argument("ModeLayout: at least one mode required");
    if (modes_.size() != truncations_.size()) {
        throw std::invalid_argument("ModeLayout: one truncation per mode required");
    }
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        for (std::size_t j = i + 1; j < modes_.size(); ++j) {
            if (modes_[i] == modes_[j]) {
                throw std::invalid_argument("ModeLayout: duplicate mode " +
                                            std::string(to_string(modes_[i])));
            }
        }
        if (truncations_[i] < 1) {
            throw std::invalid_argument("ModeLayout: n_max must be >= 1 for " +
                                        std::string(to_string(modes_[i])));
        }
    }
    strides_.assign(modes_.size(), 1);
    dimension_ = 1;
    for (std::size_t i = modes_.size(); i-- > 0;) {
        strides_[i] = dimension_;
        const auto levels = static_cast<std::size_t>(truncations_[i]) + 1;
        if (dimension_ > kMaxDimension / levels) {
            throw std::invalid_argument("ModeLayout: dimension overflow for " + describe());
        }
        dimension_ *= levels;
    }
}

ModeLayout ModeLayout::four_mode(int n_max) { return four_mode(n_max, n_max, n_max); }

ModeLayout ModeLayout::four_mode(int axion_n_max, int photon_plus_n_max, int photon_minus_n_max) {
    return ModeLayout({Mode::axion_plus, Mode::axion_minus, Mode::photon_plus, Mode::photon_minus},
                      {axion_n_max, axion_n_max, photon_plus_n_max, photon_minus_n_max});
}

ModeLayout ModeLayout::reduced(int axion_n_max, int photon_n_max) {
    return ModeLayout({Mode::axion_plus, Mode::photon_plus}, {axion_n_max, photon_n_max});
}

bool ModeLayout::contains(Mode mode) const {
    return std::find(modes_.begin(), modes_.end(), mode) != modes_.end();
}

std::size_t ModeLayout::position(Mode mode) const {
    const auto it = std::find(modes_.begin(), modes_.end(), mode);
    if (it == modes_.end()) {
        throw std::invalid_argument("mode " + std::string(to_string(mode)) + " not in layout " +
                                    describe());
    }
    return static_cast<std::size_t>(it - modes_.begin());
}

int ModeLayout::min_n_max() const { return *std::min_element(truncations_.begin(), truncations_.end()); }

bool ModeLayout::is_four_mode() const {
    return modes_.size() == 4 && contains(Mode::axion_plus) && contains(Mode::axion_minus) &&
           contains(Mode::photon_plus) && contains(Mode::photon_minus);
}

bool ModeLayout::is_reduced() const {
    return modes_.size() == 2 && contains(Mode::axion_plus) && contains(Mode::photon_plus);
}

std::size_t ModeLayout::basis_index(std::span<const int> occupations) const {
    if (occupations.size() != modes_.size()) {
        throw std::invalid_argument("basis_index: expected " + std::to_string(modes_.size()) +
                                    " occupations, got " + std::to_string(occupations.size()));
    }
    std::size_t index = 0;
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (occupations[i] < 0 || occupations[i] > truncations_[i]) {
            throw std::out_of_range("basis_index: occupation " + std::to_string(occupations[i]) +
                                    " of " + std::string(to_string(modes_[i])) +
                                    " outside [0, " + std::to_string(truncations_[i]) + "]");
        }
        index += static_cast<std::size_t>(occupations[i]) * strides_[i];
    }
    return index;
}

std::vector<int> ModeLayout::occupations(std::size_t index) const {
    if (index >= dimension_) throw std::out_of_range("occupations: index out of range");
    std::vector<int> occ(modes_.size());
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        occ[i] = static_cast<int>(index / strides_[i]);
        index %= strides_[i];
    }
    return occ;
}

int ModeLayout::occupation(std::size_t index, Mode mode) const {
    const auto p = position(mode);
    return static_cast<int>((index / strides_[p]) % (static_cast<std::size_t>(truncations_[p]) + 1));
}

std::string ModeLayout::describe() const {
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (i) os << ", ";
        os << to_string(modes_[i]) << ':' << truncations_[i];
    }
    os << ')';
    return os.str();
}

std::size_t basis_index(const ModeLayout& layout, std::span<const int> occupations) {
    return layout.basis_index(occupations);
}

// --- StateVector -----------------------------------------------------------

StateVector::StateVector(ModeLayout layout, CVector amplitudes)
    : layout_(std::move(layout)), amplitudes_(std::move(amplitudes)) {
    if (static_cast<std::size_t>(amplitudes_.size()) != layout_.dimension()) {
        throw std::invalid_argument("StateVector: " + std::to_string(amplitudes_.size()) +
                                    " amplitudes for dimension " +
                                    std::to_string(layout_.dimension()));
    }
}

StateVector StateVector::vacuum(const ModeLayout& layout) {
    CVector v = CVector::Zero(static_cast<Eigen::Index>(layout.dimension()));
    v[0] = 1.0;
    return StateVector(layout, std::move(v));
}

StateVector StateVector::basis(const ModeLayout& layout, std::span<const int> occupations) {
    CVector v = CVector::Zero(static_cast<Eigen::Index>(layout.dimension()));
    v[static_cast<Eigen::Index>(layout.basis_index(occupations))] = 1.0;
    return StateVector(layout, std::move(v));
}

bool StateVector::is_normalized(double tol) const { return std::abs(norm_squared() - 1.0) <= tol; }

StateVector StateVector::normalized() const {
    const double n = norm();
    if (n == 0.0) throw std::domain_error("cannot normalize the zero vector");
    return StateVector(layout_, amplitudes_ / n);
}

// --- LinearOperator --------------------------------------------------------

LinearOperator::LinearOperator(ModeLayout layout, SparseMatrix matrix, bool hermitian)
    : layout_(std::move(layout)), matrix_(std::move(matrix)), hermitian_(false) {
    const auto dim = static_cast<Eigen::Index>(layout_.dimension());
    if (matrix_.rows() != dim || matrix_.cols() != dim) {
        throw std::invalid_argument("LinearOperator: matrix shape does not match layout dimension");
    }
    matrix_.makeCompressed();
    if (hermitian) {
        const double max_entry =
            matrix_.nonZeros() ? matrix_.coeffs().cwiseAbs().maxCoeff() : 0.0;
        const double residual = hermiticity_residual();
        if (residual > 1e-12 * std::max(1.0, max_entry)) {
            throw std::invalid_argument("LinearOperator: hermitian flag set but |M - M^dagger| = " +
                                        std::to_string(residual));
        }
        hermitian_ = true;
    }
}

LinearOperator LinearOperator::identity(const ModeLayout& layout) {
    const auto n = static_cast<Eigen::Index>(layout.dimension());
    SparseMatrix m(n, n);
    m.setIdentity();
    return LinearOperator(layout, std::move(m), true);
}

LinearOperator LinearOperator::zero(const ModeLayout& layout) {
    const auto n = static_cast<Eigen::Index>(layout.dimension());
    return LinearOperator(layout, SparseMatrix(n, n), true);
}

double LinearOperator::hermiticity_residual() const {
    SparseMatrix diff = matrix_ - SparseMatrix(matrix_.adjoint());
    diff.prune(Complex(0.0));
    return diff.nonZeros() ? diff.coeffs().cwiseAbs().maxCoeff() : 0.0;
}

LinearOperator LinearOperator::as_hermitian() const { return LinearOperator(layout_, matrix_, true); }

CMatrix LinearOperator::dense() const { return CMatrix(matrix_); }

// --- ladder operators ------------------------------------------------------

LinearOperator annihilation_op(const ModeLayout& layout, Mode mode) {
    const auto stride = layout.stride(mode);
    std::vector<Triplet> t;
    t.reserve(layout.dimension());
    for (std::size_t i = 0; i < layout.dimension(); ++i) {
        const int n = layout.occupation(i, mode);
        if (n > 0) {
            t.emplace_back(static_cast<int>(i - stride), static_cast<int>(i), std::sqrt(double(n)));
        }
    }
    return LinearOperator(layout, from_triplets(layout.dimension(), t));
}

LinearOperator creation_op(const ModeLayout& layout, Mode mode) {
    const auto stride = layout.stride(mode);
    const int top = layout.n_max(mode);
    std::vector<Triplet> t;
    t.reserve(layout.dimension());
    for (std::size_t i = 0; i < layout.dimension(); ++i) {
        const int n = layout.occupation(i, mode);
        if (n < top) {
            t.emplace_back(static_cast<int>(i + stride), static_cast<int>(i), std::sqrt(double(n + 1)));
        }
    }
    return LinearOperator(layout, from_triplets(layout.dimension(), t));
}

LinearOperator number_op(const ModeLayout& layout, Mode mode) {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < layout.dimension(); ++i) {
        const int n = layout.occupation(i, mode);
        if (n > 0) t.emplace_back(static_cast<int>(i), static_cast<int>(i), double(n));
    }
    return LinearOperator(layout, from_triplets(layout.dimension(), t), true);
}

LinearOperator single_mode_operator(const ModeLayout& layout, Mode mode, const CMatrix& local,
                                    bool hermitian) {
    const int levels = layout.n_max(mode) + 1;
    if (local.rows() != levels || local.cols() != levels) {
        throw std::invalid_argument("single_mode_operator: local matrix must be " +
                                    std::to_string(levels) + "x" + std::to_string(levels));
    }
    const auto stride = static_cast<long long>(layout.stride(mode));
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < layout.dimension(); ++i) {
        const int n = layout.occupation(i, mode);
        for (int m = 0; m < levels; ++m) {
            const Complex v = local(m, n);
            if (v == Complex(0.0)) continue;
            const long long row = static_cast<long long>(i) + (m - n) * stride;
            t.emplace_back(static_cast<int>(row), static_cast<int>(i), v);
        }
    }
    return LinearOperator(layout, from_triplets(layout.dimension(), t), hermitian);
}

// --- algebra ---------------------------------------------------------------

LinearOperator add(const LinearOperator& a, const LinearOperator& b) {
    require_same_layout(a.layout(), b.layout(), "add");
    SparseMatrix m = a.matrix() + b.matrix();
    return LinearOperator(a.layout(), std::move(m), a.is_hermitian() && b.is_hermitian());
}

LinearOperator scale(Complex c, const LinearOperator& a) {
    SparseMatrix m = a.matrix() * c;
    return LinearOperator(a.layout(), std::move(m), a.is_hermitian() && c.imag() == 0.0);
}

LinearOperator compose(const LinearOperator& a, const LinearOperator& b) {
    require_same_layout(a.layout(), b.layout(), "compose");
    SparseMatrix m = a.matrix() * b.matrix();
    return LinearOperator(a.layout(), std::move(m));
}

LinearOperator adjoint(const LinearOperator& a) {
    SparseMatrix m = a.matrix().adjoint();
    return LinearOperator(a.layout(), std::move(m), a.is_hermitian());
}

StateVector apply(const LinearOperator& op, const StateVector& state) {
    require_same_layout(op.layout(), state.layout(), "apply");
    CVector out = op.matrix() * state.amplitudes();
    return StateVector(state.layout(), std::move(out));
}

Complex inner_product(const StateVector& bra, const StateVector& ket) {
    require_same_layout(bra.layout(), ket.layout(), "inner_product");
    return bra.amplitudes().dot(ket.amplitudes());
}

StateVector matrix_power_apply(const LinearOperator& op, int power, const StateVector& state) {
    if (power < 0) throw std::invalid_argument("matrix_power_apply: power must be >= 0");
    require_same_layout(op.layout(), state.layout(), "matrix_power_apply");
    CVector v = state.amplitudes();
    for (int k = 0; k < power; ++k) v = op.matrix() * v;
    return StateVector(state.layout(), std::move(v));
}

double truncation_leakage(const StateVector& state, int margin) {
    const auto& layout = state.layout();
    if (margin < 1 || margin > layout.min_n_max()) {
        throw std::invalid_argument("truncation_leakage: margin " + std::to_string(margin) +
                                    " outside [1, " + std::to_string(layout.min_n_max()) + "]");
    }
    const double total = state.norm_squared();
    if (total == 0.0) return 0.0;
    double leaked = 0.0;
    for (std::size_t i = 0; i < layout.dimension(); ++i) {
        const double w = std::norm(state[i]);
        if (w == 0.0) continue;
        const auto occ = layout.occupations(i);
        for (std::size_t m = 0; m < occ.size(); ++m) {
            if (occ[m] > layout.truncations()[m] - margin) {
                leaked += w;
                break;
            }
        }
    }
    return leaked / total;
}

int support_level(const StateVector& state, Mode mode, double eps) {
    const auto& layout = state.layout();
    const int top = layout.n_max(mode);
    std::vector<double> weight(static_cast<std::size_t>(top) + 1, 0.0);
    for (std::size_t i = 0; i < layout.dimension(); ++i) {
        weight[static_cast<std::size_t>(layout.occupation(i, mode))] += std::norm(state[i]);
    }
    const double total = state.norm_squared();
    if (total == 0.0) return 0;
    double above = 0.0;
    for (int level = top; level > 0; --level) {
        above += weight[static_cast<std::size_t>(level)];
        if (above > eps * total) return level;
    }
    return 0;
}

}  // namespace axionsim
