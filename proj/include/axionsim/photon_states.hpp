// Coherent, squeezed, squeezed coherent and photon-added states on one mode of
// a truncated layout. Unitaries are built as exp(-iH) of a Hermitian H; the
// remaining modes of the layout are left in vacuum.

#pragma once

#include <cmath>
#include <numbers>

#include "axionsim/state_space.hpp"

namespace axionsim {

struct CoherentAmplitude {
    Complex beta{0.0, 0.0};

    static CoherentAmplitude from_polar(double magnitude, double phase) {
        return {std::polar(magnitude, phase)};
    }
    double magnitude() const { return std::abs(beta); }
    // in (-pi, pi]
    double phase() const;
};

struct SqueezeParam {
    double r = 0.0;
    double varphi = 0.0;

    SqueezeParam() = default;
    SqueezeParam(double r_, double varphi_);
    Complex zeta() const { return std::polar(r, varphi); }
};

struct PhotonAddition {
    int n = 0;
    bool normalize = false;
};

struct TruncationPolicy {
    int guard_margin = 2;
    double leakage_threshold = 1e-10;
};

enum class SqueezeOrdering { squeeze_then_displace, displace_then_squeeze };

LinearOperator displacement_op(const ModeLayout& layout, Mode mode, CoherentAmplitude beta,
                               const TruncationPolicy& policy = {});
LinearOperator squeeze_op(const ModeLayout& layout, Mode mode, SqueezeParam zeta,
                          const TruncationPolicy& policy = {});

// Normalised S(zeta) D(beta)|0> on `mode`. The reverse ordering D S |0> is a
// different state and is only produced on request.
StateVector squeezed_coherent(const ModeLayout& layout, Mode mode, SqueezeParam zeta,
                              CoherentAmplitude beta, const TruncationPolicy& policy = {},
                              SqueezeOrdering ordering = SqueezeOrdering::squeeze_then_displace);

inline StateVector coherent_state(const ModeLayout& layout, Mode mode, CoherentAmplitude beta,
                                  const TruncationPolicy& policy = {}) {
    return squeezed_coherent(layout, mode, SqueezeParam{}, beta, policy);
}

struct PhotonAdded {
    StateVector state;
    // <s| b^N b^dagger^N |s>, the squared norm of b^dagger^N s
    double norm_factor;
    bool normalized;
};

PhotonAdded add_photons(const StateVector& state, Mode mode, PhotonAddition addition,
                        const TruncationPolicy& policy = {});

// |<alpha|beta>|^2 = exp(-|alpha - beta|^2)
double coherent_overlap(CoherentAmplitude alpha, CoherentAmplitude beta);

// Poisson tail P(n > level) for mean |beta|^2.
double poisson_tail(double mean, int level);
// Photon-number tail of the squeezed vacuum, P(n > level).
double squeezed_vacuum_tail(double r, int level);

// Heuristic photon n_max: ceil(|beta|^2 e^{2r}) + N + 10 ceil(|beta| e^r) + 10.
int suggested_photon_n_max(double beta_abs, double r, int added_photons);

}  // namespace axionsim
