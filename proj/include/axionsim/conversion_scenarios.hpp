// End-to-end conversion probabilities for one parameter point: exact
// evolution on a truncated layout, the leading-order closed form, series
// terms and enhancement factors.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "axionsim/mixing_model.hpp"
#include "axionsim/photon_states.hpp"
#include "axionsim/state_space.hpp"

namespace axionsim {

enum class ScenarioKind { classical, single_photon, photon_survival, coherent, squeezed_coherent_added };
std::string to_string(ScenarioKind kind);
ScenarioKind scenario_kind_from_string(const std::string& name);

enum class EvolutionVariant { integrated, time_ordered };
enum class LayoutChoice { automatic, four_mode, reduced };
std::string to_string(EvolutionVariant v);
std::string to_string(LayoutChoice c);

struct Numerics {
    int axion_n_max = 4;
    int photon_n_max = 0;        // 0: sized automatically
    int photon_minus_n_max = 4;
    int guard_margin = 2;
    double leakage_threshold = 1e-10;
    LayoutChoice layout = LayoutChoice::automatic;
    // reduced layout is used automatically when (lambda V |g|)^2 (1 + <n>) is below this
    double pair_term_threshold = 1e-10;
    EvolutionVariant variant = EvolutionVariant::integrated;
    int time_steps = 1;
    int series_order = 5;
    SqueezeOrdering ordering = SqueezeOrdering::squeeze_then_displace;
    EvolutionOptions evolution{};
};

struct ScenarioSpec {
    ScenarioKind kind = ScenarioKind::single_photon;
    MixingParams params{};
    CoherentAmplitude alpha{};
    CoherentAmplitude beta{};
    bool alpha_equals_beta = true;
    SqueezeParam zeta{};
    PhotonAddition addition{1, false};
    Numerics numerics{};
};

struct SeriesTerm {
    int order;
    Complex amplitude;         // c_n lambda^n
    double partial_probability;  // |sum_{k <= n} c_k lambda^k|^2
};

// Probability split for the one-photon initial state. With pair terms the
// single-quantum channels need not sum to one; the remainder sits in
// sectors with three or more quanta.
struct ChannelBreakdown {
    double axion_plus = 0.0;
    double axion_minus = 0.0;
    double photon_plus = 0.0;
    double photon_minus = 0.0;
    double multi_quanta = 0.0;
    double residual = 0.0;  // 1 - single channels - multi quanta
};

struct ScenarioResult {
    ScenarioKind kind = ScenarioKind::single_photon;
    double p_exact = 0.0;
    double p_leading = 0.0;
    double p_classical = 0.0;
    std::vector<SeriesTerm> p_series;
    double enhancement = 1.0;  // p_exact / p_exact(single photon, same couplings)
    double leakage = 0.0;
    bool flagged = false;
    std::string flag_reason;
    bool normalized_addition = false;
    double addition_norm_factor = 1.0;
    std::string layout;
    int photon_n_max = 0;
    std::optional<ChannelBreakdown> channels;
    std::vector<std::string> notes;
};

ScenarioResult classical_scenario(const ScenarioSpec& spec);
ScenarioResult single_photon_conversion(const ScenarioSpec& spec);
ScenarioResult photon_survival(const ScenarioSpec& spec);
ScenarioResult coherent_conversion(const ScenarioSpec& spec);
ScenarioResult squeezed_coherent_conversion(const ScenarioSpec& spec);
ScenarioResult evaluate(const ScenarioSpec& spec);

// B rescaled so that lambda U |f| equals `strength` at the given (m, k, t).
MixingParams at_coupling_strength(const MixingParams& params, double strength);

// <beta| L0 L1^N |beta> with L0 = S^dagger b S, L1 = S^dagger b^dagger S; the
// leading-order N-photon-added amplitude is lambda U f^* times this.
Complex squeezed_added_moment(Complex beta, SqueezeParam zeta, int N);
// lambda^2 U^2 |f|^2 |moment|^2 (unnormalised convention)
double squeezed_added_leading(const MixingParams& params, Complex beta, SqueezeParam zeta, int N);
// cosh^2 r + |beta|^2 (cosh 2r + sinh 2r cos(2 delta - varphi))
double squeezed_bracket_n1(double beta_abs, double delta, SqueezeParam zeta);

struct ScalingFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double r_squared = 0.0;
    std::size_t points = 0;
};
// Least-squares slope of log p against x (or log x when log_x is set).
ScalingFit enhancement_scaling_fit(std::span<const double> x, std::span<const double> p, bool log_x = false);

double squeezing_db(double r);
double db_to_r(double db);

struct HeadlineReport {
    double db = 0.0;
    double r = 0.0;
    int N = 0;
    double beta_abs = 0.0;
    double factor_e2Nr = 0.0;       // e^{2 N r}
    double factor_e2N1r = 0.0;      // e^{2 (N+1) r}
    double fitted_slope = 0.0;      // d log p / dr at r
    double fitted_factor = 0.0;     // e^{slope r}
    double raw_ratio = 0.0;         // p(r) / p(r = 0)
    int photon_n_max = 0;
    std::string ambiguity;
};
// Squeezing enhancement at `db` for N added photons, phase aligned, reduced layout.
HeadlineReport headline_enhancement(double db, int N, double beta_abs, const MixingParams& params,
                                    const Numerics& numerics = {});

}  // namespace axionsim
