// Run configuration: one JSON document, strict keys, dotted-path overrides.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "axionsim/conversion_scenarios.hpp"
#include "axionsim/mixing_model.hpp"

namespace axionsim {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct SweepSpec {
    std::string parameter;
    double from = 0.0;
    double to = 0.0;
    int points = 2;
    bool log_scale = false;
};

struct OutputSpec {
    std::string directory = "axion-sim-out";
    std::vector<std::string> formats{"csv", "json"};
};

struct StateInputs {
    double beta_abs = 0.0;
    double delta = 0.0;
    std::optional<double> alpha_abs;    // defaults to beta
    std::optional<double> alpha_phase;  // defaults to delta
    double r = 0.0;
    double varphi = 0.0;
    int N = 1;
    bool normalize = false;
};

struct RunConfig {
    ScenarioKind kind = ScenarioKind::single_photon;
    LabInputs lab{};
    // at most one of these; both rescale B
    std::optional<double> lambda_eV;
    std::optional<double> coupling_strength;  // lambda U |f|
    StateInputs state{};
    Numerics numerics{};
    std::optional<SweepSpec> sweep;
    OutputSpec output{};
    std::uint64_t seed = 0;
};

// Scalars a sweep may vary.
const std::vector<std::string>& sweepable_parameters();

// Parses and validates; `source` names the document in error messages.
// Overrides are "dotted.path=value" strings applied before validation.
RunConfig parse_config_text(const std::string& text, const std::string& source,
                            const std::vector<std::string>& overrides = {});
RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});
// Defaults only, plus overrides.
RunConfig default_config(const std::vector<std::string>& overrides = {});

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& doc);

// Sets one sweepable scalar.
void set_parameter(RunConfig& config, const std::string& parameter, double value);
double get_parameter(const RunConfig& config, const std::string& parameter);

ScenarioSpec make_scenario(const RunConfig& config);

}  // namespace axionsim
