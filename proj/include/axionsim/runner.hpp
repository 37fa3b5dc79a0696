// Sweep execution over a worker pool and result persistence (CSV, JSON, SVG).

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "axionsim/config.hpp"
#include "axionsim/conversion_scenarios.hpp"

namespace axionsim {

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ResultRecord {
    std::size_t index = 0;
    std::string sweep_param;            // empty for a single point
    std::optional<double> sweep_value;
    RunConfig config;                   // effective config of this point, no sweep
    ScenarioResult result;
    std::string error;                  // set when the point could not be evaluated
};

std::vector<double> sweep_values(const SweepSpec& sweep);

// Threads: 0 means hardware concurrency. Rows come back in sweep order.
std::vector<ResultRecord> run(const RunConfig& config, unsigned threads = 1);

bool any_flagged(const std::vector<ResultRecord>& records);

// Fixed column order: sweep_param, sweep_value, p_exact, p_leading, p_classical,
// enhancement, leakage, flagged.
std::string csv_text(const std::vector<ResultRecord>& records);
nlohmann::json records_json(const std::vector<ResultRecord>& records);
std::string svg_text(const std::vector<ResultRecord>& records, bool log_axes);
nlohmann::json units_metadata();
std::string version_string();

// Writes results.csv / results.json / results.svg under `output.directory`.
// Returns the paths written. Throws IoError.
std::vector<std::string> emit(const std::vector<ResultRecord>& records, const OutputSpec& output, bool log_axes);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace axionsim
