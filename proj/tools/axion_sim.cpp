#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "axionsim/config.hpp"
#include "axionsim/conversion_scenarios.hpp"
#include "axionsim/perturbation_oracle.hpp"
#include "axionsim/runner.hpp"

using namespace axionsim;

namespace {

enum Exit : int { ok = 0, mismatch = 1, config_error = 2, flagged_rows = 3, io_error = 4 };

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> params;
    std::string out;
    std::string formats;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_path, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("--param", o.params, "dotted-path override key=value (repeatable)");
    sub->add_option("--out", o.out, "output directory (overrides AXION_SIM_OUT and the config)");
    sub->add_option("--formats", o.formats, "comma-separated subset of csv,json,svg");
    sub->add_option("--seed", o.seed, "seed for probe randomisation");
    sub->add_option("--threads", o.threads, "worker threads (overrides AXION_SIM_THREADS)");
}

std::optional<std::string> env(const char* name) {
    const char* v = std::getenv(name);
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

RunConfig load(const CommonOptions& o) {
    RunConfig c = o.config_path.empty() ? default_config(o.params) : parse_config(o.config_path, o.params);
    if (!o.out.empty()) c.output.directory = o.out;
    else if (auto e = env("AXION_SIM_OUT")) c.output.directory = *e;
    if (!o.formats.empty()) {
        c.output.formats.clear();
        std::stringstream ss(o.formats);
        std::string item;
        while (std::getline(ss, item, ',')) {
            if (item.empty()) continue;
            if (item != "csv" && item != "json" && item != "svg") throw ConfigError("--formats: unknown format '" + item + "'");
            if (std::find(c.output.formats.begin(), c.output.formats.end(), item) == c.output.formats.end()) {
                c.output.formats.push_back(item);
            }
        }
    }
    if (o.seed) c.seed = *o.seed;
    return c;
}

unsigned thread_count(const CommonOptions& o) {
    if (o.threads) return *o.threads;
    if (auto e = env("AXION_SIM_THREADS")) {
        try {
            const long v = std::stol(*e);
            if (v < 0) throw std::invalid_argument("negative");
            return static_cast<unsigned>(v);
        } catch (const std::exception&) {
            throw ConfigError("AXION_SIM_THREADS: expected a non-negative integer, got '" + *e + "'");
        }
    }
    return 0;
}

void print_records(const std::vector<ResultRecord>& records) {
    std::cout << std::setw(14) << "sweep" << std::setw(16) << "p_exact" << std::setw(16) << "p_leading"
              << std::setw(16) << "p_classical" << std::setw(14) << "enhancement" << std::setw(12) << "leakage"
              << "  flagged\n";
    std::cout << std::setprecision(6);
    for (const auto& r : records) {
        std::cout << std::setw(14) << (r.sweep_value ? *r.sweep_value : 0.0) << std::setw(16) << r.result.p_exact
                  << std::setw(16) << r.result.p_leading << std::setw(16) << r.result.p_classical << std::setw(14)
                  << r.result.enhancement << std::setw(12) << r.result.leakage << "  "
                  << (r.result.flagged ? "yes: " + r.result.flag_reason : "no") << '\n';
        for (const auto& note : r.result.notes) std::cout << "    note: " << note << '\n';
    }
}

int run_scenario(const CommonOptions& o, std::optional<ScenarioKind> kind, const std::string& command,
                 const std::vector<std::string>& argv) {
    RunConfig c = load(o);
    if (kind) c.kind = *kind;
    else if (!c.sweep) throw ConfigError("sweep: the configuration has no 'sweep' section");
    const unsigned threads = thread_count(o);
    const auto start = std::chrono::steady_clock::now();
    const auto records = run(c, threads);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    print_records(records);

    const auto written = emit(records, c.output, c.sweep && c.sweep->log_scale);
    nlohmann::json manifest{{"command", command},
                            {"argv", argv},
                            {"threads", threads},
                            {"wall_clock_seconds", seconds},
                            {"records", records.size()},
                            {"files", written},
                            {"version", version_string()}};
    write_text_file((std::filesystem::path(c.output.directory) / "run_manifest.json").string(), manifest.dump(2) + "\n");
    for (const auto& w : written) std::cout << "wrote " << w << '\n';
    return any_flagged(records) ? flagged_rows : ok;
}

int run_verify(const CommonOptions& o, int n_max, bool plus_only) {
    RunConfig c = load(o);
    GeneratorTerms terms;
    terms.minus_k_conversion = !plus_only;
    const VerificationReport rep = verify_coefficients(c.seed, n_max, terms);
    std::ostringstream csv;
    csv << "channel,order,monomial,recovered,expected,abs_delta,residual,pass\n";
    csv << std::setprecision(12);
    for (const auto& r : rep.rows) {
        csv << to_string(r.channel) << ',' << r.order << ',' << r.monomial << ',' << r.recovered << ',' << r.expected
            << ',' << r.delta << ',' << r.residual << ',' << (r.pass ? "true" : "false") << '\n';
    }
    std::cout << csv.str();
    std::cout << "seed " << rep.seed << ", n_max " << rep.n_max << (plus_only ? ", +k conversion only" : "")
              << ": " << (rep.pass ? "PASS" : "FAIL") << '\n';
    std::error_code ec;
    std::filesystem::create_directories(c.output.directory, ec);
    if (ec) throw IoError("cannot create output directory '" + c.output.directory + "'");
    write_text_file((std::filesystem::path(c.output.directory) / "coefficients.csv").string(), csv.str());
    return rep.pass ? ok : mismatch;
}

int run_units(const CommonOptions& o) {
    const RunConfig c = load(o);
    const MixingParams p = to_natural_units(c.lab);
    const double gBL = p.g * p.B * p.t;
    const double phase = p.m * p.m * p.t / (2.0 * p.k);
    nlohmann::json j;
    j["constants"] = units_metadata();
    j["inputs"] = {{"m_eV", c.lab.m_eV},
                   {"E_gamma_eV", c.lab.E_gamma_eV},
                   {"g_per_GeV", c.lab.g_per_GeV},
                   {"B_T", c.lab.B_T},
                   {"L_m", c.lab.L_m}};
    j["natural"] = {{"g_inv_eV", p.g}, {"B_eV2", p.B}, {"L_inv_eV", p.t}, {"lambda_eV", p.lambda}};
    j["estimates"] = {{"gB_T_L", gBL},
                      {"gB_T_L_reference", 1e-6},
                      {"gB_T_L_ratio", gBL / 1e-6},
                      {"m2L_over_2E", phase},
                      {"m2L_over_2E_reference", 1e4},
                      {"m2L_over_2E_ratio", phase / 1e4},
                      {"classical_probability", classical_probability(p)},
                      {"classical_small_mixing_probability", classical_small_mixing_probability(p)}};
    std::cout << j.dump(2) << '\n';
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"axion-sim: photon to axion conversion in a truncated Fock space"};
    app.set_version_flag("--version", version_string());
    app.require_subcommand(1);

    CommonOptions opts;
    struct Entry {
        const char* name;
        const char* help;
        std::optional<ScenarioKind> kind;
    };
    const Entry entries[] = {
        {"classical", "classical conversion probability", ScenarioKind::classical},
        {"single", "single photon to axion conversion", ScenarioKind::single_photon},
        {"survival", "single photon survival", ScenarioKind::photon_survival},
        {"coherent", "coherent-state conversion", ScenarioKind::coherent},
        {"squeezed", "photon-added squeezed coherent state conversion", ScenarioKind::squeezed_coherent_added},
        {"sweep", "parameter sweep of the configured scenario", std::nullopt},
    };
    std::vector<std::pair<CLI::App*, std::optional<ScenarioKind>>> scenario_cmds;
    for (const auto& e : entries) {
        CLI::App* sub = app.add_subcommand(e.name, e.help);
        add_common(sub, opts);
        scenario_cmds.emplace_back(sub, e.kind);
    }
    CLI::App* verify = app.add_subcommand("verify-coefficients", "recover the integer series brackets");
    add_common(verify, opts);
    int n_max = 7;
    bool plus_only = false;
    verify->add_option("--n-max", n_max, "per-mode truncation")->check(CLI::Range(6, 12));
    verify->add_flag("--plus-only", plus_only, "diagnostic: drop the -k conversion term");
    CLI::App* units_cmd = app.add_subcommand("units", "unit conversions and the lab estimates");
    add_common(units_cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_error;
    }

    const std::vector<std::string> args(argv, argv + argc);
    try {
        if (verify->parsed()) return run_verify(opts, n_max, plus_only);
        if (units_cmd->parsed()) return run_units(opts);
        for (const auto& [sub, kind] : scenario_cmds) {
            if (sub->parsed()) return run_scenario(opts, kind, sub->get_name(), args);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return io_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return mismatch;
    }
    return config_error;
}
