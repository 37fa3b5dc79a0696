#include "axionsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace axionsim {

using nlohmann::json;

namespace {

int line_of_offset(const std::string& text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Line of the last key in `path`, searching each key after the previous one.
int locate_line(const std::string& text, const std::vector<std::string>& path) {
    if (text.empty() || path.empty()) return 0;
    std::size_t pos = 0;
    std::size_t found = std::string::npos;
    for (const auto& key : path) {
        const std::string needle = "\"" + key + "\"";
        std::size_t p = pos;
        for (;;) {
            p = text.find(needle, p);
            if (p == std::string::npos) break;
            std::size_t q = p + needle.size();
            while (q < text.size() && std::isspace(static_cast<unsigned char>(text[q]))) ++q;
            if (q < text.size() && text[q] == ':') break;
            p += needle.size();
        }
        if (p == std::string::npos) break;
        found = p;
        pos = p + needle.size();
    }
    return found == std::string::npos ? 0 : line_of_offset(text, found);
}

std::string join(const std::vector<std::string>& path) {
    std::string s;
    for (const auto& k : path) {
        if (!s.empty()) s += '.';
        s += k;
    }
    return s.empty() ? "<root>" : s;
}

class Reader {
public:
    Reader(const std::string& text, std::string source) : text_(text), source_(std::move(source)) {}

    [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& message) const {
        std::ostringstream os;
        os << source_;
        const int line = locate_line(text_, path);
        if (line > 0) os << ':' << line;
        os << ": " << join(path) << ": " << message;
        throw ConfigError(os.str());
    }

    void check_keys(const json& obj, const std::vector<std::string>& path, const std::set<std::string>& allowed) const {
        if (!obj.is_object()) fail(path, "expected an object");
        for (auto it = obj.begin(); it != obj.end(); ++it) {
            if (!allowed.count(it.key())) {
                auto p = path;
                p.push_back(it.key());
                fail(p, "unknown key");
            }
        }
    }

    const json* child(const json& obj, const std::string& key) const {
        auto it = obj.find(key);
        if (it == obj.end() || it->is_null()) return nullptr;
        return &*it;
    }

    void number(const json& obj, const std::vector<std::string>& path, const std::string& key, double& out) const {
        if (const json* v = child(obj, key)) {
            auto p = path;
            p.push_back(key);
            if (!v->is_number()) fail(p, "expected a number");
            out = v->get<double>();
            if (!std::isfinite(out)) fail(p, "must be finite");
        }
    }

    void optional_number(const json& obj, const std::vector<std::string>& path, const std::string& key,
                         std::optional<double>& out) const {
        if (child(obj, key)) {
            double v = 0.0;
            number(obj, path, key, v);
            out = v;
        } else {
            out.reset();
        }
    }

    template <class Int>
    void integer(const json& obj, const std::vector<std::string>& path, const std::string& key, Int& out) const {
        if (const json* v = child(obj, key)) {
            auto p = path;
            p.push_back(key);
            if (!v->is_number_integer()) fail(p, "expected an integer");
            if constexpr (std::is_unsigned_v<Int>) {
                if (v->is_number_unsigned()) {
                    out = static_cast<Int>(v->get<std::uint64_t>());
                } else {
                    const auto s = v->get<std::int64_t>();
                    if (s < 0) fail(p, "must be >= 0");
                    out = static_cast<Int>(s);
                }
            } else {
                const auto s = v->get<std::int64_t>();
                if (s < std::numeric_limits<Int>::min() || s > std::numeric_limits<Int>::max()) fail(p, "out of range");
                out = static_cast<Int>(s);
            }
        }
    }

    void boolean(const json& obj, const std::vector<std::string>& path, const std::string& key, bool& out) const {
        if (const json* v = child(obj, key)) {
            auto p = path;
            p.push_back(key);
            if (!v->is_boolean()) fail(p, "expected true or false");
            out = v->get<bool>();
        }
    }

    void string(const json& obj, const std::vector<std::string>& path, const std::string& key, std::string& out) const {
        if (const json* v = child(obj, key)) {
            auto p = path;
            p.push_back(key);
            if (!v->is_string()) fail(p, "expected a string");
            out = v->get<std::string>();
        }
    }

private:
    const std::string& text_;
    std::string source_;
};

std::vector<std::string> path_of(std::initializer_list<const char*> keys) {
    std::vector<std::string> p;
    for (const char* k : keys) p.emplace_back(k);
    return p;
}

RunConfig read_config(const json& doc, const Reader& rd) {
    RunConfig c;
    rd.check_keys(doc, {}, {"scenario", "lab", "coupling", "state", "numerics", "sweep", "output", "seed"});

    if (rd.child(doc, "scenario")) {
        std::string kind;
        rd.string(doc, {}, "scenario", kind);
        try {
            c.kind = scenario_kind_from_string(kind);
        } catch (const std::invalid_argument&) {
            rd.fail(path_of({"scenario"}),
                    "unknown scenario '" + kind +
                        "' (classical, single_photon, photon_survival, coherent, squeezed_coherent_added)");
        }
    }

    if (const json* lab = rd.child(doc, "lab")) {
        const auto p = path_of({"lab"});
        rd.check_keys(*lab, p, {"m_eV", "E_gamma_eV", "g_per_GeV", "B_T", "L_m"});
        rd.number(*lab, p, "m_eV", c.lab.m_eV);
        rd.number(*lab, p, "E_gamma_eV", c.lab.E_gamma_eV);
        rd.number(*lab, p, "g_per_GeV", c.lab.g_per_GeV);
        rd.number(*lab, p, "B_T", c.lab.B_T);
        rd.number(*lab, p, "L_m", c.lab.L_m);
    }
    if (c.lab.m_eV < 0.0) rd.fail(path_of({"lab", "m_eV"}), "must be >= 0");
    if (!(c.lab.E_gamma_eV > 0.0)) rd.fail(path_of({"lab", "E_gamma_eV"}), "must be > 0");
    if (!(c.lab.g_per_GeV > 0.0)) rd.fail(path_of({"lab", "g_per_GeV"}), "must be > 0");
    if (!(c.lab.B_T > 0.0)) rd.fail(path_of({"lab", "B_T"}), "must be > 0");
    if (!(c.lab.L_m > 0.0)) rd.fail(path_of({"lab", "L_m"}), "must be > 0");

    if (const json* cp = rd.child(doc, "coupling")) {
        const auto p = path_of({"coupling"});
        rd.check_keys(*cp, p, {"lambda_eV", "strength"});
        rd.optional_number(*cp, p, "lambda_eV", c.lambda_eV);
        rd.optional_number(*cp, p, "strength", c.coupling_strength);
        if (c.lambda_eV && c.coupling_strength) rd.fail(p, "set at most one of lambda_eV and strength");
        if (c.lambda_eV && *c.lambda_eV < 0.0) rd.fail(path_of({"coupling", "lambda_eV"}), "must be >= 0");
        if (c.coupling_strength && *c.coupling_strength < 0.0) rd.fail(path_of({"coupling", "strength"}), "must be >= 0");
    }

    if (const json* st = rd.child(doc, "state")) {
        const auto p = path_of({"state"});
        rd.check_keys(*st, p, {"beta_abs", "delta", "alpha_abs", "alpha_phase", "r", "varphi", "N", "normalize"});
        rd.number(*st, p, "beta_abs", c.state.beta_abs);
        rd.number(*st, p, "delta", c.state.delta);
        rd.optional_number(*st, p, "alpha_abs", c.state.alpha_abs);
        rd.optional_number(*st, p, "alpha_phase", c.state.alpha_phase);
        rd.number(*st, p, "r", c.state.r);
        rd.number(*st, p, "varphi", c.state.varphi);
        rd.integer(*st, p, "N", c.state.N);
        rd.boolean(*st, p, "normalize", c.state.normalize);
    }
    if (c.state.beta_abs < 0.0) rd.fail(path_of({"state", "beta_abs"}), "must be >= 0");
    if (c.state.alpha_abs && *c.state.alpha_abs < 0.0) rd.fail(path_of({"state", "alpha_abs"}), "must be >= 0");
    if (c.state.r < 0.0) rd.fail(path_of({"state", "r"}), "must be >= 0");
    if (c.state.N < 0 || c.state.N > 200) rd.fail(path_of({"state", "N"}), "must be in [0, 200]");

    if (const json* nu = rd.child(doc, "numerics")) {
        const auto p = path_of({"numerics"});
        rd.check_keys(*nu, p,
                      {"axion_n_max", "photon_n_max", "photon_minus_n_max", "guard_margin", "leakage_threshold",
                       "layout", "pair_term_threshold", "evolution", "time_steps", "series_order", "ordering",
                       "krylov_switch_dimension", "krylov_subspace", "memory_budget_mib"});
        auto& n = c.numerics;
        rd.integer(*nu, p, "axion_n_max", n.axion_n_max);
        rd.integer(*nu, p, "photon_n_max", n.photon_n_max);
        rd.integer(*nu, p, "photon_minus_n_max", n.photon_minus_n_max);
        rd.integer(*nu, p, "guard_margin", n.guard_margin);
        rd.number(*nu, p, "leakage_threshold", n.leakage_threshold);
        rd.number(*nu, p, "pair_term_threshold", n.pair_term_threshold);
        rd.integer(*nu, p, "time_steps", n.time_steps);
        rd.integer(*nu, p, "series_order", n.series_order);
        rd.integer(*nu, p, "krylov_switch_dimension", n.evolution.krylov_switch_dimension);
        rd.integer(*nu, p, "krylov_subspace", n.evolution.krylov_subspace);
        std::size_t budget_mib = n.evolution.memory_budget_bytes >> 20;
        rd.integer(*nu, p, "memory_budget_mib", budget_mib);
        n.evolution.memory_budget_bytes = budget_mib << 20;
        std::string s;
        if (rd.child(*nu, "layout")) {
            rd.string(*nu, p, "layout", s);
            if (s == "auto") n.layout = LayoutChoice::automatic;
            else if (s == "four_mode") n.layout = LayoutChoice::four_mode;
            else if (s == "reduced") n.layout = LayoutChoice::reduced;
            else rd.fail(path_of({"numerics", "layout"}), "expected auto, four_mode or reduced");
        }
        if (rd.child(*nu, "evolution")) {
            rd.string(*nu, p, "evolution", s);
            if (s == "integrated") n.variant = EvolutionVariant::integrated;
            else if (s == "time_ordered") n.variant = EvolutionVariant::time_ordered;
            else rd.fail(path_of({"numerics", "evolution"}), "expected integrated or time_ordered");
        }
        if (rd.child(*nu, "ordering")) {
            rd.string(*nu, p, "ordering", s);
            if (s == "squeeze_then_displace") n.ordering = SqueezeOrdering::squeeze_then_displace;
            else if (s == "displace_then_squeeze") n.ordering = SqueezeOrdering::displace_then_squeeze;
            else rd.fail(path_of({"numerics", "ordering"}), "expected squeeze_then_displace or displace_then_squeeze");
        }
    }
    {
        const auto& n = c.numerics;
        if (n.axion_n_max < 1) rd.fail(path_of({"numerics", "axion_n_max"}), "must be >= 1");
        if (n.photon_n_max < 0) rd.fail(path_of({"numerics", "photon_n_max"}), "must be >= 0 (0 sizes automatically)");
        if (n.photon_minus_n_max < 1) rd.fail(path_of({"numerics", "photon_minus_n_max"}), "must be >= 1");
        if (n.guard_margin < 1 || n.guard_margin > n.axion_n_max || n.guard_margin > n.photon_minus_n_max ||
            (n.photon_n_max > 0 && n.guard_margin > n.photon_n_max)) {
            rd.fail(path_of({"numerics", "guard_margin"}), "must be in [1, smallest n_max]");
        }
        if (!(n.leakage_threshold > 0.0)) rd.fail(path_of({"numerics", "leakage_threshold"}), "must be > 0");
        if (!(n.pair_term_threshold >= 0.0)) rd.fail(path_of({"numerics", "pair_term_threshold"}), "must be >= 0");
        if (n.time_steps < 1) rd.fail(path_of({"numerics", "time_steps"}), "must be >= 1");
        if (n.series_order < 0 || n.series_order > 6) rd.fail(path_of({"numerics", "series_order"}), "must be in [0, 6]");
        if (n.evolution.krylov_subspace < 2) rd.fail(path_of({"numerics", "krylov_subspace"}), "must be >= 2");
        if (n.evolution.memory_budget_bytes == 0) rd.fail(path_of({"numerics", "memory_budget_mib"}), "must be > 0");
    }

    if (const json* sw = rd.child(doc, "sweep")) {
        const auto p = path_of({"sweep"});
        rd.check_keys(*sw, p, {"parameter", "from", "to", "points", "scale"});
        SweepSpec s;
        if (!rd.child(*sw, "parameter")) rd.fail(p, "missing 'parameter'");
        if (!rd.child(*sw, "from") || !rd.child(*sw, "to")) rd.fail(p, "missing 'from' or 'to'");
        if (!rd.child(*sw, "points")) rd.fail(p, "missing 'points'");
        rd.string(*sw, p, "parameter", s.parameter);
        rd.number(*sw, p, "from", s.from);
        rd.number(*sw, p, "to", s.to);
        rd.integer(*sw, p, "points", s.points);
        std::string scale = "linear";
        rd.string(*sw, p, "scale", scale);
        if (scale != "linear" && scale != "log") rd.fail(path_of({"sweep", "scale"}), "expected linear or log");
        s.log_scale = scale == "log";
        const auto& names = sweepable_parameters();
        if (std::find(names.begin(), names.end(), s.parameter) == names.end()) {
            std::string list;
            for (const auto& nm : names) list += (list.empty() ? "" : ", ") + nm;
            rd.fail(path_of({"sweep", "parameter"}), "'" + s.parameter + "' is not sweepable (" + list + ")");
        }
        if (s.points < 2) rd.fail(path_of({"sweep", "points"}), "must be >= 2");
        if (s.points > 100000) rd.fail(path_of({"sweep", "points"}), "must be <= 100000");
        if (s.log_scale && !(s.from > 0.0 && s.to > 0.0)) rd.fail(path_of({"sweep", "scale"}), "log scale needs positive bounds");
        c.sweep = s;
    }

    if (const json* out = rd.child(doc, "output")) {
        const auto p = path_of({"output"});
        rd.check_keys(*out, p, {"directory", "formats"});
        rd.string(*out, p, "directory", c.output.directory);
        if (const json* f = rd.child(*out, "formats")) {
            if (!f->is_array()) rd.fail(path_of({"output", "formats"}), "expected an array of strings");
            c.output.formats.clear();
            for (const auto& e : *f) {
                if (!e.is_string()) rd.fail(path_of({"output", "formats"}), "expected an array of strings");
                const auto s = e.get<std::string>();
                if (s != "csv" && s != "json" && s != "svg") rd.fail(path_of({"output", "formats"}), "unknown format '" + s + "'");
                if (std::find(c.output.formats.begin(), c.output.formats.end(), s) == c.output.formats.end()) {
                    c.output.formats.push_back(s);
                }
            }
        }
        if (c.output.directory.empty()) rd.fail(path_of({"output", "directory"}), "must not be empty");
    }

    rd.integer(doc, {}, "seed", c.seed);
    return c;
}

void apply_override(json& doc, const std::string& item) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param '" + item + "': expected key=value");
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    json* node = &doc;
    std::size_t start = 0;
    for (;;) {
        const auto dot = key.find('.', start);
        const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (part.empty()) throw ConfigError("--param '" + item + "': empty path component");
        if (!node->is_object()) {
            if (node->is_null()) *node = json::object();
            else throw ConfigError("--param '" + item + "': '" + part + "' is not inside an object");
        }
        if (dot == std::string::npos) {
            (*node)[part] = value;
            return;
        }
        node = &(*node)[part];
        start = dot + 1;
    }
}

RunConfig parse_json_text(const std::string& text, const std::string& source, const std::vector<std::string>& overrides) {
    json doc;
    try {
        doc = text.empty() ? json::object() : json::parse(text);
    } catch (const json::parse_error& e) {
        std::ostringstream os;
        os << source << ':' << line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0) << ": parse error: " << e.what();
        throw ConfigError(os.str());
    }
    if (!doc.is_object()) throw ConfigError(source + ":1: top level must be an object");
    for (const auto& o : overrides) apply_override(doc, o);
    const Reader rd(text, source);
    return read_config(doc, rd);
}

}  // namespace

const std::vector<std::string>& sweepable_parameters() {
    static const std::vector<std::string> names{"L", "m", "E_gamma", "g", "B_T", "r", "beta_abs", "delta", "N", "lambda"};
    return names;
}

RunConfig parse_config_text(const std::string& text, const std::string& source,
                            const std::vector<std::string>& overrides) {
    return parse_json_text(text, source, overrides);
}

RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_json_text(ss.str(), path, overrides);
}

RunConfig default_config(const std::vector<std::string>& overrides) {
    return parse_json_text("", "<defaults>", overrides);
}

json config_to_json(const RunConfig& c) {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json j;
    j["scenario"] = to_string(c.kind);
    j["lab"] = {{"m_eV", c.lab.m_eV},
                {"E_gamma_eV", c.lab.E_gamma_eV},
                {"g_per_GeV", c.lab.g_per_GeV},
                {"B_T", c.lab.B_T},
                {"L_m", c.lab.L_m}};
    j["coupling"] = {{"lambda_eV", opt(c.lambda_eV)}, {"strength", opt(c.coupling_strength)}};
    j["state"] = {{"beta_abs", c.state.beta_abs},
                  {"delta", c.state.delta},
                  {"alpha_abs", opt(c.state.alpha_abs)},
                  {"alpha_phase", opt(c.state.alpha_phase)},
                  {"r", c.state.r},
                  {"varphi", c.state.varphi},
                  {"N", c.state.N},
                  {"normalize", c.state.normalize}};
    const auto& n = c.numerics;
    j["numerics"] = {{"axion_n_max", n.axion_n_max},
                     {"photon_n_max", n.photon_n_max},
                     {"photon_minus_n_max", n.photon_minus_n_max},
                     {"guard_margin", n.guard_margin},
                     {"leakage_threshold", n.leakage_threshold},
                     {"layout", to_string(n.layout)},
                     {"pair_term_threshold", n.pair_term_threshold},
                     {"evolution", to_string(n.variant)},
                     {"time_steps", n.time_steps},
                     {"series_order", n.series_order},
                     {"ordering", n.ordering == SqueezeOrdering::squeeze_then_displace ? "squeeze_then_displace"
                                                                                         : "displace_then_squeeze"},
                     {"krylov_switch_dimension", n.evolution.krylov_switch_dimension},
                     {"krylov_subspace", n.evolution.krylov_subspace},
                     {"memory_budget_mib", n.evolution.memory_budget_bytes >> 20}};
    if (c.sweep) {
        j["sweep"] = {{"parameter", c.sweep->parameter},
                      {"from", c.sweep->from},
                      {"to", c.sweep->to},
                      {"points", c.sweep->points},
                      {"scale", c.sweep->log_scale ? "log" : "linear"}};
    } else {
        j["sweep"] = nullptr;
    }
    j["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
    j["seed"] = c.seed;
    return j;
}

RunConfig config_from_json(const json& doc) {
    static const std::string empty;
    const Reader rd(empty, "<json>");
    return read_config(doc, rd);
}

void set_parameter(RunConfig& c, const std::string& name, double value) {
    if (name == "L") c.lab.L_m = value;
    else if (name == "m") c.lab.m_eV = value;
    else if (name == "E_gamma") c.lab.E_gamma_eV = value;
    else if (name == "g") c.lab.g_per_GeV = value;
    else if (name == "B_T") c.lab.B_T = value;
    else if (name == "r") c.state.r = value;
    else if (name == "beta_abs") c.state.beta_abs = value;
    else if (name == "delta") c.state.delta = value;
    else if (name == "N") c.state.N = static_cast<int>(std::llround(value));
    else if (name == "lambda") {
        c.lambda_eV = value;
        c.coupling_strength.reset();
    } else {
        throw ConfigError("parameter '" + name + "' is not sweepable");
    }
}

double get_parameter(const RunConfig& c, const std::string& name) {
    if (name == "L") return c.lab.L_m;
    if (name == "m") return c.lab.m_eV;
    if (name == "E_gamma") return c.lab.E_gamma_eV;
    if (name == "g") return c.lab.g_per_GeV;
    if (name == "B_T") return c.lab.B_T;
    if (name == "r") return c.state.r;
    if (name == "beta_abs") return c.state.beta_abs;
    if (name == "delta") return c.state.delta;
    if (name == "N") return c.state.N;
    if (name == "lambda") {
        if (c.lambda_eV) return *c.lambda_eV;
        return to_natural_units(c.lab).lambda;
    }
    throw ConfigError("parameter '" + name + "' is not sweepable");
}

ScenarioSpec make_scenario(const RunConfig& c) {
    ScenarioSpec s;
    s.kind = c.kind;
    s.params = to_natural_units(c.lab);
    if (c.lambda_eV) s.params = s.params.with_lambda(*c.lambda_eV);
    if (c.coupling_strength) s.params = at_coupling_strength(s.params, *c.coupling_strength);
    s.beta = CoherentAmplitude::from_polar(c.state.beta_abs, c.state.delta);
    s.alpha_equals_beta = !c.state.alpha_abs && !c.state.alpha_phase;
    s.alpha = CoherentAmplitude::from_polar(c.state.alpha_abs.value_or(c.state.beta_abs),
                                            c.state.alpha_phase.value_or(c.state.delta));
    s.zeta = SqueezeParam(c.state.r, c.state.varphi);
    s.addition = PhotonAddition{c.state.N, c.state.normalize};
    s.numerics = c.numerics;
    return s;
}

}  // namespace axionsim
