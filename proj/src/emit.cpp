#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <Eigen/Core>

#include "axionsim/runner.hpp"

#ifndef AXIONSIM_VERSION
#define AXIONSIM_VERSION "dev"
#endif

namespace axionsim {

using nlohmann::json;

namespace {

// shortest round-trip representation
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
}

json result_json(const ScenarioResult& r) {
    json j;
    j["kind"] = to_string(r.kind);
    j["p_exact"] = finite_or_null(r.p_exact);
    j["p_leading"] = finite_or_null(r.p_leading);
    j["p_classical"] = finite_or_null(r.p_classical);
    json series = json::array();
    for (const auto& t : r.p_series) {
        series.push_back({{"order", t.order},
                          {"amplitude_re", t.amplitude.real()},
                          {"amplitude_im", t.amplitude.imag()},
                          {"partial_probability", t.partial_probability}});
    }
    j["p_series"] = series;
    j["enhancement"] = finite_or_null(r.enhancement);
    j["leakage"] = finite_or_null(r.leakage);
    j["flagged"] = r.flagged;
    j["flag_reason"] = r.flag_reason;
    j["photon_addition"] = {{"convention", r.normalized_addition ? "normalized" : "unnormalized"},
                            {"norm_factor", finite_or_null(r.addition_norm_factor)}};
    j["layout"] = r.layout;
    j["photon_n_max"] = r.photon_n_max;
    if (r.channels) {
        const auto& c = *r.channels;
        j["channels"] = {{"axion_plus", c.axion_plus},   {"axion_minus", c.axion_minus},
                         {"photon_plus", c.photon_plus}, {"photon_minus", c.photon_minus},
                         {"multi_quanta", c.multi_quanta}, {"residual", c.residual}};
    } else {
        j["channels"] = nullptr;
    }
    j["notes"] = r.notes;
    return j;
}

}  // namespace

std::string version_string() { return AXIONSIM_VERSION; }

json units_metadata() {
    json arr = json::array();
    for (const auto& c : units::constant_table()) {
        arr.push_back({{"name", c.name}, {"value", c.value}, {"unit", c.unit}, {"provenance", c.provenance}});
    }
    return arr;
}

std::string csv_text(const std::vector<ResultRecord>& records) {
    std::string out = "sweep_param,sweep_value,p_exact,p_leading,p_classical,enhancement,leakage,flagged\n";
    for (const auto& rec : records) {
        const auto& r = rec.result;
        out += csv_field(rec.sweep_param.empty() ? "none" : rec.sweep_param);
        out += ',';
        if (rec.sweep_value) out += num(*rec.sweep_value);
        out += ',' + num(r.p_exact) + ',' + num(r.p_leading) + ',' + num(r.p_classical) + ',' + num(r.enhancement) +
               ',' + num(r.leakage) + ',' + (r.flagged ? "true" : "false") + '\n';
    }
    return out;
}

json records_json(const std::vector<ResultRecord>& records) {
    json arr = json::array();
    const json versions = {{"axion_sim", version_string()},
                           {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                         "." + std::to_string(EIGEN_MINOR_VERSION)},
                           {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                 std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                 std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    const json units = units_metadata();
    for (const auto& rec : records) {
        json j;
        j["index"] = rec.index;
        if (rec.sweep_value) {
            j["sweep"] = {{"parameter", rec.sweep_param}, {"value", *rec.sweep_value}};
        } else {
            j["sweep"] = nullptr;
        }
        j["config"] = config_to_json(rec.config);
        j["result"] = result_json(rec.result);
        j["error"] = rec.error.empty() ? json(nullptr) : json(rec.error);
        j["versions"] = versions;
        j["units"] = units;
        arr.push_back(std::move(j));
    }
    return arr;
}

std::string svg_text(const std::vector<ResultRecord>& records, bool log_axes) {
    struct Series {
        const char* name;
        const char* colour;
        double ScenarioResult::*field;
    };
    const Series all[] = {{"p_exact", "#1f77b4", &ScenarioResult::p_exact},
                          {"p_leading", "#d62728", &ScenarioResult::p_leading},
                          {"p_classical", "#2ca02c", &ScenarioResult::p_classical}};
    auto usable = [log_axes](double v) { return std::isfinite(v) && (!log_axes || v > 0.0); };
    auto xval = [](const ResultRecord& r) { return r.sweep_value ? *r.sweep_value : double(r.index); };
    auto tx = [log_axes](double v) { return log_axes ? std::log10(v) : v; };

    std::vector<const Series*> present;
    double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
    for (const auto& s : all) {
        bool any = false;
        for (const auto& rec : records) {
            const double x = xval(rec);
            const double y = rec.result.*(s.field);
            if (!usable(y) || !usable(x)) continue;
            any = true;
            xmin = std::min(xmin, tx(x));
            xmax = std::max(xmax, tx(x));
            ymin = std::min(ymin, tx(y));
            ymax = std::max(ymax, tx(y));
        }
        if (any) present.push_back(&s);
    }
    if (present.empty()) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
    if (ymax == ymin) {
        const double pad = ymin == 0.0 ? 0.5 : 0.05 * std::abs(ymin);
        ymin -= pad, ymax += pad;
    }

    const double W = 720, H = 480, ml = 80, mr = 160, mt = 30, mb = 60;
    const double pw = W - ml - mr, ph = H - mt - mb;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double y) { return mt + ph - (y - ymin) / (ymax - ymin) * ph; };

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\"" << H
       << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n"
       << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n"
       << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double fx = xmin + (xmax - xmin) * k / 4.0;
        const double fy = ymin + (ymax - ymin) * k / 4.0;
        const double lx = log_axes ? std::pow(10.0, fx) : fx;
        const double ly = log_axes ? std::pow(10.0, fy) : fy;
        os << "<line x1=\"" << num(px(fx)) << "\" y1=\"" << mt + ph << "\" x2=\"" << num(px(fx)) << "\" y2=\""
           << mt + ph + 5 << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << num(px(fx)) << "\" y=\"" << mt + ph + 20 << "\" font-size=\"11\" text-anchor=\"middle\">"
           << fmt(lx) << "</text>\n"
           << "<line x1=\"" << ml - 5 << "\" y1=\"" << num(py(fy)) << "\" x2=\"" << ml << "\" y2=\"" << num(py(fy))
           << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << ml - 8 << "\" y=\"" << num(py(fy) + 4) << "\" font-size=\"11\" text-anchor=\"end\">"
           << fmt(ly) << "</text>\n";
    }
    const std::string xlabel = records.empty() || records.front().sweep_param.empty() ? "index" : records.front().sweep_param;
    os << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 15 << "\" font-size=\"13\" text-anchor=\"middle\">"
       << xml_escape(xlabel) << (log_axes ? " (log)" : "") << "</text>\n"
       << "<text x=\"18\" y=\"" << mt + ph / 2 << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
       << mt + ph / 2 << ")\">probability" << (log_axes ? " (log)" : "") << "</text>\n";

    int row = 0;
    for (const Series* s : present) {
        os << "<polyline fill=\"none\" stroke=\"" << s->colour << "\" stroke-width=\"1.5\" data-series=\"" << s->name
           << "\" points=\"";
        bool first = true;
        for (const auto& rec : records) {
            const double x = xval(rec);
            const double y = rec.result.*(s->field);
            if (!usable(y) || !usable(x)) continue;
            if (!first) os << ' ';
            os << num(px(tx(x))) << ',' << num(py(tx(y)));
            first = false;
        }
        os << "\"/>\n";
        const double ly = mt + 15 + 20 * row++;
        os << "<line x1=\"" << ml + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 40 << "\" y2=\"" << ly
           << "\" stroke=\"" << s->colour << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << ml + pw + 45 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << s->name << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path + "' failed");
}

std::vector<std::string> emit(const std::vector<ResultRecord>& records, const OutputSpec& output, bool log_axes) {
    std::error_code ec;
    std::filesystem::create_directories(output.directory, ec);
    if (ec) throw IoError("cannot create output directory '" + output.directory + "': " + ec.message());
    std::vector<std::string> written;
    for (const auto& f : output.formats) {
        const std::string path = (std::filesystem::path(output.directory) / ("results." + f)).string();
        if (f == "csv") write_text_file(path, csv_text(records));
        else if (f == "json") write_text_file(path, records_json(records).dump(2) + "\n");
        else if (f == "svg") write_text_file(path, svg_text(records, log_axes));
        else throw IoError("unknown output format '" + f + "'");
        written.push_back(path);
    }
    return written;
}

}  // namespace axionsim
