#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "axionsim/runner.hpp"

namespace axionsim {

std::vector<double> sweep_values(const SweepSpec& s) {
    if (s.points < 2) throw ConfigError("sweep: points must be >= 2");
    std::vector<double> v(static_cast<std::size_t>(s.points));
    for (int i = 0; i < s.points; ++i) {
        const double u = double(i) / double(s.points - 1);
        v[static_cast<std::size_t>(i)] =
            s.log_scale ? std::exp(std::log(s.from) + u * (std::log(s.to) - std::log(s.from))) : s.from + u * (s.to - s.from);
    }
    // exact endpoints
    v.front() = s.from;
    v.back() = s.to;
    return v;
}

namespace {

ResultRecord evaluate_point(const RunConfig& base, std::size_t index, const std::string& param,
                            std::optional<double> value) {
    ResultRecord rec;
    rec.index = index;
    rec.sweep_param = param;
    rec.sweep_value = value;
    rec.config = base;
    rec.config.sweep.reset();
    try {
        if (value) set_parameter(rec.config, param, *value);
        rec.result = evaluate(make_scenario(rec.config));
    } catch (const std::exception& e) {
        rec.error = e.what();
        rec.result = ScenarioResult{};
        rec.result.kind = base.kind;
        rec.result.p_exact = std::nan("");
        rec.result.p_leading = std::nan("");
        rec.result.p_classical = std::nan("");
        rec.result.enhancement = std::nan("");
        rec.result.leakage = std::nan("");
        rec.result.flagged = true;
        rec.result.flag_reason = e.what();
    }
    return rec;
}

}  // namespace

std::vector<ResultRecord> run(const RunConfig& config, unsigned threads) {
    std::vector<std::optional<double>> points;
    std::string param;
    if (config.sweep) {
        param = config.sweep->parameter;
        for (double v : sweep_values(*config.sweep)) points.emplace_back(v);
    } else {
        points.emplace_back(std::nullopt);
    }
    std::vector<ResultRecord> out(points.size());
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(std::min<std::size_t>(threads, points.size()));

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            out[i] = evaluate_point(config, i, param, points[i]);
        }
    };
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

bool any_flagged(const std::vector<ResultRecord>& records) {
    return std::any_of(records.begin(), records.end(), [](const ResultRecord& r) { return r.result.flagged; });
}

}  // namespace axionsim
