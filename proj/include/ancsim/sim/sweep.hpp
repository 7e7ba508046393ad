#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "ancsim/plant/spatial.hpp"
#include "ancsim/sim/run.hpp"
#include "ancsim/sim/scenario.hpp"

namespace ancsim {

struct SweepPoint {
    std::optional<double> mu;
    std::optional<std::optional<double>> rho;  // inner nullopt = unconstrained
    std::optional<std::size_t> filter_len;
    std::optional<double> d_over_lambda;
};

struct SweepRow {
    std::size_t index = 0;
    SweepPoint point;
    std::string status = "ok";  // ok, fault, error
    std::string message;
    double band_mean_reduction_db = std::numeric_limits<double>::quiet_NaN();
    double residual_power = std::numeric_limits<double>::quiet_NaN();
    double output_power = std::numeric_limits<double>::quiet_NaN();
    std::optional<bool> compliant;
    double worst_harmonic_db = std::numeric_limits<double>::quiet_NaN();
    double spatial_simulated_db = std::numeric_limits<double>::quiet_NaN();
    double spatial_analytic_db = std::numeric_limits<double>::quiet_NaN();
};

/// Grid file:
///   {"scenario": <path relative to the grid file, or an inline scenario object>,
///    "grid": {"mu": [...], "rho": [... or null], "filter_len": [...], "d_over_lambda": [...]},
///    "threads": 0}
/// The sweep is the Cartesian product of the listed axes. Scenario axes apply to
/// every unit; d_over_lambda rows get the spatial simulation and its analytic
/// counterpart. A scenario is required only when a scenario axis is present.
struct SweepSpec {
    std::optional<nlohmann::json> scenario;
    std::vector<double> mu;
    std::vector<std::optional<double>> rho;
    std::vector<std::size_t> filter_len;
    std::vector<double> d_over_lambda;
    unsigned threads = 0;

    std::vector<SweepPoint> points() const {
        std::vector<SweepPoint> out{SweepPoint{}};
        auto expand = [&out](std::size_t n, auto&& set) {
            if (n == 0) return;
            std::vector<SweepPoint> next;
            for (const auto& p : out) {
                for (std::size_t i = 0; i < n; ++i) {
                    auto q = p;
                    set(q, i);
                    next.push_back(q);
                }
            }
            out = std::move(next);
        };
        expand(mu.size(), [&](SweepPoint& p, std::size_t i) { p.mu = mu[i]; });
        expand(rho.size(), [&](SweepPoint& p, std::size_t i) { p.rho = rho[i]; });
        expand(filter_len.size(), [&](SweepPoint& p, std::size_t i) { p.filter_len = filter_len[i]; });
        expand(d_over_lambda.size(), [&](SweepPoint& p, std::size_t i) { p.d_over_lambda = d_over_lambda[i]; });
        return out;
    }
};

inline SweepSpec sweep_spec_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {}) {
    if (!j.is_object()) throw ConfigError("sweep: grid file must be a JSON object");
    for (const auto& [k, v] : j.items()) {
        if (k != "scenario" && k != "grid" && k != "threads") throw ConfigError("sweep: unknown key /" + k);
    }
    SweepSpec s;
    if (j.contains("scenario")) {
        const auto& sc = j.at("scenario");
        if (sc.is_string()) {
            const auto text = read_file((base_dir / sc.get<std::string>()).string());
            try {
                s.scenario = nlohmann::json::parse(text);
            } catch (const nlohmann::json::parse_error& e) {
                throw ConfigError(std::string("sweep: scenario is not valid JSON: ") + e.what());
            }
        } else if (sc.is_object()) {
            s.scenario = sc;
        } else {
            throw ConfigError("sweep: /scenario must be a path or an object");
        }
    }
    if (!j.contains("grid") || !j.at("grid").is_object()) throw ConfigError("sweep: /grid object is required");
    try {
        for (const auto& [k, v] : j.at("grid").items()) {
            if (!v.is_array() || v.empty()) throw ConfigError("sweep: /grid/" + k + " must be a non-empty array");
            if (k == "mu") {
                s.mu = v.get<std::vector<double>>();
            } else if (k == "rho") {
                for (const auto& r : v) s.rho.push_back(r.is_null() ? std::nullopt : std::optional<double>(r.get<double>()));
            } else if (k == "filter_len") {
                s.filter_len = v.get<std::vector<std::size_t>>();
            } else if (k == "d_over_lambda") {
                s.d_over_lambda = v.get<std::vector<double>>();
            } else {
                throw ConfigError("sweep: unknown grid axis /grid/" + k);
            }
        }
        s.threads = j.value("threads", 0u);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("sweep: ") + e.what());
    }
    const bool scenario_axis = !s.mu.empty() || !s.rho.empty() || !s.filter_len.empty();
    if (scenario_axis && !s.scenario) throw ConfigError("sweep: mu/rho/filter_len axes need a scenario");
    if (!scenario_axis && s.d_over_lambda.empty()) throw ConfigError("sweep: grid has no axes");
    return s;
}

inline SweepRow run_sweep_point(const SweepSpec& spec, std::size_t index, const SweepPoint& p) {
    SweepRow row;
    row.index = index;
    row.point = p;
    try {
        if (p.d_over_lambda) {
            row.spatial_analytic_db = global_power_reduction(*p.d_over_lambda);
            row.spatial_simulated_db = simulate_global_power_reduction(*p.d_over_lambda).reduction_db;
        }
        if (spec.scenario && (p.mu || p.rho || p.filter_len || spec.d_over_lambda.empty())) {
            auto cfg = *spec.scenario;
            for (auto& u : cfg.at("units")) {
                if (p.mu) u["mu"] = *p.mu;
                if (p.rho) u["rho"] = *p.rho ? nlohmann::json(**p.rho) : nlohmann::json(nullptr);
                if (p.filter_len) u["filter_len"] = *p.filter_len;
            }
            const Scenario sc = scenario_from_json(cfg);
            const auto res = simulate(sc);
            if (res.faulted) {
                row.status = "fault";
                row.message = res.faults.empty() ? "" : res.faults.front().dump();
            }
            if (!res.units.empty()) {
                double off = 0.0, on = 0.0, e2 = 0.0, y2 = 0.0;
                bool compliant = true, constrained = false;
                double worst = -std::numeric_limits<double>::infinity();
                const auto start = static_cast<std::size_t>(std::llround(sc.metrics.analysis_start_s * sc.sample_rate));
                for (std::size_t u = 0; u < res.units.size(); ++u) {
                    const auto& b = res.units[u].bands;
                    const double r = b.mean_reduction(sc.metrics.band_lo, sc.metrics.band_hi);
                    off += 1.0;
                    on += std::pow(10.0, -r / 10.0);
                    e2 += detail::mean_square(detail::tail(res.recording.error[u], start));
                    y2 += res.units[u].output_power;
                    const double rho = sc.units[u].controller.rho;
                    if (std::isfinite(rho)) {
                        constrained = true;
                        compliant = compliant && res.units[u].output_power <= rho * rho * 1.1;
                    }
                    if (!res.units[u].harmonics.empty()) worst = std::max(worst, worst_harmonic_db(res.units[u].harmonics));
                }
                const double n = static_cast<double>(res.units.size());
                row.band_mean_reduction_db = 10.0 * std::log10(off / on);
                row.residual_power = e2 / n;
                row.output_power = y2 / n;
                if (constrained) row.compliant = compliant;
                row.worst_harmonic_db = worst;
            }
        }
    } catch (const std::exception& e) {
        row.status = "error";
        row.message = e.what();
    }
    return row;
}

/// Runs every point, in parallel across points. Rows come back in grid order.
inline std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
    const auto pts = spec.points();
    std::vector<SweepRow> rows(pts.size());
    unsigned n = spec.threads ? spec.threads : std::max(1u, std::thread::hardware_concurrency());
    n = std::min<unsigned>(n, static_cast<unsigned>(pts.size()));
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < pts.size();) rows[i] = run_sweep_point(spec, i, pts[i]);
        });
    }
    pool.clear();
    return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
    auto num = [&os](double v) {
        if (std::isfinite(v)) os << v;
    };
    auto csv_text = [](std::string s) {
        std::replace(s.begin(), s.end(), '\n', ' ');
        std::string q = "\"";
        for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    os << std::setprecision(10);
    os << "point,mu,rho,filter_len,d_over_lambda,status,band_mean_reduction_db,residual_power,output_power,"
          "constraint_compliant,worst_harmonic_db,spatial_simulated_db,spatial_analytic_db,message\n";
    for (const auto& r : rows) {
        os << r.index << ',';
        if (r.point.mu) os << *r.point.mu;
        os << ',';
        if (r.point.rho) {
            if (*r.point.rho) os << **r.point.rho;
            else os << "inf";
        }
        os << ',';
        if (r.point.filter_len) os << *r.point.filter_len;
        os << ',';
        if (r.point.d_over_lambda) os << *r.point.d_over_lambda;
        os << ',' << r.status << ',';
        num(r.band_mean_reduction_db);
        os << ',';
        num(r.residual_power);
        os << ',';
        num(r.output_power);
        os << ',';
        if (r.compliant) os << (*r.compliant ? 1 : 0);
        os << ',';
        num(r.worst_harmonic_db);
        os << ',';
        num(r.spatial_simulated_db);
        os << ',';
        num(r.spatial_analytic_db);
        os << ',' << csv_text(r.message) << '\n';
    }
}

} // namespace ancsim
