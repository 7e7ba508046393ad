#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ancsim/metrics/harmonics.hpp"
#include "ancsim/metrics/spl.hpp"
#include "ancsim/metrics/third_octave.hpp"
#include "ancsim/remote/replay.hpp"
#include "ancsim/remote/telemetry.hpp"
#include "ancsim/signal/audio_io.hpp"
#include "ancsim/sim/engine.hpp"
#include "ancsim/sim/scenario.hpp"

namespace ancsim {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitFault = 3, kExitPortInUse = 4 };

struct UnitMetrics {
    ThirdOctaveReport bands;
    std::vector<HarmonicLevel> harmonics;
    double output_power = 0.0;  // mean y^2 over the analysis window
    double alpha_mean = 0.0;
    double alpha_max = 0.0;
    double alpha_active = 0.0;  // fraction of samples with alpha > 0
    double reduction_dbc = 0.0;
};

struct SimulationResult {
    Recording recording;
    std::vector<Envelope> log;  // telemetry and events, in emission order
    std::size_t telemetry_frames = 0;
    std::vector<UnitMetrics> units;
    std::vector<ThirdOctaveReport> monitors;
    std::vector<std::optional<CalibrationResult>> calibrations;
    std::vector<std::string> warnings;
    bool faulted = false;
    nlohmann::json faults = nlohmann::json::array();
    nlohmann::json summary;
};

namespace detail {

inline std::span<const double> tail(const std::vector<double>& v, std::size_t from) {
    return std::span<const double>(v).subspan(std::min(from, v.size()));
}

inline double mean_square(std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return x.empty() ? 0.0 : acc / static_cast<double>(x.size());
}

inline nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

inline nlohmann::json bands_json(const ThirdOctaveReport& r, const MetricsRequest& m) {
    nlohmann::json bands = nlohmann::json::array();
    for (std::size_t i = 0; i < r.bands.size(); ++i) {
        bands.push_back({{"nominal_hz", r.bands[i].nominal_hz},
                         {"valid", static_cast<bool>(r.valid[i])},
                         {"reduction_db", finite_or_null(r.reduction[i])}});
    }
    return {{"band_mean_reduction_db", finite_or_null(r.mean_reduction(m.band_lo, m.band_hi))},
            {"band_arithmetic_mean_reduction_db", finite_or_null(r.arithmetic_mean_reduction(m.band_lo, m.band_hi))},
            {"bands", bands}};
}

} // namespace detail

/// Runs a scenario in memory: secondary-path preparation, idle pre-roll, then
/// the configured duration with every unit started. Metrics cover the samples
/// from metrics.analysis_start_s to the end.
inline SimulationResult simulate(const Scenario& s) {
    SimulationResult res;
    EngineOptions eo;
    eo.telemetry_hz = s.telemetry_hz;
    Engine eng(s.topology, s.units, eo);
    res.warnings = eng.plant().warnings();
    std::uint64_t seq = 0;
    auto log_events = [&] {
        for (auto& ev : eng.drain_events()) {
            nlohmann::json p = ev.detail;
            p["type"] = ev.type;
            p["t"] = eng.time();
            if (ev.type == "fault" || ev.type == "calibration-failed") {
                res.faulted = true;
                res.faults.push_back({{"unit", ev.unit}, {"type", ev.type}, {"t", eng.time()}, {"detail", ev.detail}});
            }
            res.log.push_back({unit_topic(ev.unit, "event"), ++seq, std::move(p)});
        }
    };

    eng.set_telemetry_enabled(false);
    try {
        eng.prepare_secondary_paths();
    } catch (const CalibrationFailed&) {
        // The event carries the reason.
    }
    log_events();
    res.calibrations.resize(eng.num_units());
    for (std::size_t u = 0; u < eng.num_units(); ++u) res.calibrations[u] = eng.last_calibration(u);

    if (!res.faulted) {
        eng.run_ticks(s.preroll_samples());
        eng.drain_events();
        eng.mark_origin();
        eng.start_recording();
        eng.set_telemetry_enabled(true);
        eng.start_configured_units();
        const std::uint64_t n = s.samples();
        const std::uint64_t chunk = eng.telemetry_period();
        for (std::uint64_t done = 0; done < n;) {
            const std::uint64_t k = std::min(chunk, n - done);
            eng.run_ticks(k);
            done += k;
            for (const auto& f : eng.drain_telemetry()) {
                res.log.push_back(telemetry_envelope(f, ++seq));
                ++res.telemetry_frames;
            }
            log_events();
        }
    }
    res.recording = eng.recording();

    const auto start = static_cast<std::size_t>(std::llround(s.metrics.analysis_start_s * s.sample_rate));
    const auto& rec = res.recording;
    const auto& m = s.metrics;
    const bool enough = !rec.error.empty() && rec.error[0].size() >= start + m.segment_len * 3 / 2 &&
                        rec.error[0].size() - start >= static_cast<std::size_t>(s.sample_rate);
    if (enough) {
        for (std::size_t u = 0; u < eng.num_units(); ++u) {
            UnitMetrics um;
            const auto e = detail::tail(rec.error[u], start);
            const auto d = detail::tail(rec.error_disturbance[u], start);
            um.bands = third_octave_reduction(d, e, s.sample_rate, m.segment_len);
            if (m.harmonics) um.harmonics = harmonic_ratio(e, s.sample_rate, m.harmonics->fundamental_hz, m.harmonics->k_max, m.segment_len);
            um.output_power = detail::mean_square(detail::tail(rec.output[u], start));
            const auto a = detail::tail(rec.alpha[u], start);
            std::size_t active = 0;
            for (double v : a) {
                um.alpha_mean += v;
                um.alpha_max = std::max(um.alpha_max, v);
                active += v > 0.0;
            }
            if (!a.empty()) {
                um.alpha_mean /= static_cast<double>(a.size());
                um.alpha_active = static_cast<double>(active) / static_cast<double>(a.size());
            }
            um.reduction_dbc = noise_reduction_db(d, e, s.sample_rate);
            res.units.push_back(std::move(um));
        }
        for (std::size_t k = 0; k < rec.monitor.size(); ++k) {
            res.monitors.push_back(third_octave_reduction(detail::tail(rec.monitor_disturbance[k], start),
                                                          detail::tail(rec.monitor[k], start), s.sample_rate,
                                                          m.segment_len));
        }
    }

    auto& sj = res.summary;
    sj["name"] = s.name;
    sj["sample_rate"] = s.sample_rate;
    sj["duration_s"] = s.duration_s;
    sj["seed"] = s.seed;
    sj["analysis_start_s"] = m.analysis_start_s;
    sj["band_range_hz"] = {m.band_lo, m.band_hi};
    sj["faulted"] = res.faulted;
    sj["faults"] = res.faults;
    sj["telemetry_frames"] = res.telemetry_frames;
    sj["warnings"] = res.warnings;
    sj["units"] = nlohmann::json::array();
    for (std::size_t u = 0; u < eng.num_units(); ++u) {
        const auto& p = s.units[u].controller;
        nlohmann::json uj{{"unit", u},
                          {"algorithm", std::string(to_string(p.algorithm))},
                          {"mode", std::string(to_string(p.mode))},
                          {"mu", p.mu},
                          {"rho", detail::finite_or_null(p.rho)},
                          {"final_state", std::string(to_string(eng.state(u).state()))}};
        if (const auto& c = res.calibrations[u]) {
            uj["calibration"] = {{"misalignment_db", detail::finite_or_null(c->misalignment_db)},
                                 {"training_samples", c->training_samples}};
        }
        if (u < res.units.size()) {
            const auto& um = res.units[u];
            uj["metrics"] = detail::bands_json(um.bands, m);
            uj["metrics"]["reduction_dbc"] = detail::finite_or_null(um.reduction_dbc);
            uj["output_power"] = um.output_power;
            uj["alpha"] = {{"mean", um.alpha_mean}, {"max", um.alpha_max}, {"active_fraction", um.alpha_active}};
            if (std::isfinite(p.rho)) {
                const double limit = p.rho * p.rho * 1.1;
                uj["constraint"] = {{"limit", limit}, {"compliant", um.output_power <= limit}};
            }
            if (m.harmonics) {
                nlohmann::json hs = nlohmann::json::array();
                for (const auto& h : um.harmonics) {
                    hs.push_back({{"order", h.order},
                                  {"freq_hz", h.freq_hz},
                                  {"skipped", h.skipped},
                                  {"ratio_db", h.skipped ? nlohmann::json(nullptr) : detail::finite_or_null(h.ratio_db)}});
                }
                uj["harmonics"] = {{"fundamental_hz", m.harmonics->fundamental_hz},
                                   {"worst_db", detail::finite_or_null(worst_harmonic_db(um.harmonics))},
                                   {"levels", hs}};
            }
        }
        sj["units"].push_back(std::move(uj));
    }
    sj["monitors"] = nlohmann::json::array();
    for (std::size_t k = 0; k < res.monitors.size(); ++k) {
        auto mj = detail::bands_json(res.monitors[k], m);
        mj["mic"] = k;
        sj["monitors"].push_back(std::move(mj));
    }
    return res;
}

struct RunOutcome {
    int exit_code = kExitOk;
    nlohmann::json summary;
};

/// Full `run`: validates, simulates and writes every artifact to out_dir.
/// config_text is the exact scenario file content; it is copied verbatim and
/// its hash embedded in the summary.
inline RunOutcome run_scenario(const std::string& config_text, const std::filesystem::path& out_dir) {
    namespace fs = std::filesystem;
    const Scenario s = scenario_from_text(config_text);
    auto res = simulate(s);

    fs::create_directories(out_dir);
    {
        std::ofstream(out_dir / "config.json", std::ios::binary) << config_text;
    }
    res.summary["config_hash"] = fnv1a_hex(config_text);
    res.summary["config_file"] = "config.json";

    {
        std::ofstream log(out_dir / "telemetry.ndjson", std::ios::binary);
        log << serialize_log(res.log);
    }

    if (s.metrics.write_signals) {
        const auto dir = out_dir / "signals";
        fs::create_directories(dir);
        const auto& r = res.recording;
        auto put = [&](const std::string& stem, const std::vector<double>& x) {
            write_raw_f32(dir / (stem + ".f32"), x);
            write_wav_f32(dir / (stem + ".wav"), x, s.sample_rate);
        };
        for (std::size_t u = 0; u < r.error.size(); ++u) {
            const auto id = std::to_string(u);
            put("unit" + id + "_error", r.error[u]);
            put("unit" + id + "_disturbance", r.error_disturbance[u]);
            put("unit" + id + "_output", r.output[u]);
        }
        for (std::size_t k = 0; k < r.monitor.size(); ++k) {
            const auto id = std::to_string(k);
            put("monitor" + id + "_on", r.monitor[k]);
            put("monitor" + id + "_off", r.monitor_disturbance[k]);
        }
    }

    {
        std::ofstream csv(out_dir / "third_octave.csv");
        csv << std::setprecision(10) << "mic,kind,nominal_hz,center_hz,valid,spl_off_db,spl_on_db,reduction_db\n";
        auto rows = [&](const std::string& mic, const char* kind, const ThirdOctaveReport& b) {
            for (std::size_t i = 0; i < b.bands.size(); ++i) {
                csv << mic << ',' << kind << ',' << b.bands[i].nominal_hz << ',' << b.bands[i].center_hz << ','
                    << (b.valid[i] ? 1 : 0) << ',' << b.band_spl_off[i] << ',' << b.band_spl_on[i] << ','
                    << b.reduction[i] << '\n';
            }
        };
        for (std::size_t u = 0; u < res.units.size(); ++u) rows(std::to_string(u), "error", res.units[u].bands);
        for (std::size_t k = 0; k < res.monitors.size(); ++k) rows(std::to_string(k), "monitor", res.monitors[k]);
    }
    if (s.metrics.harmonics) {
        std::ofstream csv(out_dir / "harmonics.csv");
        csv << std::setprecision(10) << "unit,order,freq_hz,skipped,ratio_db\n";
        for (std::size_t u = 0; u < res.units.size(); ++u) {
            for (const auto& h : res.units[u].harmonics) {
                csv << u << ',' << h.order << ',' << h.freq_hz << ',' << (h.skipped ? 1 : 0) << ',';
                if (!h.skipped) csv << h.ratio_db;
                csv << '\n';
            }
        }
    }

    RunOutcome out;
    out.exit_code = res.faulted ? kExitFault : kExitOk;
    res.summary["exit_code"] = out.exit_code;
    if (res.faulted) {
        std::ofstream(out_dir / "fault.json") << nlohmann::json{{"faults", res.faults}}.dump(2) << '\n';
    }
    std::ofstream(out_dir / "summary.json") << res.summary.dump(2) << '\n';
    out.summary = std::move(res.summary);
    return out;
}

} // namespace ancsim
