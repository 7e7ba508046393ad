#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "ancsim/errors.hpp"
#include "ancsim/plant/topology.hpp"
#include "ancsim/sim/engine.hpp"
#include "ancsim/sim/json_schema.hpp"
#include "ancsim/sim/scenario_schema.hpp"

namespace ancsim {

/// Raised when a scenario fails validation. Carries one issue per problem.
class ScenarioError : public ConfigError {
public:
    explicit ScenarioError(std::vector<SchemaIssue> issues)
        : ConfigError(summarize(issues)), issues_(std::move(issues)) {}
    const std::vector<SchemaIssue>& issues() const noexcept { return issues_; }

private:
    static std::string summarize(const std::vector<SchemaIssue>& v) {
        std::string s = "scenario invalid:";
        for (const auto& i : v) s += "\n  " + (i.pointer.empty() ? std::string("/") : i.pointer) + ": " + i.message;
        return s;
    }
    std::vector<SchemaIssue> issues_;
};

struct HarmonicsRequest {
    double fundamental_hz = 0.0;
    int k_max = 5;
};

struct MetricsRequest {
    double analysis_start_s = 0.0;  // metrics ignore everything before this time
    std::size_t segment_len = 4096;
    std::optional<HarmonicsRequest> harmonics;
    double band_lo = 31.5;  // nominal third-octave labels
    double band_hi = 125.0;
    bool write_signals = true;
};

struct Scenario {
    std::string name;
    std::string description;
    int sample_rate = kDefaultSampleRate;
    double duration_s = 0.0;
    double preroll_s = 1.0;  // sources play with every unit idle before control starts
    std::uint64_t seed = 0;
    double telemetry_hz = kDefaultTelemetryHz;
    PlantTopology topology;
    std::vector<UnitSetup> units;
    MetricsRequest metrics;
    nlohmann::json config;

    std::uint64_t samples() const { return static_cast<std::uint64_t>(std::llround(duration_s * sample_rate)); }
    std::uint64_t preroll_samples() const { return static_cast<std::uint64_t>(std::llround(preroll_s * sample_rate)); }
};

/// 64-bit FNV-1a, rendered as 16 lowercase hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline const SchemaValidator& scenario_validator() {
    static const SchemaValidator v(nlohmann::json::parse(kScenarioSchema));
    return v;
}

namespace detail {

inline Vec3 vec3(const nlohmann::json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

inline SignalParams signal_from_json(const nlohmann::json& j, std::uint64_t default_seed) {
    SignalParams p;
    p.kind = signal_kind_from_string(j.at("kind").get<std::string>());
    p.frequencies = j.value("frequencies", std::vector<double>{});
    p.amplitudes = j.value("amplitudes", std::vector<double>{});
    p.noise_amplitude = j.value("noise_amplitude", 0.0);
    p.seed = j.value("seed", default_seed);
    p.harmonic2_db = j.value("harmonic2_db", p.harmonic2_db);
    p.harmonic3_db = j.value("harmonic3_db", p.harmonic3_db);
    p.floor_db = j.value("floor_db", p.floor_db);
    return p;
}

inline PathModel path_from_json(const nlohmann::json& j) {
    PathModel p;
    p.delay = j.value("delay", std::size_t{0});
    p.gain = j.value("gain", 1.0);
    p.fir = j.value("fir", std::vector<double>{1.0});
    return p;
}

inline std::vector<std::vector<PathModel>> matrix_from_json(const nlohmann::json& j) {
    std::vector<std::vector<PathModel>> m;
    for (const auto& row : j) {
        auto& r = m.emplace_back();
        for (const auto& p : row) r.push_back(path_from_json(p));
    }
    return m;
}

} // namespace detail

/// Validates a parsed config against the schema, then builds the scenario.
/// Cross-field problems are reported the same way as schema violations.
inline Scenario scenario_from_json(const nlohmann::json& j) {
    auto issues = scenario_validator().validate(j);
    if (!issues.empty()) throw ScenarioError(std::move(issues));

    Scenario s;
    s.config = j;
    s.name = j.at("name").get<std::string>();
    s.description = j.value("description", std::string{});
    s.sample_rate = j.value("sample_rate", kDefaultSampleRate);
    s.duration_s = j.at("duration_s").get<double>();
    s.preroll_s = j.value("preroll_s", 1.0);
    s.seed = j.value("seed", std::uint64_t{0});
    s.telemetry_hz = j.value("telemetry_hz", kDefaultTelemetryHz);

    const auto& pj = j.at("plant");
    auto& t = s.topology;
    t.sample_rate = s.sample_rate;
    t.free_field.speed_of_sound = pj.value("speed_of_sound", kSpeedOfSound);
    t.free_field.r_min = pj.value("min_distance", kMinDistance);
    const auto& srcs = pj.at("sources");
    for (std::size_t i = 0; i < srcs.size(); ++i) {
        NoiseSource src;
        src.signal = detail::signal_from_json(srcs[i].at("signal"), counter_hash(s.seed, i));
        if (srcs[i].contains("position")) src.position = detail::vec3(srcs[i].at("position"));
        t.sources.push_back(std::move(src));
    }
    for (const auto& u : pj.at("units")) {
        UnitSite site;
        if (u.contains("speaker")) site.speaker = detail::vec3(u.at("speaker"));
        if (u.contains("error_mic")) site.error_mic = detail::vec3(u.at("error_mic"));
        if (u.contains("saturation")) {
            site.saturation.kind = saturation_kind_from_string(u.at("saturation").at("kind").get<std::string>());
            site.saturation.limit = u.at("saturation").value("limit", 1.0);
        }
        t.units.push_back(site);
    }
    for (const auto& m : pj.value("monitor_mics", nlohmann::json::array())) t.monitor_mics.push_back(detail::vec3(m));
    if (pj.contains("paths")) {
        t.paths = ExplicitPaths{detail::matrix_from_json(pj.at("paths").at("source_to_mic")),
                                detail::matrix_from_json(pj.at("paths").at("unit_to_mic"))};
    }

    const auto& uj = j.at("units");
    if (uj.size() != t.units.size()) {
        issues.push_back({"/units", "has " + std::to_string(uj.size()) + " entries but /plant/units has " +
                                        std::to_string(t.units.size())});
    }
    for (std::size_t u = 0; u < uj.size(); ++u) {
        const auto& c = uj[u];
        const std::string ptr = "/units/" + std::to_string(u);
        UnitSetup us;
        auto& p = us.controller;
        p.algorithm = algorithm_from_string(c.value("algorithm", std::string("mov-fxlms")));
        p.mode = control_mode_from_string(c.value("mode", std::string("feedback")));
        p.mu = c.value("mu", p.mu);
        if (c.contains("rho") && !c.at("rho").is_null()) p.rho = c.at("rho").get<double>();
        p.filter_len = c.value("filter_len", p.filter_len);
        p.frame_len = c.value("frame_len", p.frame_len);
        p.normalized = c.value("normalized", p.normalized);
        p.fault_ratio = c.value("fault_ratio", p.fault_ratio);
        if (c.contains("reference_source")) {
            us.reference_source = c.at("reference_source").get<std::size_t>();
            if (*us.reference_source >= t.sources.size()) issues.push_back({ptr + "/reference_source", "no such source"});
        }
        if (p.mode == ControlMode::Feedforward && !us.reference_source) {
            issues.push_back({ptr + "/reference_source", "required for feedforward mode"});
        }
        us.start_running = c.value("start", true);
        const auto sp = c.value("secondary_path", nlohmann::json::object());
        us.secondary_path.method = sp.value("method", std::string("calibrate")) == "oracle"
                                       ? SecondaryPathSetup::Method::Oracle
                                       : SecondaryPathSetup::Method::Calibrate;
        us.secondary_path.seconds = sp.value("seconds", us.secondary_path.seconds);
        us.secondary_path.model_order = sp.value("model_order", us.secondary_path.model_order);
        us.secondary_path.step = sp.value("step", us.secondary_path.step);
        us.secondary_path.amplitude = sp.value("amplitude", us.secondary_path.amplitude);
        us.secondary_path.seed = counter_hash(s.seed ^ 0xCA1B, u);
        try {
            p.validate();
        } catch (const ConfigError& e) {
            issues.push_back({ptr, e.what()});
        }
        s.units.push_back(us);
    }

    const auto mj = j.value("metrics", nlohmann::json::object());
    auto& m = s.metrics;
    m.analysis_start_s = mj.value("analysis_start_s", 0.0);
    m.segment_len = mj.value("segment_len", m.segment_len);
    m.write_signals = mj.value("write_signals", true);
    if (mj.contains("harmonics")) {
        m.harmonics = HarmonicsRequest{mj.at("harmonics").at("fundamental_hz").get<double>(),
                                       mj.at("harmonics").value("k_max", 5)};
    }
    if (mj.contains("third_octave")) {
        m.band_lo = mj.at("third_octave").value("lo", m.band_lo);
        m.band_hi = mj.at("third_octave").value("hi", m.band_hi);
    }
    if (m.analysis_start_s >= s.duration_s) {
        issues.push_back({"/metrics/analysis_start_s", "must be earlier than duration_s"});
    }
    if (m.segment_len & (m.segment_len - 1)) {
        issues.push_back({"/metrics/segment_len", "must be a power of two"});
    }
    if (m.band_lo > m.band_hi) issues.push_back({"/metrics/third_octave", "lo must not exceed hi"});
    if (!issues.empty()) throw ScenarioError(std::move(issues));

    // Topology problems the schema cannot express (missing positions, path
    // matrix shapes, aliasing) surface when the plant is built.
    try {
        Plant probe(t);
        for (const auto& src : t.sources) SignalGen(src.signal, t.sample_rate);
    } catch (const ConfigError& e) {
        throw ScenarioError(std::vector<SchemaIssue>{{"/plant", e.what()}});
    }
    return s;
}

inline Scenario scenario_from_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ScenarioError(std::vector<SchemaIssue>{{"", std::string("not valid JSON: ") + e.what()}});
    }
    return scenario_from_json(j);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace ancsim
