#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ancsim/remote/envelope.hpp"

namespace ancsim {

inline constexpr double kDefaultTelemetryHz = 10.0;

/// Immutable per-unit snapshot published at a fixed cadence.
struct TelemetryFrame {
    unsigned unit = 0;
    double t = 0.0;  // simulated seconds since scenario start
    std::string mode = "Idle";
    double alpha = 0.0;
    double output_power = 0.0;  // mean y^2 over the last controller frame
    double spl_error_dbc = 0.0;
    std::vector<double> spl_monitor_dbc;
    double reduction_db = 0.0;
    bool converged = false;
    bool calibrated = false;
    double rho = 0.0;  // current constraint (0 when unconstrained)
    double mu = 0.0;

    friend bool operator==(const TelemetryFrame&, const TelemetryFrame&) = default;

    bool all_finite() const {
        if (!std::isfinite(t) || !std::isfinite(alpha) || !std::isfinite(output_power) ||
            !std::isfinite(spl_error_dbc) || !std::isfinite(reduction_db) || !std::isfinite(rho) ||
            !std::isfinite(mu)) {
            return false;
        }
        for (double v : spl_monitor_dbc) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }
};

inline void to_json(json& j, const TelemetryFrame& f) {
    j = json{{"unit", f.unit},
             {"t", f.t},
             {"mode", f.mode},
             {"alpha", f.alpha},
             {"output_power", f.output_power},
             {"spl_error_dbc", f.spl_error_dbc},
             {"spl_monitor_dbc", f.spl_monitor_dbc},
             {"reduction_db", f.reduction_db},
             {"converged", f.converged},
             {"calibrated", f.calibrated},
             {"rho", f.rho},
             {"mu", f.mu}};
}

inline void from_json(const json& j, TelemetryFrame& f) {
    f.unit = j.at("unit").get<unsigned>();
    f.t = j.at("t").get<double>();
    f.mode = j.at("mode").get<std::string>();
    f.alpha = j.at("alpha").get<double>();
    f.output_power = j.at("output_power").get<double>();
    f.spl_error_dbc = j.at("spl_error_dbc").get<double>();
    f.spl_monitor_dbc = j.at("spl_monitor_dbc").get<std::vector<double>>();
    f.reduction_db = j.at("reduction_db").get<double>();
    f.converged = j.at("converged").get<bool>();
    f.calibrated = j.value("calibrated", false);
    f.rho = j.value("rho", 0.0);
    f.mu = j.value("mu", 0.0);
}

inline Envelope telemetry_envelope(const TelemetryFrame& f, std::uint64_t seq) {
    return Envelope{unit_topic(f.unit, "telemetry"), seq, json(f)};
}

} // namespace ancsim
