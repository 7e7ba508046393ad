#pragma once

#include <cmath>
#include <span>
#include <string>

#include "ancsim/errors.hpp"
#include "ancsim/metrics/weighting.hpp"

namespace ancsim {

/// Digital RMS 1.0 corresponds to 1 Pa, i.e. 94 dB SPL.
inline constexpr double kCalibrationDb = 94.0;
inline constexpr double kSplFloorDb = -120.0;

struct SplReading {
    double db = kSplFloorDb;
    bool at_floor = false;  // silent input, value is the floor
};

inline double rms(std::span<const double> xs) {
    if (xs.empty()) return 0.0;
    double acc = 0.0;
    for (double x : xs) acc += x * x;
    return std::sqrt(acc / static_cast<double>(xs.size()));
}

inline SplReading level_from_rms(double r) {
    if (!(r > 0.0)) return {kSplFloorDb, true};
    const double db = 20.0 * std::log10(r) + kCalibrationDb;
    if (db < kSplFloorDb) return {kSplFloorDb, true};
    return {db, false};
}

/// C-weighted level of a stream of at least one second.
inline SplReading spl_dbc(std::span<const double> xs, int sample_rate) {
    if (sample_rate <= 0) throw ConfigError("spl_dbc: sample rate must be positive");
    if (xs.size() < static_cast<std::size_t>(sample_rate)) {
        throw PreconditionError("spl_dbc: need at least one second of samples (" + std::to_string(sample_rate) +
                                "), got " + std::to_string(xs.size()));
    }
    CWeighting c(sample_rate);
    return level_from_rms(rms(c.apply(xs)));
}

/// Broadband C-weighted reduction, spl_dbc(off) - spl_dbc(on).
inline double noise_reduction_db(std::span<const double> off, std::span<const double> on, int sample_rate) {
    return spl_dbc(off, sample_rate).db - spl_dbc(on, sample_rate).db;
}

} // namespace ancsim
