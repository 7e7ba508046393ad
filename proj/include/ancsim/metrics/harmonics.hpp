#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/metrics/spectrum.hpp"

namespace ancsim {

struct HarmonicLevel {
    int order = 0;       // k, 2 .. k_max
    double freq_hz = 0;  // k * f0
    double ratio_db = 0; // harmonic power re fundamental power
    bool skipped = false;  // at or above Nyquist
};

/// Power in the +-1 bin neighbourhood of the bin nearest f.
inline double tone_power(const SpectrumEstimate& s, double f) {
    const std::size_t c = s.bin_of(f);
    double acc = 0.0;
    for (std::size_t k = (c == 0 ? 0 : c - 1); k <= c + 1 && k < s.psd.size(); ++k) acc += s.psd[k] * s.df;
    return acc;
}

inline std::vector<HarmonicLevel> harmonic_ratio(const SpectrumEstimate& s, double f0, int k_max) {
    if (!(f0 > 0.0)) throw ConfigError("harmonic_ratio: fundamental must be > 0");
    if (f0 < 2.0 * s.df) throw ConfigError("harmonic_ratio: fundamental not resolvable at this PSD resolution");
    const double p0 = tone_power(s, f0);
    std::vector<HarmonicLevel> out;
    for (int k = 2; k <= k_max; ++k) {
        HarmonicLevel h;
        h.order = k;
        h.freq_hz = k * f0;
        if (h.freq_hz >= s.sample_rate / 2.0) {
            h.skipped = true;
        } else {
            h.ratio_db = 10.0 * std::log10(std::max(tone_power(s, h.freq_hz), 1e-300) / std::max(p0, 1e-300));
        }
        out.push_back(h);
    }
    return out;
}

inline std::vector<HarmonicLevel> harmonic_ratio(std::span<const double> x, int sample_rate, double f0, int k_max,
                                                 std::size_t segment_len = kDefaultSegmentLen) {
    return harmonic_ratio(welch_psd(x, sample_rate, segment_len), f0, k_max);
}

/// Highest harmonic ratio among the non-skipped orders (-inf if none).
inline double worst_harmonic_db(const std::vector<HarmonicLevel>& hs) {
    double worst = -INFINITY;
    for (const auto& h : hs) {
        if (!h.skipped && h.ratio_db > worst) worst = h.ratio_db;
    }
    return worst;
}

} // namespace ancsim
