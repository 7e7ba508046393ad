#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/metrics/spectrum.hpp"
#include "ancsim/metrics/spl.hpp"

namespace ancsim {

struct ThirdOctaveBand {
    double nominal_hz;
    double center_hz;  // exact base-2 centre, 1000 * 2^(n/3)
    double lower_hz;
    double upper_hz;
};

/// Nominal centres 31.5 .. 200 Hz with edges at centre * 2^(+-1/6).
inline std::vector<ThirdOctaveBand> low_frequency_bands() {
    static constexpr std::array<double, 9> kNominal{31.5, 40, 50, 63, 80, 100, 125, 160, 200};
    std::vector<ThirdOctaveBand> out;
    for (std::size_t i = 0; i < kNominal.size(); ++i) {
        const int n = static_cast<int>(i) - 15;  // 1000 * 2^(-15/3) = 31.25 Hz
        const double fc = 1000.0 * std::pow(2.0, n / 3.0);
        out.push_back({kNominal[i], fc, fc * std::pow(2.0, -1.0 / 6.0), fc * std::pow(2.0, 1.0 / 6.0)});
    }
    return out;
}

struct ThirdOctaveReport {
    std::vector<ThirdOctaveBand> bands;
    std::vector<double> band_spl_off;  // dB SPL
    std::vector<double> band_spl_on;
    std::vector<double> reduction;  // off - on, dB
    std::vector<bool> valid;        // false when the band is narrower than one PSD bin

    /// Energy-averaged reduction over valid bands with nominal centre in [lo, hi]:
    /// 10 log10(sum P_off / sum P_on).
    double mean_reduction(double lo_nominal = 31.5, double hi_nominal = 125.0) const {
        double off = 0.0, on = 0.0;
        for (std::size_t i = 0; i < bands.size(); ++i) {
            if (!valid[i] || bands[i].nominal_hz < lo_nominal || bands[i].nominal_hz > hi_nominal) continue;
            off += std::pow(10.0, (band_spl_off[i] - kCalibrationDb) / 10.0);
            on += std::pow(10.0, (band_spl_on[i] - kCalibrationDb) / 10.0);
        }
        if (!(on > 0.0) || !(off > 0.0)) return std::numeric_limits<double>::quiet_NaN();
        return 10.0 * std::log10(off / on);
    }

    /// Plain arithmetic mean of the per-band dB reductions over the same range.
    double arithmetic_mean_reduction(double lo_nominal = 31.5, double hi_nominal = 125.0) const {
        double acc = 0.0;
        int n = 0;
        for (std::size_t i = 0; i < bands.size(); ++i) {
            if (!valid[i] || bands[i].nominal_hz < lo_nominal || bands[i].nominal_hz > hi_nominal) continue;
            acc += reduction[i];
            ++n;
        }
        return n ? acc / n : std::numeric_limits<double>::quiet_NaN();
    }

    double reduction_at(double nominal_hz) const {
        for (std::size_t i = 0; i < bands.size(); ++i) {
            if (bands[i].nominal_hz == nominal_hz) return reduction[i];
        }
        throw ConfigError("no third-octave band with nominal centre " + std::to_string(nominal_hz));
    }
};

inline double band_level_db(const SpectrumEstimate& s, const ThirdOctaveBand& b) {
    const double p = s.band_power(b.lower_hz, b.upper_hz);
    return p > 0.0 ? 10.0 * std::log10(p) + kCalibrationDb : kSplFloorDb;
}

inline ThirdOctaveReport third_octave_reduction(const SpectrumEstimate& off, const SpectrumEstimate& on) {
    if (off.sample_rate != on.sample_rate || off.segment_len != on.segment_len) {
        throw ConfigError("third_octave_reduction: spectra have different resolution");
    }
    ThirdOctaveReport r;
    r.bands = low_frequency_bands();
    for (const auto& b : r.bands) {
        const bool ok = (b.upper_hz - b.lower_hz) >= off.df && b.upper_hz <= off.sample_rate / 2.0;
        const double lo = band_level_db(off, b);
        const double hi = band_level_db(on, b);
        r.valid.push_back(ok);
        r.band_spl_off.push_back(lo);
        r.band_spl_on.push_back(hi);
        r.reduction.push_back(lo - hi);
    }
    return r;
}

inline ThirdOctaveReport third_octave_reduction(std::span<const double> off, std::span<const double> on, int sample_rate,
                                                std::size_t segment_len = kDefaultSegmentLen, double overlap = 0.5) {
    if (off.size() != on.size()) throw ConfigError("third_octave_reduction: streams differ in length");
    return third_octave_reduction(welch_psd(off, sample_rate, segment_len, overlap),
                                  welch_psd(on, sample_rate, segment_len, overlap));
}

} // namespace ancsim
