#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "ancsim/errors.hpp"

namespace ancsim {

/// Second-order IIR section, transposed direct form II.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;
    double z1 = 0, z2 = 0;

    double process(double x) noexcept {
        const double y = b0 * x + z1;
        z1 = b1 * x - a1 * y + z2;
        z2 = b2 * x - a2 * y;
        return y;
    }

    std::complex<double> response(double omega) const {
        const auto z1c = std::polar(1.0, -omega);
        const auto z2c = z1c * z1c;
        return (b0 + b1 * z1c + b2 * z2c) / (1.0 + a1 * z1c + a2 * z2c);
    }

    void reset() noexcept { z1 = z2 = 0; }
};

/// C-weighting from the standard analog poles (double pole at 20.6 Hz, double
/// pole at 12194 Hz, double zero at DC), bilinear-transformed at fs and scaled
/// to 0 dB at 1 kHz. Upper-pole warping at low fs only matters well above 200 Hz.
class CWeighting {
public:
    static constexpr double kLowPoleHz = 20.598997;
    static constexpr double kHighPoleHz = 12194.217;

    explicit CWeighting(int sample_rate) : fs_(sample_rate) {
        if (fs_ <= 0) throw ConfigError("C-weighting: sample rate must be positive");
        const double T2 = 2.0 * fs_;
        const double p1 = (T2 - 2.0 * std::numbers::pi * kLowPoleHz) / (T2 + 2.0 * std::numbers::pi * kLowPoleHz);
        const double p4 = (T2 - 2.0 * std::numbers::pi * kHighPoleHz) / (T2 + 2.0 * std::numbers::pi * kHighPoleHz);
        // Section 1: double zero at z = 1, double pole at p1 (high-pass part).
        sec_[0] = {1.0, -2.0, 1.0, -2.0 * p1, p1 * p1};
        // Section 2: double zero at z = -1, double pole at p4 (low-pass part).
        sec_[1] = {1.0, 2.0, 1.0, -2.0 * p4, p4 * p4};
        const double g = std::abs(raw_response(1000.0));
        sec_[0].b0 /= g;
        sec_[0].b1 /= g;
        sec_[0].b2 /= g;
    }

    int sample_rate() const noexcept { return fs_; }

    double process(double x) noexcept { return sec_[1].process(sec_[0].process(x)); }

    std::vector<double> apply(std::span<const double> xs) {
        std::vector<double> out(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i) out[i] = process(xs[i]);
        return out;
    }

    /// Magnitude response in dB at frequency f.
    double gain_db(double f) const { return 20.0 * std::log10(std::abs(raw_response(f))); }

    void reset() noexcept {
        for (auto& s : sec_) s.reset();
    }

private:
    std::complex<double> raw_response(double f) const {
        const double w = 2.0 * std::numbers::pi * f / fs_;
        return sec_[0].response(w) * sec_[1].response(w);
    }

    int fs_;
    std::array<Biquad, 2> sec_;
};

} // namespace ancsim
