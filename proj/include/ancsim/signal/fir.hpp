#pragma once

#include <span>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/signal/frame.hpp"
#include "ancsim/signal/tap_line.hpp"

namespace ancsim {

/// Streaming FIR filter. History carries across calls, so filtering a signal
/// frame by frame gives the same result as one-shot convolution.
class FirFilter {
public:
    FirFilter() : FirFilter(std::vector<double>{1.0}) {}

    explicit FirFilter(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) throw ConfigError("FirFilter: needs at least one tap");
        require_finite(coeffs_, "FirFilter coefficients");
        taps_ = TapLine(coeffs_.size());
    }

    static FirFilter zeros(std::size_t n) { return FirFilter(std::vector<double>(n, 0.0)); }

    std::size_t size() const noexcept { return coeffs_.size(); }
    std::span<const double> coeffs() const noexcept { return coeffs_; }
    std::span<double> mutable_coeffs() noexcept { return coeffs_; }

    /// Input samples seen so far, newest first (length == number of taps).
    std::span<const double> history() const noexcept { return taps_.view(); }

    double process_sample(double x) noexcept {
        taps_.push(x);
        return dot(coeffs_, taps_.view());
    }

    /// Filters a frame. A frame with any non-finite sample is rejected whole
    /// and the history is left untouched.
    SampleFrame process(const SampleFrame& in) {
        require_finite(in.samples, "fir_process input");
        SampleFrame out(in.size(), in.sample_rate);
        for (std::size_t n = 0; n < in.size(); ++n) out.samples[n] = process_sample(in.samples[n]);
        return out;
    }

    void reset() noexcept { taps_.clear(); }

private:
    std::vector<double> coeffs_;
    TapLine taps_;
};

/// One-shot linear convolution truncated to the input length.
inline std::vector<double> convolve(std::span<const double> h, std::span<const double> x) {
    std::vector<double> y(x.size(), 0.0);
    for (std::size_t n = 0; n < x.size(); ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < h.size() && i <= n; ++i) acc += h[i] * x[n - i];
        y[n] = acc;
    }
    return y;
}

} // namespace ancsim
