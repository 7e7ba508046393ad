#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ancsim/errors.hpp"

namespace ancsim {

struct SpectrumEstimate {
    std::vector<double> freqs;  // Hz, bin centres 0 .. fs/2
    std::vector<double> psd;    // one-sided power spectral density, units^2 / Hz
    double df = 0.0;
    int sample_rate = 0;
    std::size_t segment_len = 0;
    double overlap = 0.0;
    std::size_t segments = 0;
    const char* window = "hann";

    double psd_db(std::size_t k) const { return 10.0 * std::log10(std::max(psd[k], 1e-300)); }

    std::size_t bin_of(double f) const { return static_cast<std::size_t>(std::llround(f / df)); }

    /// Integral of the PSD over [lo, hi] Hz; each bin covers [f_k - df/2, f_k + df/2]
    /// and contributes in proportion to its overlap with the interval.
    double band_power(double lo, double hi) const {
        double acc = 0.0;
        for (std::size_t k = 0; k < psd.size(); ++k) {
            const double a = std::max(lo, freqs[k] - df / 2.0);
            const double b = std::min(hi, freqs[k] + df / 2.0);
            if (b > a) acc += psd[k] * (b - a);
        }
        return acc;
    }

    double total_power() const {
        double acc = 0.0;
        for (double p : psd) acc += p * df;
        return acc;
    }
};

namespace detail {

// The FFTW planner is not thread-safe; only fftw_execute is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwPlanDeleter {
    void operator()(fftw_plan_s* p) const noexcept {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(p);
    }
};
struct FftwFree {
    void operator()(void* p) const noexcept { fftw_free(p); }
};

/// Reusable real-to-complex transform of a fixed size.
class RealFft {
public:
    explicit RealFft(std::size_t n)
        : n_(n),
          in_(static_cast<double*>(fftw_malloc(sizeof(double) * n))),
          out_(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)))) {
        std::lock_guard lock(fftw_planner_mutex());
        plan_.reset(fftw_plan_dft_r2c_1d(static_cast<int>(n), in_.get(), out_.get(), FFTW_ESTIMATE));
    }

    std::span<double> input() noexcept { return {in_.get(), n_}; }

    void execute() noexcept { fftw_execute(plan_.get()); }

    double power(std::size_t k) const noexcept {
        const auto* c = out_.get();
        return c[k][0] * c[k][0] + c[k][1] * c[k][1];
    }

private:
    std::size_t n_;
    std::unique_ptr<double, FftwFree> in_;
    std::unique_ptr<fftw_complex, FftwFree> out_;
    std::unique_ptr<fftw_plan_s, FftwPlanDeleter> plan_;
};

} // namespace detail

inline constexpr std::size_t kDefaultSegmentLen = 4096;

inline bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// Welch PSD with a periodic Hann window.
inline SpectrumEstimate welch_psd(std::span<const double> x, int sample_rate, std::size_t segment_len = kDefaultSegmentLen,
                                  double overlap = 0.5) {
    if (sample_rate <= 0) throw ConfigError("welch_psd: sample rate must be positive");
    if (!is_power_of_two(segment_len)) {
        throw ConfigError("welch_psd: segment length " + std::to_string(segment_len) + " is not a power of two");
    }
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("welch_psd: overlap must be in [0, 1)");
    const auto hop = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(segment_len * (1.0 - overlap))));
    if (x.size() < segment_len + hop) {
        throw ConfigError("welch_psd: need at least two segments (" + std::to_string(segment_len + hop) +
                          " samples), got " + std::to_string(x.size()));
    }

    std::vector<double> win(segment_len);
    double wss = 0.0;
    for (std::size_t i = 0; i < segment_len; ++i) {
        win[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(segment_len));
        wss += win[i] * win[i];
    }

    const std::size_t nbins = segment_len / 2 + 1;
    SpectrumEstimate est;
    est.sample_rate = sample_rate;
    est.segment_len = segment_len;
    est.overlap = overlap;
    est.df = static_cast<double>(sample_rate) / static_cast<double>(segment_len);
    est.freqs.resize(nbins);
    est.psd.assign(nbins, 0.0);
    for (std::size_t k = 0; k < nbins; ++k) est.freqs[k] = est.df * static_cast<double>(k);

    detail::RealFft fft(segment_len);
    std::size_t count = 0;
    for (std::size_t start = 0; start + segment_len <= x.size(); start += hop) {
        auto in = fft.input();
        for (std::size_t i = 0; i < segment_len; ++i) in[i] = x[start + i] * win[i];
        fft.execute();
        for (std::size_t k = 0; k < nbins; ++k) est.psd[k] += fft.power(k);
        ++count;
    }
    const double scale = 1.0 / (static_cast<double>(sample_rate) * wss * static_cast<double>(count));
    for (std::size_t k = 0; k < nbins; ++k) {
        const bool edge = (k == 0) || (k == nbins - 1);
        est.psd[k] *= scale * (edge ? 1.0 : 2.0);
    }
    est.segments = count;
    return est;
}

} // namespace ancsim
