#pragma once

#include <cstddef>
#include <vector>

#include "ancsim/metrics/spl.hpp"
#include "ancsim/metrics/weighting.hpp"

namespace ancsim {

/// Streaming C-weighted level over a sliding window made of fixed periods
/// (e.g. ten 100 ms periods for a 1 s window).
class LevelMeter {
public:
    LevelMeter(int sample_rate, std::size_t periods_per_window)
        : cw_(sample_rate),
          sums_(periods_per_window, 0.0),
          raw_sums_(periods_per_window, 0.0),
          counts_(periods_per_window, 0) {}

    void push(double x) noexcept {
        const double v = cw_.process(x);
        acc_ += v * v;
        raw_acc_ += x * x;
        ++n_;
    }

    /// Closes the current period; the window now covers the latest periods.
    void close_period() noexcept {
        sums_[slot_] = acc_;
        raw_sums_[slot_] = raw_acc_;
        counts_[slot_] = n_;
        slot_ = (slot_ + 1) % sums_.size();
        acc_ = 0.0;
        raw_acc_ = 0.0;
        n_ = 0;
    }

    SplReading level() const {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < sums_.size(); ++i) {
            s += sums_[i];
            n += counts_[i];
        }
        if (n == 0) return {kSplFloorDb, true};
        return level_from_rms(std::sqrt(s / static_cast<double>(n)));
    }

    /// Unweighted mean square over the window (0 before the first period closes).
    double mean_square() const noexcept {
        double s = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < raw_sums_.size(); ++i) {
            s += raw_sums_[i];
            n += counts_[i];
        }
        return n ? s / static_cast<double>(n) : 0.0;
    }

private:
    CWeighting cw_;
    std::vector<double> sums_;
    std::vector<double> raw_sums_;
    std::vector<std::size_t> counts_;
    std::size_t slot_ = 0;
    double acc_ = 0.0;
    double raw_acc_ = 0.0;
    std::size_t n_ = 0;
};

} // namespace ancsim
