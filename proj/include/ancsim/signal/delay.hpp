#pragma once

#include <cstddef>
#include <deque>

#include "ancsim/errors.hpp"
#include "ancsim/signal/frame.hpp"

namespace ancsim {

/// Integer-sample delay; zeros come out until the line fills.
class DelayLine {
public:
    explicit DelayLine(std::size_t delay = 0) : delay_(delay), buf_(delay, 0.0) {}

    std::size_t delay() const noexcept { return delay_; }

    double process_sample(double x) {
        if (delay_ == 0) return x;
        buf_.push_back(x);
        const double y = buf_.front();
        buf_.pop_front();
        return y;
    }

    SampleFrame process(const SampleFrame& in) {
        SampleFrame out(in.size(), in.sample_rate);
        for (std::size_t n = 0; n < in.size(); ++n) out.samples[n] = process_sample(in.samples[n]);
        return out;
    }

    void reset() { buf_.assign(delay_, 0.0); }

private:
    std::size_t delay_;
    std::deque<double> buf_;
};

} // namespace ancsim
