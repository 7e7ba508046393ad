#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/signal/frame.hpp"

namespace ancsim {

/// Acoustic/electro-acoustic path: gain * (pure delay) * FIR.
struct PathModel {
    std::size_t delay = 0;
    std::vector<double> fir{1.0};
    double gain = 1.0;

    void validate() const {
        if (fir.empty()) throw ConfigError("path FIR must have at least one tap");
        require_finite(fir, "path FIR");
        if (!std::isfinite(gain)) throw ConfigError("path gain must be finite");
    }

    /// Full impulse response (delay zeros followed by gain-scaled taps).
    std::vector<double> impulse_response() const {
        std::vector<double> h(delay, 0.0);
        for (double c : fir) h.push_back(gain * c);
        return h;
    }

    std::size_t length() const noexcept { return delay + fir.size(); }
};

} // namespace ancsim
