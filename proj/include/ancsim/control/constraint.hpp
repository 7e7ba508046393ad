#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/signal/tap_line.hpp"

namespace ancsim {

inline constexpr double kGainFloor = 1e-12;

/// Penalty factor from the disturbance power in one frame:
///
///   alpha = max{ gs * ( sqrt( sum(dhat^2) / (M * gs * rho^2) ) - 1 ), 0 }
///
/// `dhat_sq_sum` is the sum of squared disturbance estimates over the last
/// `frame_len` samples. rho may be +inf (unconstrained), which yields 0.
inline double penalty_factor_from_power(double dhat_sq_sum, std::size_t frame_len, double gs, double rho) {
    if (!(gs > 0.0)) throw ConfigError("penalty_factor: secondary-path gain must be > 0");
    if (!(rho > 0.0)) throw ConfigError("penalty_factor: rho must be > 0");
    if (frame_len == 0) throw ConfigError("penalty_factor: frame length must be >= 1");
    const double ratio = dhat_sq_sum / (static_cast<double>(frame_len) * gs * rho * rho);
    return std::max(gs * (std::sqrt(ratio) - 1.0), 0.0);
}

inline double penalty_factor(std::span<const double> dhat_window, double gs, double rho) {
    return penalty_factor_from_power(energy(dhat_window), dhat_window.size(), gs, rho);
}

struct PathGain {
    double gs = kGainFloor;
    bool degenerate = false;  // estimate was (numerically) all zeros
};

/// Power gain of the secondary-path estimate, taken as the sum of its squared taps.
inline PathGain secondary_path_gain(std::span<const double> shat) noexcept {
    const double g = energy(shat);
    if (!(g > kGainFloor)) return {kGainFloor, true};
    return {g, false};
}

/// w <- w + mu * (e * x_filt - alpha * y * x)
///
/// The new weights are staged in `scratch` and committed only if all of them
/// are finite; otherwise `w` is left untouched and NumericFault is thrown.
inline void mov_fxlms_update(std::span<double> w, double mu, double e, std::span<const double> x_filt, double alpha,
                             double y, std::span<const double> x, std::span<double> scratch) {
    const std::size_t n = w.size();
    if (x_filt.size() < n || x.size() < n || scratch.size() < n) {
        throw ConfigError("mov_fxlms_update: vector length mismatch");
    }
    bool finite = true;
    const double a = mu * e;
    const double b = mu * alpha * y;
    if (b == 0.0) {
        // Penalty inactive: exactly the plain FxLMS step.
        for (std::size_t i = 0; i < n; ++i) {
            const double v = w[i] + a * x_filt[i];
            finite = finite && std::isfinite(v);
            scratch[i] = v;
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = w[i] + (a * x_filt[i] - b * x[i]);
            finite = finite && std::isfinite(v);
            scratch[i] = v;
        }
    }
    if (!finite) throw NumericFault("mov_fxlms_update: non-finite weight update");
    std::copy_n(scratch.begin(), n, w.begin());
}

/// Allocating convenience overload.
inline void mov_fxlms_update(std::span<double> w, double mu, double e, std::span<const double> x_filt, double alpha,
                             double y, std::span<const double> x) {
    std::vector<double> scratch(w.size());
    mov_fxlms_update(w, mu, e, x_filt, alpha, y, x, scratch);
}

} // namespace ancsim
