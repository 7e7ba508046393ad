#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/signal/generator.hpp"
#include "ancsim/signal/tap_line.hpp"

namespace ancsim {

/// Anything that can inject one drive sample into a secondary source and return
/// the microphone sample observed at the same tick.
template <typename P>
concept SecondaryPathProbe = requires(P p, double u) {
    { p.exchange(u) } -> std::convertible_to<double>;
};

struct CalibrationResult {
    std::vector<double> shat;
    // 10 log10(|s - ŝ|^2 / |s|^2); NaN when the true path is unknown.
    double misalignment_db = std::numeric_limits<double>::quiet_NaN();
    std::size_t training_samples = 0;
    // Mean squared identification residual over the last quarter of training.
    double residual_power = 0.0;
};

struct CalibrationOptions {
    std::size_t model_order = 32;
    double step = 0.002;
    // The tracked error may grow by at most this factor between the two halves
    // of the final quarter before the run counts as divergent.
    double divergence_ratio = 2.0;
};

inline double misalignment_db(std::span<const double> truth, std::span<const double> estimate) {
    const std::size_t n = std::max(truth.size(), estimate.size());
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = i < truth.size() ? truth[i] : 0.0;
        const double e = i < estimate.size() ? estimate[i] : 0.0;
        err += (s - e) * (s - e);
        ref += s * s;
    }
    if (!(ref > 0.0)) throw ConfigError("misalignment: true path has zero energy");
    return 10.0 * std::log10(std::max(err, std::numeric_limits<double>::min()) / ref);
}

/// Sample-by-sample LMS identification of a drive-to-microphone path:
///   eps = measured - ŝᵀu_hist,  ŝ <- ŝ + step * eps * u_hist
///
/// Divergence is judged on the residual power alone. A known true path only
/// feeds the reported misalignment.
class SecondaryPathIdentifier {
public:
    SecondaryPathIdentifier(std::size_t n_samples, CalibrationOptions opt,
                            std::optional<std::vector<double>> true_path = std::nullopt)
        : opt_(opt), total_(n_samples), truth_(std::move(true_path)) {
        if (opt_.model_order == 0) throw ConfigError("calibration: model order must be >= 1");
        if (n_samples < 8) throw ConfigError("calibration: too few training samples");
        if (!(opt_.step > 0.0)) throw ConfigError("calibration: step must be > 0");
        shat_.assign(opt_.model_order, 0.0);
        u_hist_ = TapLine(opt_.model_order);
        quarter_start_ = total_ - total_ / 4;
        half_split_ = quarter_start_ + (total_ - quarter_start_) / 2;
    }

    std::size_t samples_done() const noexcept { return n_; }
    bool done() const noexcept { return n_ >= total_; }
    std::span<const double> estimate() const noexcept { return shat_; }

    /// u is the drive injected this tick; measured is the microphone sample
    /// that goes with it.
    void step(double u, double measured) {
        u_hist_.push(u);
        const auto uv = u_hist_.view();
        const double eps = measured - dot(shat_, uv);
        const double g = opt_.step * eps;
        for (std::size_t i = 0; i < shat_.size(); ++i) shat_[i] += g * uv[i];
        if (!std::isfinite(eps) || !std::isfinite(shat_[0])) {
            throw CalibrationFailed("calibration diverged: non-finite estimate");
        }
        if (n_ >= quarter_start_) {
            resid_acc_ += eps * eps;
            if (n_ < half_split_) {
                first_ += eps * eps;
                ++n_first_;
            } else {
                second_ += eps * eps;
                ++n_second_;
            }
        }
        ++n_;
    }

    /// Validates the run and returns the estimate. Throws CalibrationFailed on divergence.
    CalibrationResult finish() const {
        if (n_first_ > 0 && n_second_ > 0) {
            const double a = first_ / static_cast<double>(n_first_);
            const double b = second_ / static_cast<double>(n_second_);
            if (b > opt_.divergence_ratio * a && b > 1e-20) {
                throw CalibrationFailed("calibration diverged: error grew over the final quarter of training");
            }
        }
        CalibrationResult r;
        r.shat = shat_;
        r.training_samples = n_;
        const std::size_t tail = n_ > quarter_start_ ? n_ - quarter_start_ : 0;
        r.residual_power = tail ? resid_acc_ / static_cast<double>(tail) : 0.0;
        if (truth_) r.misalignment_db = misalignment_db(*truth_, shat_);
        return r;
    }

private:
    CalibrationOptions opt_;
    std::size_t total_;
    std::optional<std::vector<double>> truth_;
    std::vector<double> shat_;
    TapLine u_hist_;
    std::size_t n_ = 0;
    std::size_t quarter_start_ = 0, half_split_ = 0;
    double first_ = 0.0, second_ = 0.0;
    std::size_t n_first_ = 0, n_second_ = 0;
    double resid_acc_ = 0.0;
};

/// Runs a full identification against a probe with a broadband training signal.
template <SecondaryPathProbe Probe>
CalibrationResult estimate_secondary_path(Probe& probe, SignalGen& training, std::size_t n_samples,
                                          const CalibrationOptions& opt,
                                          std::optional<std::vector<double>> true_path = std::nullopt) {
    SecondaryPathIdentifier id(n_samples, opt, std::move(true_path));
    while (!id.done()) {
        const double u = training.next();
        id.step(u, probe.exchange(u));
    }
    return id.finish();
}

} // namespace ancsim
