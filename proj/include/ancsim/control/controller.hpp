#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ancsim/control/constraint.hpp"
#include "ancsim/errors.hpp"
#include "ancsim/signal/tap_line.hpp"

namespace ancsim {

enum class ControlMode { Feedforward, Feedback };
enum class Algorithm { FxLMS, MovFxLMS };

inline std::string_view to_string(ControlMode m) { return m == ControlMode::Feedforward ? "feedforward" : "feedback"; }
inline std::string_view to_string(Algorithm a) { return a == Algorithm::FxLMS ? "fxlms" : "mov-fxlms"; }

inline ControlMode control_mode_from_string(std::string_view s) {
    if (s == "feedforward") return ControlMode::Feedforward;
    if (s == "feedback") return ControlMode::Feedback;
    throw ConfigError("unknown control mode '" + std::string(s) + "'");
}

inline Algorithm algorithm_from_string(std::string_view s) {
    if (s == "fxlms") return Algorithm::FxLMS;
    if (s == "mov-fxlms") return Algorithm::MovFxLMS;
    throw ConfigError("unknown algorithm '" + std::string(s) + "'");
}

struct ControllerParams {
    Algorithm algorithm = Algorithm::MovFxLMS;
    ControlMode mode = ControlMode::Feedback;
    std::size_t filter_len = 128;
    std::size_t frame_len = 64;
    double mu = 0.01;
    double rho = std::numeric_limits<double>::infinity();
    // Normalized step mu / (eps + |x'|^2); false applies mu literally.
    bool normalized = true;
    double norm_eps = 1e-6;
    // Trip when windowed e^2 exceeds this multiple of the off-state error power.
    double fault_ratio = 10.0;

    void validate() const {
        if (filter_len == 0) throw ConfigError("filter_len must be >= 1");
        if (frame_len == 0) throw ConfigError("frame_len must be >= 1");
        if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("mu must be finite and >= 0");
        if (!(rho > 0.0)) throw ConfigError("rho must be > 0");
        if (!(norm_eps > 0.0)) throw ConfigError("norm_eps must be > 0");
        if (!(fault_ratio > 1.0)) throw ConfigError("fault_ratio must be > 1");
    }
};

/// Per-frame bookkeeping, used to verify that parameters never change mid-frame.
struct FrameRecord {
    std::uint64_t index = 0;
    double mu_first = 0.0;
    double mu_last = 0.0;
    double rho_first = 0.0;
    double rho_last = 0.0;
    double alpha = 0.0;
};

/// One unit's adaptive controller: FxLMS / MOV-FxLMS in feedforward mode, or
/// internal-model feedback where the reference is the reconstructed disturbance.
///
/// Sign convention: the error is e = d - s*y, i.e. the plant is driven with -y.
/// The plant must delay the drive by at least one sample relative to the error
/// it reports (s[0] is not used when reconstructing the disturbance).
class Controller {
public:
    explicit Controller(ControllerParams p = {}) : p_(p) {
        p_.validate();
        allocate();
    }

    const ControllerParams& params() const noexcept { return p_; }

    void set_secondary_path(std::vector<double> shat) {
        if (shat.empty()) throw ConfigError("secondary-path estimate must have at least one tap");
        require_finite_taps(shat);
        shat_ = std::move(shat);
        const auto g = secondary_path_gain(shat_);
        gs_ = g.gs;
        calibrated_ = !g.degenerate;
        allocate();
    }

    bool calibrated() const noexcept { return calibrated_; }
    std::span<const double> secondary_path() const noexcept { return shat_; }
    double gs() const noexcept { return gs_; }

    bool faulted() const noexcept { return faulted_; }
    const std::string& fault_reason() const noexcept { return fault_reason_; }

    std::span<const double> weights() const noexcept { return w_; }
    double alpha() const noexcept { return alpha_; }
    double last_frame_output_power() const noexcept { return last_y_power_; }
    double last_frame_disturbance_power() const noexcept { return last_d_power_; }
    double last_frame_error_power() const noexcept { return last_e_power_; }
    std::uint64_t frames_completed() const noexcept { return frame_index_; }
    bool at_frame_boundary() const noexcept { return frame_pos_ == 0; }

    /// d̂(n) = e(n) + sum_{k>=1} ŝ_k y(n-k)
    double estimate_disturbance(double e) const noexcept {
        return e + dot(std::span<const double>(shat_).subspan(1), y_hist_.view());
    }

    /// Feedforward step: x is the reference sample, e the error sample measured
    /// at this tick. Returns y(n).
    double step(double x, double e) {
        require_ready(ControlMode::Feedforward);
        return step_core(x, e, estimate_disturbance(e));
    }

    /// Feedback (IMC) step: the reference is the reconstructed disturbance.
    double step_feedback(double e) {
        require_ready(ControlMode::Feedback);
        const double dhat = estimate_disturbance(e);
        return step_core(dhat, e, dhat);
    }

    /// Replace parameters. Only legal on a frame boundary.
    void apply_params(const ControllerParams& next) {
        if (!at_frame_boundary()) throw PreconditionError("parameters may only change on a frame boundary");
        next.validate();
        const bool realloc = next.filter_len != p_.filter_len;
        const bool reframe = next.frame_len != p_.frame_len;
        p_ = next;
        if (realloc) allocate();
        if (reframe) reset_frame();
        if (p_.algorithm == Algorithm::FxLMS) alpha_ = 0.0;
    }

    /// Zero weights and histories and clear any fault. Keeps the path estimate.
    void reset() {
        allocate();
        faulted_ = false;
        fault_reason_.clear();
        off_power_ = 0.0;
    }

    /// Error power observed with the controller off. Without it the controller
    /// takes the mean e^2 of its first few frames after a reset.
    void set_off_state_power(double p) noexcept { off_power_ = p > 0.0 && std::isfinite(p) ? p : 0.0; }
    double off_state_power() const noexcept { return off_power_; }

    void trip(std::string reason) {
        faulted_ = true;
        fault_reason_ = std::move(reason);
    }

    void enable_frame_log(bool on) {
        log_frames_ = on;
        frame_log_.clear();
    }
    const std::vector<FrameRecord>& frame_log() const noexcept { return frame_log_; }

private:
    static constexpr std::size_t kTripFrames = 8;

    static void require_finite_taps(std::span<const double> v) {
        for (double x : v) {
            if (!std::isfinite(x)) throw ConfigError("secondary-path estimate has non-finite taps");
        }
    }

    void require_ready(ControlMode m) const {
        if (p_.mode != m) throw PreconditionError("controller is not in " + std::string(to_string(m)) + " mode");
        if (!calibrated_) throw PreconditionError("secondary path is not calibrated");
    }

    void allocate() {
        const std::size_t s_len = shat_.size();
        w_.assign(p_.filter_len, 0.0);
        scratch_.assign(p_.filter_len, 0.0);
        x_hist_ = TapLine(std::max(p_.filter_len, s_len));
        xf_hist_ = TapLine(p_.filter_len);
        y_hist_ = TapLine(s_len > 1 ? s_len - 1 : 0);
        alpha_ = 0.0;
        trip_e_.assign(kTripFrames, 0.0);
        frames_since_reset_ = 0;
        warmup_left_ = p_.filter_len + (s_len > 0 ? s_len - 1 : 0);
        reset_frame();
    }

    void reset_frame() {
        frame_pos_ = 0;
        acc_d_ = acc_e_ = acc_y_ = 0.0;
    }

    double step_core(double x, double e, double dhat) {
        if (frame_pos_ == 0 && log_frames_) {
            frame_log_.push_back({frame_index_, p_.mu, p_.mu, p_.rho, p_.rho, alpha_});
        }
        double y = 0.0;
        if (!faulted_) {
            x_hist_.push(x);
            const auto xv = x_hist_.view();
            xf_hist_.push(dot(shat_, xv));
            const auto xw = xv.first(p_.filter_len);
            y = dot(w_, xw);
            const double mu = p_.normalized ? p_.mu / (p_.norm_eps + energy(xf_hist_.view())) : p_.mu;
            const double a = p_.algorithm == Algorithm::MovFxLMS ? alpha_ : 0.0;
            try {
                // Adaptation waits until the filtered-reference history is full.
                if (warmup_left_ > 0) {
                    --warmup_left_;
                } else {
                    mov_fxlms_update(w_, mu, e, xf_hist_.view(), a, y, xw, scratch_);
                }
            } catch (const NumericFault&) {
                trip("non-finite weight update");
                y = 0.0;
            }
            if (!std::isfinite(y)) {
                trip("non-finite control output");
                y = 0.0;
            }
        }
        y_hist_.push(y);

        acc_d_ += dhat * dhat;
        acc_e_ += e * e;
        acc_y_ += y * y;
        if (log_frames_) {
            frame_log_.back().mu_last = p_.mu;
            frame_log_.back().rho_last = p_.rho;
        }
        if (++frame_pos_ == p_.frame_len) end_frame();
        return y;
    }

    void end_frame() {
        const double m = static_cast<double>(p_.frame_len);
        last_d_power_ = acc_d_ / m;
        last_e_power_ = acc_e_ / m;
        last_y_power_ = acc_y_ / m;
        if (p_.algorithm == Algorithm::MovFxLMS && std::isfinite(acc_d_)) {
            alpha_ = penalty_factor_from_power(acc_d_, p_.frame_len, gs_, p_.rho);
        } else {
            alpha_ = 0.0;
        }

        const std::size_t slot = frame_index_ % kTripFrames;
        trip_e_[slot] = acc_e_;
        if (frames_since_reset_ < kTripFrames) ++frames_since_reset_;
        if (!faulted_) {
            double se = 0.0;
            for (std::size_t i = 0; i < frames_since_reset_; ++i) se += trip_e_[i];
            const double mean_e = se / (m * static_cast<double>(frames_since_reset_));
            if (!std::isfinite(se)) {
                trip("non-finite error signal");
            } else if (off_power_ <= 0.0) {
                if (frames_since_reset_ == kTripFrames) off_power_ = std::max(mean_e, 1e-12);
            } else if (frames_since_reset_ == kTripFrames && mean_e > p_.fault_ratio * off_power_) {
                trip("error power exceeded " + std::to_string(p_.fault_ratio) + "x the off-state level");
            }
        }
        ++frame_index_;
        reset_frame();
    }

    ControllerParams p_;
    std::vector<double> shat_{0.0};
    double gs_ = kGainFloor;
    bool calibrated_ = false;

    std::vector<double> w_;
    std::vector<double> scratch_;
    TapLine x_hist_;
    TapLine xf_hist_;
    TapLine y_hist_;

    double alpha_ = 0.0;
    std::size_t frame_pos_ = 0;
    std::uint64_t frame_index_ = 0;
    double acc_d_ = 0.0, acc_e_ = 0.0, acc_y_ = 0.0;
    double last_d_power_ = 0.0, last_e_power_ = 0.0, last_y_power_ = 0.0;
    std::vector<double> trip_e_;
    std::size_t frames_since_reset_ = 0;
    std::size_t warmup_left_ = 0;
    double off_power_ = 0.0;

    bool faulted_ = false;
    std::string fault_reason_;

    bool log_frames_ = false;
    std::vector<FrameRecord> frame_log_;
};

} // namespace ancsim
