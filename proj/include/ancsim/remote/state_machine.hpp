#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "ancsim/errors.hpp"

namespace ancsim {

enum class UnitState { Idle, Calibrating, RunningFF, RunningFB, Fault };

inline std::string_view to_string(UnitState s) {
    switch (s) {
    case UnitState::Idle: return "Idle";
    case UnitState::Calibrating: return "Calibrating";
    case UnitState::RunningFF: return "RunningFF";
    case UnitState::RunningFB: return "RunningFB";
    case UnitState::Fault: return "Fault";
    }
    return "?";
}

inline bool is_running(UnitState s) noexcept { return s == UnitState::RunningFF || s == UnitState::RunningFB; }

/// Target of a `set_mode` command.
enum class ModeRequest { Idle, Feedforward, Feedback };

inline std::optional<ModeRequest> mode_request_from_string(std::string_view s) {
    if (s == "idle") return ModeRequest::Idle;
    if (s == "feedforward") return ModeRequest::Feedforward;
    if (s == "feedback") return ModeRequest::Feedback;
    return std::nullopt;
}

struct TransitionResult {
    bool ok = true;
    std::string reason;  // set when !ok
    UnitState state = UnitState::Idle;
};

/// Per-unit operating state. Legal transitions:
///   Idle -> Calibrating; Calibrating -> {Idle, Fault};
///   Idle -> {RunningFF, RunningFB} only once calibrated; Running* -> Idle;
///   any -> Fault; Fault -> Idle only through reset.
/// A rejected request leaves the state untouched.
class UnitStateMachine {
public:
    UnitState state() const noexcept { return state_; }
    bool calibrated() const noexcept { return calibrated_; }

    TransitionResult request_mode(ModeRequest m) {
        const UnitState target = m == ModeRequest::Idle          ? UnitState::Idle
                                 : m == ModeRequest::Feedforward ? UnitState::RunningFF
                                                                 : UnitState::RunningFB;
        if (target == state_) return ok();
        switch (state_) {
        case UnitState::Idle:
            if (!calibrated_) return reject("not-calibrated");
            return move_to(target);
        case UnitState::Calibrating:
            // Aborting a calibration returns to Idle without a usable estimate.
            if (target == UnitState::Idle) return move_to(UnitState::Idle);
            return reject("busy-calibrating");
        case UnitState::RunningFF:
        case UnitState::RunningFB:
            if (target == UnitState::Idle) return move_to(UnitState::Idle);
            return reject("illegal-transition");
        case UnitState::Fault: return reject("faulted");
        }
        return reject("illegal-transition");
    }

    TransitionResult request_calibrate() {
        if (state_ != UnitState::Idle) return reject("illegal-transition");
        calibrated_ = false;
        return move_to(UnitState::Calibrating);
    }

    /// Reset is always accepted and lands in Idle. It is the only way out of Fault.
    TransitionResult request_reset() { return move_to(UnitState::Idle); }

    void calibration_finished(bool success) {
        if (state_ != UnitState::Calibrating) return;
        calibrated_ = success;
        state_ = success ? UnitState::Idle : UnitState::Fault;
    }

    void fault() { state_ = UnitState::Fault; }

    /// Marks the unit calibrated without a training run (oracle estimate in simulation).
    void assume_calibrated() { calibrated_ = true; }

private:
    TransitionResult ok() const { return {true, {}, state_}; }
    TransitionResult reject(std::string why) const { return {false, std::move(why), state_}; }
    TransitionResult move_to(UnitState s) {
        state_ = s;
        return ok();
    }

    UnitState state_ = UnitState::Idle;
    bool calibrated_ = false;
};

} // namespace ancsim
