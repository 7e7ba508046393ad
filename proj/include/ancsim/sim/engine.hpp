#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ancsim/control/calibration.hpp"
#include "ancsim/control/controller.hpp"
#include "ancsim/errors.hpp"
#include "ancsim/metrics/level_meter.hpp"
#include "ancsim/plant/plant.hpp"
#include "ancsim/plant/topology.hpp"
#include "ancsim/remote/state_machine.hpp"
#include "ancsim/remote/telemetry.hpp"
#include "ancsim/signal/generator.hpp"

namespace ancsim {

struct SecondaryPathSetup {
    enum class Method { Oracle, Calibrate };
    Method method = Method::Calibrate;
    double seconds = 8.0;
    std::size_t model_order = 32;
    double step = 0.002;
    double amplitude = 1.0;  // training noise peak
    std::uint64_t seed = 0x5EED;
};

struct UnitSetup {
    ControllerParams controller;
    SecondaryPathSetup secondary_path;
    std::optional<std::size_t> reference_source;  // feedforward reference = this source's signal
    bool start_running = true;
};

struct EngineOptions {
    double telemetry_hz = kDefaultTelemetryHz;
    std::size_t level_window_periods = 10;  // 1 s at 10 Hz
    bool record = false;
};

/// Something that happened inside the DSP loop and should be reported.
struct EngineEvent {
    unsigned unit = 0;
    std::string type;  // calibration-done, calibration-failed, fault
    nlohmann::json detail = nlohmann::json::object();
};

struct CommandOutcome {
    bool ok = true;
    std::string reason;
    UnitState state = UnitState::Idle;
    nlohmann::json detail = nlohmann::json::object();
};

/// Signals captured per sample while recording is on.
struct Recording {
    std::vector<std::vector<double>> error;                // per unit, e(n)
    std::vector<std::vector<double>> error_disturbance;    // per unit, d(n)
    std::vector<std::vector<double>> output;               // per unit, controller y(n)
    std::vector<std::vector<double>> alpha;                // per unit, alpha in force at n
    std::vector<std::vector<double>> monitor;              // per monitor/field mic, control on
    std::vector<std::vector<double>> monitor_disturbance;  // per monitor/field mic, sources only
};

/// Closed-loop simulation: one plant, one controller and state machine per unit.
///
/// Each tick the plant produces microphone samples from the drives computed on
/// the previous tick (a one-sample converter latency), then every unit computes
/// its next drive. The effective secondary path seen by a controller is
/// therefore the plant path preceded by one sample of delay.
class Engine {
public:
    Engine(const PlantTopology& topo, std::vector<UnitSetup> units, EngineOptions opt = {})
        : plant_(topo), setups_(std::move(units)), opt_(opt) {
        if (setups_.size() != plant_.num_units()) {
            throw ConfigError("engine: " + std::to_string(setups_.size()) + " unit configs for " +
                              std::to_string(plant_.num_units()) + " plant units");
        }
        if (!(opt_.telemetry_hz > 0.0)) throw ConfigError("engine: telemetry rate must be > 0");
        const double period = plant_.sample_rate() / opt_.telemetry_hz;
        if (std::abs(period - std::round(period)) > 1e-9 || period < 1.0) {
            throw ConfigError("engine: sample rate must be a whole multiple of the telemetry rate");
        }
        telemetry_period_ = static_cast<std::uint64_t>(std::llround(period));

        for (std::size_t u = 0; u < setups_.size(); ++u) {
            const auto& s = setups_[u];
            if (s.reference_source && *s.reference_source >= plant_.num_sources()) {
                throw ConfigError("unit " + std::to_string(u) + ": reference source out of range");
            }
            if (s.controller.mode == ControlMode::Feedforward && !s.reference_source) {
                throw ConfigError("unit " + std::to_string(u) + ": feedforward mode needs a reference source");
            }
            UnitRuntime rt{Controller(s.controller), UnitStateMachine{},
                           LevelMeter(plant_.sample_rate(), opt_.level_window_periods),
                           LevelMeter(plant_.sample_rate(), opt_.level_window_periods),
                           {}, {}, {}, {}, {}};
            rt.reductions.assign(opt_.level_window_periods, 0.0);
            units_.push_back(std::move(rt));
        }
        for (std::size_t m = 0; m < plant_.num_monitors(); ++m) {
            monitor_on_.emplace_back(plant_.sample_rate(), opt_.level_window_periods);
        }
        mic_.assign(plant_.num_mics(), 0.0);
        dist_.assign(plant_.num_mics(), 0.0);
        drive_.assign(plant_.num_units(), 0.0);
        if (opt_.record) start_recording();
    }

    const Plant& plant() const noexcept { return plant_; }
    std::size_t num_units() const noexcept { return units_.size(); }
    int sample_rate() const noexcept { return plant_.sample_rate(); }
    std::uint64_t sample() const noexcept { return sample_; }
    double time() const noexcept {
        return static_cast<double>(sample_ - origin_) / static_cast<double>(plant_.sample_rate());
    }
    std::uint64_t telemetry_period() const noexcept { return telemetry_period_; }

    const Controller& controller(std::size_t u) const { return units_.at(u).ctrl; }
    Controller& controller(std::size_t u) { return units_.at(u).ctrl; }
    const UnitStateMachine& state(std::size_t u) const { return units_.at(u).sm; }
    const UnitSetup& setup(std::size_t u) const { return setups_.at(u); }
    const std::optional<CalibrationResult>& last_calibration(std::size_t u) const { return units_.at(u).cal; }
    /// The identification in progress for unit u, if it is calibrating.
    const SecondaryPathIdentifier* identifier(std::size_t u) const {
        const auto& id = units_.at(u).ident;
        return id ? &*id : nullptr;
    }

    /// Plant path from unit u's drive to its own error mic, with the loop latency prepended.
    std::vector<double> effective_secondary_path(std::size_t u) const {
        std::vector<double> h{0.0};
        const auto p = plant_.unit_path_response(u, u);
        h.insert(h.end(), p.begin(), p.end());
        return h;
    }

    /// Installs the true effective path as the estimate (simulation only).
    void use_oracle_path(std::size_t u) {
        auto& rt = units_.at(u);
        rt.ctrl.set_secondary_path(effective_secondary_path(u));
        rt.sm.assume_calibrated();
    }

    /// Time zero for telemetry and recording is now.
    void mark_origin() {
        origin_ = sample_;
        if (recording_) start_recording();
    }

    void start_recording() {
        recording_ = true;
        rec_ = Recording{};
        rec_.error.resize(units_.size());
        rec_.error_disturbance.resize(units_.size());
        rec_.output.resize(units_.size());
        rec_.alpha.resize(units_.size());
        rec_.monitor.resize(plant_.num_monitors());
        rec_.monitor_disturbance.resize(plant_.num_monitors());
    }
    const Recording& recording() const noexcept { return rec_; }

    /// True when every running controller sits on a frame boundary, so
    /// parameter and mode changes can be applied without splitting a frame.
    bool quiescent() const noexcept {
        for (const auto& rt : units_) {
            if (is_running(rt.sm.state()) && !rt.ctrl.at_frame_boundary()) return false;
        }
        return true;
    }

    /// Runs exactly n ticks.
    void run_ticks(std::uint64_t n) {
        for (std::uint64_t i = 0; i < n; ++i) tick();
    }

    /// Runs n ticks, then keeps going until the engine is quiescent.
    void advance(std::uint64_t n) {
        run_ticks(n);
        while (!quiescent()) tick();
    }

    /// Calibrates (blocking, one unit at a time) every unit configured for it and
    /// installs oracle paths for the rest. Ambient sources keep playing.
    void prepare_secondary_paths() {
        for (std::size_t u = 0; u < units_.size(); ++u) {
            if (setups_[u].secondary_path.method == SecondaryPathSetup::Method::Oracle) {
                use_oracle_path(u);
                continue;
            }
            const auto out = apply_command(static_cast<unsigned>(u), {{"cmd", "calibrate"}});
            if (!out.ok) throw PreconditionError("unit " + std::to_string(u) + ": cannot calibrate: " + out.reason);
            while (units_[u].sm.state() == UnitState::Calibrating) tick();
            if (units_[u].sm.state() == UnitState::Fault) {
                throw CalibrationFailed("unit " + std::to_string(u) + ": " + units_[u].cal_error);
            }
        }
    }

    /// Puts every unit marked start_running into its configured mode.
    void start_configured_units() {
        for (std::size_t u = 0; u < units_.size(); ++u) {
            if (!setups_[u].start_running) continue;
            const auto mode = setups_[u].controller.mode == ControlMode::Feedforward ? "feedforward" : "feedback";
            const auto out = apply_command(static_cast<unsigned>(u), {{"cmd", "set_mode"}, {"mode", mode}});
            if (!out.ok) throw PreconditionError("unit " + std::to_string(u) + ": cannot start: " + out.reason);
        }
    }

    /// Applies one command payload to a unit. Must be called while quiescent.
    CommandOutcome apply_command(unsigned unit, const nlohmann::json& cmd) {
        if (unit >= units_.size()) return {false, "unknown-unit", UnitState::Idle, {}};
        if (!quiescent()) throw PreconditionError("commands may only be applied at a frame boundary");
        auto& rt = units_[unit];
        auto done = [&](TransitionResult r, nlohmann::json detail = nlohmann::json::object()) {
            return CommandOutcome{r.ok, r.reason, r.state, std::move(detail)};
        };
        if (!cmd.is_object() || !cmd.contains("cmd") || !cmd.at("cmd").is_string()) {
            return {false, "malformed-cmd", rt.sm.state(), {}};
        }
        const std::string name = cmd.at("cmd").get<std::string>();

        if (name == "get_state") {
            return done({true, {}, rt.sm.state()}, state_detail(unit));
        }
        if (name == "set_mode") {
            const auto m = cmd.contains("mode") && cmd.at("mode").is_string()
                               ? mode_request_from_string(cmd.at("mode").get<std::string>())
                               : std::nullopt;
            if (!m) return {false, "invalid-mode", rt.sm.state(), {}};
            if (*m == ModeRequest::Feedforward && !setups_[unit].reference_source) {
                return {false, "no-reference", rt.sm.state(), {}};
            }
            const UnitState before = rt.sm.state();
            const auto r = rt.sm.request_mode(*m);
            if (r.ok && r.state != before) {
                if (before == UnitState::Calibrating) rt.ident.reset();
                if (is_running(r.state)) {
                    auto p = rt.ctrl.params();
                    p.mode = r.state == UnitState::RunningFF ? ControlMode::Feedforward : ControlMode::Feedback;
                    rt.ctrl.reset();
                    rt.ctrl.apply_params(p);
                    rt.ctrl.set_off_state_power(rt.e_meter.mean_square());
                }
                drive_[unit] = 0.0;
            }
            return done(r);
        }
        if (name == "set_param") {
            if (!cmd.contains("params") || !cmd.at("params").is_object()) {
                return {false, "invalid-param", rt.sm.state(), {}};
            }
            try {
                auto p = rt.ctrl.params();
                for (const auto& [key, v] : cmd.at("params").items()) {
                    if (key == "mu") {
                        p.mu = v.get<double>();
                    } else if (key == "rho") {
                        p.rho = v.is_null() ? std::numeric_limits<double>::infinity() : v.get<double>();
                    } else if (key == "filter_len") {
                        p.filter_len = v.get<std::size_t>();
                    } else if (key == "frame_len") {
                        p.frame_len = v.get<std::size_t>();
                    } else {
                        return {false, "unknown-param:" + key, rt.sm.state(), {}};
                    }
                }
                rt.ctrl.apply_params(p);
            } catch (const nlohmann::json::exception&) {
                return {false, "invalid-param", rt.sm.state(), {}};
            } catch (const ConfigError& e) {
                return {false, std::string("invalid-param:") + e.what(), rt.sm.state(), {}};
            }
            return done({true, {}, rt.sm.state()}, state_detail(unit));
        }
        if (name == "calibrate") {
            const auto r = rt.sm.request_calibrate();
            if (r.ok) begin_calibration(unit, cmd);
            return done(r);
        }
        if (name == "reset") {
            const auto r = rt.sm.request_reset();
            rt.ctrl.reset();
            rt.ident.reset();
            drive_[unit] = 0.0;
            return done(r);
        }
        return {false, "unknown-cmd", rt.sm.state(), {}};
    }

    /// Snapshot of one unit for the control plane.
    TelemetryFrame snapshot(std::size_t u) const {
        const auto& rt = units_.at(u);
        TelemetryFrame f;
        f.unit = static_cast<unsigned>(u);
        f.t = time();
        f.mode = std::string(to_string(rt.sm.state()));
        const bool running = is_running(rt.sm.state());
        f.alpha = running ? rt.ctrl.alpha() : 0.0;
        f.output_power = running ? rt.ctrl.last_frame_output_power() : 0.0;
        f.spl_error_dbc = rt.e_meter.level().db;
        for (const auto& m : monitor_on_) f.spl_monitor_dbc.push_back(m.level().db);
        f.reduction_db = rt.reductions[(rt.red_slot + rt.reductions.size() - 1) % rt.reductions.size()];
        f.converged = running && rt.red_count >= rt.reductions.size() &&
                      std::abs(f.reduction_db - rt.reductions[rt.red_slot]) < 0.5;
        f.calibrated = rt.sm.calibrated();
        const double rho = rt.ctrl.params().rho;
        f.rho = std::isfinite(rho) ? rho : 0.0;
        f.mu = rt.ctrl.params().mu;
        return f;
    }

    /// Telemetry frames and events produced since the last drain.
    std::vector<TelemetryFrame> drain_telemetry() { return std::exchange(pending_telemetry_, {}); }
    std::vector<EngineEvent> drain_events() { return std::exchange(pending_events_, {}); }

    void set_telemetry_enabled(bool on) noexcept { telemetry_enabled_ = on; }

private:
    struct UnitRuntime {
        Controller ctrl;
        UnitStateMachine sm;
        LevelMeter e_meter;  // control on
        LevelMeter d_meter;  // disturbance
        std::optional<SecondaryPathIdentifier> ident;
        std::optional<SignalGen> training;
        std::optional<CalibrationResult> cal;
        std::string cal_error;
        std::vector<double> reductions;  // one per telemetry period, ring
        std::size_t red_slot = 0;
        std::size_t red_count = 0;
    };

    nlohmann::json state_detail(unsigned u) const {
        const auto& rt = units_[u];
        const auto& p = rt.ctrl.params();
        return {{"state", to_string(rt.sm.state())},
                {"calibrated", rt.sm.calibrated()},
                {"params",
                 {{"mu", p.mu},
                  {"rho", std::isfinite(p.rho) ? nlohmann::json(p.rho) : nlohmann::json(nullptr)},
                  {"filter_len", p.filter_len},
                  {"frame_len", p.frame_len}}}};
    }

    void begin_calibration(unsigned u, const nlohmann::json& cmd) {
        auto& rt = units_[u];
        auto sp = setups_[u].secondary_path;
        if (cmd.contains("seconds") && cmd.at("seconds").is_number()) sp.seconds = cmd.at("seconds").get<double>();
        const auto n = static_cast<std::size_t>(std::llround(sp.seconds * plant_.sample_rate()));
        CalibrationOptions co;
        co.model_order = sp.model_order;
        co.step = sp.step;
        rt.ident.emplace(std::max<std::size_t>(n, 8), co, effective_secondary_path(u));
        rt.training.emplace(SignalParams::white(sp.amplitude, sp.seed + u), plant_.sample_rate());
        rt.cal.reset();
        rt.cal_error.clear();
        drive_[u] = 0.0;
    }

    void finish_calibration(unsigned u) {
        auto& rt = units_[u];
        try {
            rt.cal = rt.ident->finish();
            rt.ctrl.set_secondary_path(rt.cal->shat);
            rt.ctrl.reset();
            const bool ok = rt.ctrl.calibrated();
            if (!ok) rt.cal_error = "estimate is degenerate (all-zero path)";
            rt.sm.calibration_finished(ok);
            pending_events_.push_back({u, ok ? "calibration-done" : "calibration-failed",
                                       {{"misalignment_db", rt.cal->misalignment_db},
                                        {"training_samples", rt.cal->training_samples},
                                        {"state", to_string(rt.sm.state())}}});
        } catch (const CalibrationFailed& e) {
            rt.cal_error = e.what();
            rt.sm.calibration_finished(false);
            pending_events_.push_back({u, "calibration-failed", {{"reason", e.what()}, {"state", "Fault"}}});
        }
        rt.ident.reset();
        rt.training.reset();
    }

    void tick() {
        plant_.tick(drive_, mic_, dist_);
        ++sample_;
        const auto src = plant_.last_source();
        for (unsigned u = 0; u < units_.size(); ++u) {
            auto& rt = units_[u];
            const double e = mic_[u];
            double y = 0.0;
            double next_drive = 0.0;
            switch (rt.sm.state()) {
            case UnitState::Idle:
            case UnitState::Fault: break;
            case UnitState::Calibrating: {
                const double t = rt.training->next();
                try {
                    rt.ident->step(t, e);
                } catch (const CalibrationFailed& ex) {
                    rt.cal_error = ex.what();
                    rt.sm.calibration_finished(false);
                    rt.ident.reset();
                    rt.training.reset();
                    pending_events_.push_back({u, "calibration-failed", {{"reason", ex.what()}, {"state", "Fault"}}});
                    break;
                }
                next_drive = t;
                if (rt.ident->done()) {
                    finish_calibration(u);
                    next_drive = 0.0;
                }
                break;
            }
            case UnitState::RunningFF:
                y = rt.ctrl.step(src[*setups_[u].reference_source], e);
                next_drive = -y;
                break;
            case UnitState::RunningFB:
                y = rt.ctrl.step_feedback(e);
                next_drive = -y;
                break;
            }
            if (is_running(rt.sm.state()) && rt.ctrl.faulted()) {
                rt.sm.fault();
                next_drive = 0.0;
                pending_events_.push_back({u, "fault", {{"reason", rt.ctrl.fault_reason()}, {"state", "Fault"}}});
            }
            drive_[u] = next_drive;
            rt.e_meter.push(e);
            rt.d_meter.push(dist_[u]);
            if (recording_) {
                rec_.error[u].push_back(e);
                rec_.error_disturbance[u].push_back(dist_[u]);
                rec_.output[u].push_back(y);
                rec_.alpha[u].push_back(is_running(rt.sm.state()) ? rt.ctrl.alpha() : 0.0);
            }
        }
        const std::size_t nu = units_.size();
        for (std::size_t m = 0; m < monitor_on_.size(); ++m) {
            monitor_on_[m].push(mic_[nu + m]);
            if (recording_) {
                rec_.monitor[m].push_back(mic_[nu + m]);
                rec_.monitor_disturbance[m].push_back(dist_[nu + m]);
            }
        }
        if ((sample_ - origin_) % telemetry_period_ == 0) close_telemetry_period();
    }

    void close_telemetry_period() {
        for (auto& rt : units_) {
            rt.e_meter.close_period();
            rt.d_meter.close_period();
            const auto on = rt.e_meter.level();
            const auto off = rt.d_meter.level();
            rt.reductions[rt.red_slot] = (on.at_floor && off.at_floor) ? 0.0 : off.db - on.db;
            rt.red_slot = (rt.red_slot + 1) % rt.reductions.size();
            ++rt.red_count;
        }
        for (auto& m : monitor_on_) m.close_period();
        if (!telemetry_enabled_) return;
        for (std::size_t u = 0; u < units_.size(); ++u) pending_telemetry_.push_back(snapshot(u));
    }

    Plant plant_;
    std::vector<UnitSetup> setups_;
    EngineOptions opt_;
    std::vector<UnitRuntime> units_;
    std::vector<LevelMeter> monitor_on_;
    std::vector<double> mic_, dist_, drive_;
    std::uint64_t sample_ = 0;
    std::uint64_t origin_ = 0;
    std::uint64_t telemetry_period_ = 800;
    bool telemetry_enabled_ = true;
    bool recording_ = false;
    Recording rec_;
    std::vector<TelemetryFrame> pending_telemetry_;
    std::vector<EngineEvent> pending_events_;
};

} // namespace ancsim
