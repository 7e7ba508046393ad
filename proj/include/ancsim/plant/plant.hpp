#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/plant/geometry.hpp"
#include "ancsim/plant/path.hpp"
#include "ancsim/plant/saturation.hpp"
#include "ancsim/plant/topology.hpp"
#include "ancsim/signal/frame.hpp"
#include "ancsim/signal/generator.hpp"
#include "ancsim/signal/tap_line.hpp"

namespace ancsim {

/// Output of one frame-level plant step.
struct PlantFrames {
    std::vector<SampleFrame> error;                // per unit
    std::vector<SampleFrame> monitor;              // per monitor/field mic
    std::vector<SampleFrame> error_disturbance;    // sources only, per unit
    std::vector<SampleFrame> monitor_disturbance;  // sources only, per monitor/field mic
};

/// Linear acoustic plant with per-unit output saturation.
///
/// Each microphone observes the sum over sources and units of the path
/// response to that input. The source-only part of every microphone (the
/// disturbance) is tracked alongside, so oracle tests can compare against it.
class Plant {
public:
    explicit Plant(const PlantTopology& topo) : fs_(topo.sample_rate), num_units_(topo.units.size()) {
        if (fs_ <= 0) throw ConfigError("plant: sample rate must be positive");
        if (topo.sources.empty()) throw ConfigError("plant: at least one noise source is required");
        for (const auto& src : topo.sources) gens_.emplace_back(src.signal, fs_);
        for (const auto& u : topo.units) {
            u.saturation.validate();
            sat_.push_back(u.saturation);
        }
        num_mics_ = topo.num_mics();

        std::vector<std::vector<PathModel>> src_paths;
        std::vector<std::vector<PathModel>> unit_paths;
        if (topo.uses_geometry()) {
            std::vector<Vec3> mics;
            for (std::size_t i = 0; i < topo.units.size(); ++i) {
                if (!topo.units[i].speaker || !topo.units[i].error_mic) {
                    throw ConfigError("plant: unit " + std::to_string(i) + " needs speaker and error-mic positions");
                }
                mics.push_back(*topo.units[i].error_mic);
            }
            mics.insert(mics.end(), topo.monitor_mics.begin(), topo.monitor_mics.end());
            mics.insert(mics.end(), topo.field_points.begin(), topo.field_points.end());
            std::vector<Vec3> src_pos, unit_pos;
            for (std::size_t i = 0; i < topo.sources.size(); ++i) {
                if (!topo.sources[i].position) {
                    throw ConfigError("plant: source " + std::to_string(i) + " needs a position");
                }
                src_pos.push_back(*topo.sources[i].position);
            }
            for (const auto& u : topo.units) unit_pos.push_back(*u.speaker);
            src_paths = geometry_to_paths(src_pos, mics, fs_, topo.free_field, &warnings_);
            unit_paths = geometry_to_paths(unit_pos, mics, fs_, topo.free_field, &warnings_);
        } else {
            if (!topo.field_points.empty()) throw ConfigError("plant: field points require geometry mode");
            src_paths = topo.paths->source_to_mic;
            unit_paths = topo.paths->unit_to_mic;
        }
        check_matrix(src_paths, topo.sources.size(), "source_to_mic");
        check_matrix(unit_paths, num_units_, "unit_to_mic");
        if (num_mics_ < num_units_) throw ConfigError("plant: fewer microphones than units");

        src_hist_ = build_inputs(src_paths, src_taps_);
        drive_hist_ = build_inputs(unit_paths, unit_taps_);
        src_paths_ = std::move(src_paths);
        unit_paths_ = std::move(unit_paths);
        last_drive_.assign(num_units_, 0.0);
        last_source_.assign(gens_.size(), 0.0);
        tmp_drive_.assign(num_units_, 0.0);
    }

    int sample_rate() const noexcept { return fs_; }
    std::size_t num_sources() const noexcept { return gens_.size(); }
    std::size_t num_units() const noexcept { return num_units_; }
    std::size_t num_mics() const noexcept { return num_mics_; }
    std::size_t num_monitors() const noexcept { return num_mics_ - num_units_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    /// Impulse response from unit `unit`'s drive to microphone `mic` (excluding saturation).
    std::vector<double> unit_path_response(std::size_t unit, std::size_t mic) const {
        return unit_paths_.at(unit).at(mic).impulse_response();
    }
    std::vector<double> source_path_response(std::size_t src, std::size_t mic) const {
        return src_paths_.at(src).at(mic).impulse_response();
    }

    /// Source samples emitted on the last tick (what an ideal reference microphone sees).
    std::span<const double> last_source() const noexcept { return last_source_; }

    /// Drive actually delivered to the paths on the last tick (after saturation).
    std::span<const double> last_drive() const noexcept { return last_drive_; }

    /// Advances one sample. `drives` are the unit inputs for this sample (before
    /// saturation); a zero-delay path responds within the same tick.
    void tick(std::span<const double> drives, std::span<double> mic_out, std::span<double> disturbance_out) {
        if (drives.size() != num_units_) throw ConfigError("plant: drive count does not match unit count");
        if (mic_out.size() < num_mics_ || disturbance_out.size() < num_mics_) {
            throw ConfigError("plant: output spans too small");
        }
        for (std::size_t s = 0; s < gens_.size(); ++s) {
            last_source_[s] = gens_[s].next();
            src_hist_[s].push(last_source_[s]);
        }
        for (std::size_t u = 0; u < num_units_; ++u) {
            const double v = saturate(sat_[u], drives[u]);
            last_drive_[u] = v;
            drive_hist_[u].push(v);
        }
        for (std::size_t m = 0; m < num_mics_; ++m) {
            double d = 0.0;
            for (const auto& t : src_taps_[m]) d += t.gain * dot(t.fir, src_hist_[t.input].view().subspan(t.delay));
            double a = 0.0;
            for (const auto& t : unit_taps_[m]) a += t.gain * dot(t.fir, drive_hist_[t.input].view().subspan(t.delay));
            disturbance_out[m] = d;
            mic_out[m] = d + a;
        }
    }

    /// Frame-level step for open-loop use: all unit drive frames are known in advance.
    PlantFrames step(std::span<const SampleFrame> drives) {
        if (drives.size() != num_units_) throw ConfigError("plant: drive frame count does not match unit count");
        std::size_t n = drives.empty() ? 0 : drives.front().size();
        for (const auto& f : drives) {
            if (f.size() != n) throw ConfigError("plant: drive frames are not aligned");
            require_finite(f.samples, "plant drive");
        }
        if (drives.empty()) throw ConfigError("plant: frame step needs at least one unit (use run_open for none)");
        return run(n, [&](std::size_t k, std::span<double> out) {
            for (std::size_t u = 0; u < num_units_; ++u) out[u] = drives[u].samples[k];
        });
    }

    /// Advances n samples with all drives at zero.
    PlantFrames run_silent(std::size_t n) {
        return run(n, [](std::size_t, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); });
    }

private:
    struct Tap {
        std::size_t input;
        std::size_t delay;
        std::vector<double> fir;
        double gain;
    };

    template <typename DriveFn>
    PlantFrames run(std::size_t n, DriveFn&& drive_at) {
        PlantFrames out;
        const auto nm = num_monitors();
        out.error.assign(num_units_, SampleFrame(n, fs_));
        out.error_disturbance.assign(num_units_, SampleFrame(n, fs_));
        out.monitor.assign(nm, SampleFrame(n, fs_));
        out.monitor_disturbance.assign(nm, SampleFrame(n, fs_));
        std::vector<double> mic(num_mics_), dist(num_mics_);
        for (std::size_t k = 0; k < n; ++k) {
            drive_at(k, std::span<double>(tmp_drive_));
            tick(tmp_drive_, mic, dist);
            for (std::size_t u = 0; u < num_units_; ++u) {
                out.error[u].samples[k] = mic[u];
                out.error_disturbance[u].samples[k] = dist[u];
            }
            for (std::size_t j = 0; j < nm; ++j) {
                out.monitor[j].samples[k] = mic[num_units_ + j];
                out.monitor_disturbance[j].samples[k] = dist[num_units_ + j];
            }
        }
        return out;
    }

    void check_matrix(const std::vector<std::vector<PathModel>>& m, std::size_t rows, const char* name) const {
        if (m.size() != rows) {
            throw ConfigError(std::string("plant: ") + name + " has " + std::to_string(m.size()) + " rows, expected " +
                              std::to_string(rows));
        }
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m[i].size() != num_mics_) {
                throw ConfigError(std::string("plant: ") + name + " row " + std::to_string(i) + " has " +
                                  std::to_string(m[i].size()) + " paths, expected one per microphone (" +
                                  std::to_string(num_mics_) + ")");
            }
            for (const auto& p : m[i]) p.validate();
        }
    }

    std::vector<TapLine> build_inputs(const std::vector<std::vector<PathModel>>& m,
                                      std::vector<std::vector<Tap>>& taps) const {
        taps.assign(num_mics_, {});
        std::vector<TapLine> hist;
        for (std::size_t i = 0; i < m.size(); ++i) {
            std::size_t len = 1;
            for (std::size_t j = 0; j < m[i].size(); ++j) {
                const auto& p = m[i][j];
                len = std::max(len, p.length());
                if (p.gain != 0.0) taps[j].push_back({i, p.delay, p.fir, p.gain});
            }
            hist.emplace_back(len);
        }
        return hist;
    }

    int fs_;
    std::size_t num_units_;
    std::size_t num_mics_ = 0;
    std::vector<SignalGen> gens_;
    std::vector<SaturationModel> sat_;
    std::vector<std::vector<PathModel>> src_paths_, unit_paths_;
    std::vector<TapLine> src_hist_, drive_hist_;
    std::vector<std::vector<Tap>> src_taps_, unit_taps_;
    std::vector<double> last_drive_, last_source_, tmp_drive_;
    std::vector<std::string> warnings_;
};

} // namespace ancsim
