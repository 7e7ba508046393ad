#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/signal/frame.hpp"

namespace ancsim {

/// SplitMix64 finaliser applied to (seed, counter). Sample n of a stream depends
/// only on the seed and n, which keeps streams reproducible across platforms.
inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t counter) noexcept {
    std::uint64_t z = seed + (counter + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Uniform in [-1, 1).
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter) noexcept {
    const double u = static_cast<double>(counter_hash(seed, counter) >> 11) * 0x1.0p-53;
    return 2.0 * u - 1.0;
}

enum class SignalKind { Tone, MultiTone, WhiteNoise, GensetProfile };

inline std::string_view to_string(SignalKind k) {
    switch (k) {
    case SignalKind::Tone: return "tone";
    case SignalKind::MultiTone: return "multi-tone";
    case SignalKind::WhiteNoise: return "white-noise";
    case SignalKind::GensetProfile: return "genset-profile";
    }
    return "?";
}

inline SignalKind signal_kind_from_string(std::string_view s) {
    if (s == "tone") return SignalKind::Tone;
    if (s == "multi-tone") return SignalKind::MultiTone;
    if (s == "white-noise") return SignalKind::WhiteNoise;
    if (s == "genset-profile") return SignalKind::GensetProfile;
    throw ConfigError("unknown signal kind '" + std::string(s) + "'");
}

struct SignalParams {
    SignalKind kind = SignalKind::Tone;
    std::vector<double> frequencies;  // Hz
    std::vector<double> amplitudes;   // digital full scale (peak)
    double noise_amplitude = 0.0;     // white noise peak (uniform in [-a, a))
    std::uint64_t seed = 0;

    // Genset stand-in: 77 Hz fundamental, 2f/3f harmonics and a white floor,
    // levels relative to the fundamental.
    double harmonic2_db = -10.0;
    double harmonic3_db = -16.0;
    double floor_db = -40.0;

    static SignalParams tone(double f, double amp) {
        SignalParams p;
        p.kind = SignalKind::Tone;
        p.frequencies = {f};
        p.amplitudes = {amp};
        return p;
    }
    static SignalParams white(double amp, std::uint64_t seed) {
        SignalParams p;
        p.kind = SignalKind::WhiteNoise;
        p.noise_amplitude = amp;
        p.seed = seed;
        return p;
    }
    static SignalParams genset(double amp, std::uint64_t seed, double fundamental = 77.0) {
        SignalParams p;
        p.kind = SignalKind::GensetProfile;
        p.frequencies = {fundamental};
        p.amplitudes = {amp};
        p.seed = seed;
        return p;
    }
};

/// Deterministic signal source. Identical params (including seed) give
/// bit-identical streams; successive calls continue the same stream.
class SignalGen {
public:
    SignalGen(SignalParams params, int sample_rate) : p_(std::move(params)), fs_(sample_rate) {
        if (fs_ <= 0) throw ConfigError("SignalGen: sample rate must be positive");
        build_components();
        for (const auto& c : comps_) {
            if (!(c.freq >= 0.0) || c.freq >= fs_ / 2.0) {
                throw AliasingError("SignalGen: frequency " + std::to_string(c.freq) +
                                    " Hz is not below fs/2 = " + std::to_string(fs_ / 2.0) + " Hz");
            }
        }
    }

    const SignalParams& params() const noexcept { return p_; }
    int sample_rate() const noexcept { return fs_; }
    std::uint64_t position() const noexcept { return n_; }

    double next() noexcept {
        const double t = static_cast<double>(n_);
        double acc = 0.0;
        for (const auto& c : comps_) {
            acc += c.amp * std::sin(2.0 * std::numbers::pi * c.freq * t / fs_);
        }
        if (noise_amp_ != 0.0) acc += noise_amp_ * counter_uniform(p_.seed, n_);
        ++n_;
        return acc;
    }

    SampleFrame generate(std::size_t n_samples) {
        if (n_samples == 0) throw ConfigError("generate: n_samples must be positive");
        SampleFrame out(n_samples, fs_);
        for (auto& s : out.samples) s = next();
        return out;
    }

    void reset() noexcept { n_ = 0; }

private:
    struct Component {
        double freq;
        double amp;
    };

    void build_components() {
        switch (p_.kind) {
        case SignalKind::Tone:
            if (p_.frequencies.size() != 1 || p_.amplitudes.size() != 1) {
                throw ConfigError("tone needs exactly one frequency and one amplitude");
            }
            comps_.push_back({p_.frequencies[0], p_.amplitudes[0]});
            break;
        case SignalKind::MultiTone:
            if (p_.frequencies.empty() || p_.frequencies.size() != p_.amplitudes.size()) {
                throw ConfigError("multi-tone needs matching frequency and amplitude lists");
            }
            for (std::size_t i = 0; i < p_.frequencies.size(); ++i) {
                comps_.push_back({p_.frequencies[i], p_.amplitudes[i]});
            }
            break;
        case SignalKind::WhiteNoise:
            noise_amp_ = p_.noise_amplitude;
            break;
        case SignalKind::GensetProfile: {
            if (p_.frequencies.size() != 1 || p_.amplitudes.size() != 1) {
                throw ConfigError("genset-profile needs one fundamental frequency and amplitude");
            }
            const double f0 = p_.frequencies[0];
            const double a0 = p_.amplitudes[0];
            comps_.push_back({f0, a0});
            comps_.push_back({2.0 * f0, a0 * db_to_amplitude(p_.harmonic2_db)});
            comps_.push_back({3.0 * f0, a0 * db_to_amplitude(p_.harmonic3_db)});
            // Floor RMS sits floor_db below the fundamental's RMS; uniform noise
            // of peak a has RMS a/sqrt(3).
            const double fundamental_rms = a0 / std::numbers::sqrt2;
            noise_amp_ = fundamental_rms * db_to_amplitude(p_.floor_db) * std::numbers::sqrt3;
            break;
        }
        }
    }

    static double db_to_amplitude(double db) { return std::pow(10.0, db / 20.0); }

    SignalParams p_;
    int fs_;
    std::vector<Component> comps_;
    double noise_amp_ = 0.0;
    std::uint64_t n_ = 0;
};

} // namespace ancsim
