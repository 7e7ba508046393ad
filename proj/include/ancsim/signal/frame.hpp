#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ancsim/errors.hpp"

namespace ancsim {

inline constexpr int kDefaultSampleRate = 8000;

/// A contiguous block of samples at a fixed rate. All streaming in the library
/// moves in frames; the frame length is simply `samples.size()`.
struct SampleFrame {
    std::vector<double> samples;
    int sample_rate = kDefaultSampleRate;

    SampleFrame() = default;
    SampleFrame(std::vector<double> s, int fs) : samples(std::move(s)), sample_rate(fs) {}
    SampleFrame(std::size_t n, int fs) : samples(n, 0.0), sample_rate(fs) {}

    std::size_t size() const noexcept { return samples.size(); }
    bool empty() const noexcept { return samples.empty(); }
    double operator[](std::size_t i) const { return samples[i]; }
    double& operator[](std::size_t i) { return samples[i]; }
    std::span<const double> view() const noexcept { return samples; }
};

inline bool all_finite(std::span<const double> xs) noexcept {
    for (double x : xs) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void require_finite(std::span<const double> xs, const char* what) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!std::isfinite(xs[i])) {
            throw NumericFault(std::string(what) + ": non-finite sample at index " + std::to_string(i));
        }
    }
}

/// Concatenate frames into one frame (rates must agree).
inline SampleFrame concat(std::span<const SampleFrame> frames) {
    SampleFrame out;
    if (frames.empty()) return out;
    out.sample_rate = frames.front().sample_rate;
    for (const auto& f : frames) {
        if (f.sample_rate != out.sample_rate) throw ConfigError("concat: sample-rate mismatch");
        out.samples.insert(out.samples.end(), f.samples.begin(), f.samples.end());
    }
    return out;
}

/// Split a flat signal into frames of `frame_len` (last frame may be short).
inline std::vector<SampleFrame> split(std::span<const double> xs, std::size_t frame_len, int fs) {
    if (frame_len == 0) throw ConfigError("split: frame_len must be positive");
    std::vector<SampleFrame> out;
    for (std::size_t i = 0; i < xs.size(); i += frame_len) {
        const auto n = std::min(frame_len, xs.size() - i);
        out.emplace_back(std::vector<double>(xs.begin() + static_cast<std::ptrdiff_t>(i),
                                             xs.begin() + static_cast<std::ptrdiff_t>(i + n)),
                         fs);
    }
    return out;
}

} // namespace ancsim
