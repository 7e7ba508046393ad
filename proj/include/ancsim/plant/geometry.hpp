#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/plant/path.hpp"

namespace ancsim {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
    double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
};

inline double distance(const Vec3& a, const Vec3& b) noexcept { return (a - b).norm(); }

inline constexpr double kSpeedOfSound = 343.0;
inline constexpr double kMinDistance = 0.05;

struct FreeFieldOptions {
    double speed_of_sound = kSpeedOfSound;
    double r_min = kMinDistance;
};

/// Free-field monopole path between two points: delay round(fs*r/c) samples and
/// 1/max(r, r_min) spreading gain. Distances below r_min are clamped; the
/// optional `warnings` list records that.
inline PathModel free_field_path(const Vec3& from, const Vec3& to, int sample_rate, const FreeFieldOptions& opt = {},
                                 std::vector<std::string>* warnings = nullptr) {
    if (sample_rate <= 0) throw ConfigError("sample rate must be positive");
    if (!(opt.speed_of_sound > 0.0)) throw ConfigError("speed of sound must be positive");
    const double r = distance(from, to);
    if (r < opt.r_min && warnings) {
        warnings->push_back("distance " + std::to_string(r) + " m clamped to r_min = " + std::to_string(opt.r_min) +
                            " m");
    }
    PathModel p;
    p.delay = static_cast<std::size_t>(std::llround(sample_rate * r / opt.speed_of_sound));
    p.fir = {1.0};
    p.gain = 1.0 / std::max(r, opt.r_min);
    return p;
}

/// Path matrix [from][to] for every pair.
inline std::vector<std::vector<PathModel>> geometry_to_paths(const std::vector<Vec3>& from, const std::vector<Vec3>& to,
                                                             int sample_rate, const FreeFieldOptions& opt = {},
                                                             std::vector<std::string>* warnings = nullptr) {
    std::vector<std::vector<PathModel>> m(from.size());
    for (std::size_t i = 0; i < from.size(); ++i) {
        m[i].reserve(to.size());
        for (const auto& p : to) m[i].push_back(free_field_path(from[i], p, sample_rate, opt, warnings));
    }
    return m;
}

} // namespace ancsim
