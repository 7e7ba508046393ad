#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "ancsim/errors.hpp"

namespace ancsim {

enum class SaturationKind { None, HardClip, TanhSoft };

inline std::string_view to_string(SaturationKind k) {
    switch (k) {
    case SaturationKind::None: return "none";
    case SaturationKind::HardClip: return "hard-clip";
    case SaturationKind::TanhSoft: return "tanh-soft";
    }
    return "?";
}

inline SaturationKind saturation_kind_from_string(std::string_view s) {
    if (s == "none") return SaturationKind::None;
    if (s == "hard-clip") return SaturationKind::HardClip;
    if (s == "tanh-soft") return SaturationKind::TanhSoft;
    throw ConfigError("unknown saturation kind '" + std::string(s) + "'");
}

/// Amplifier/actuator nonlinearity applied to each unit's drive signal.
struct SaturationModel {
    SaturationKind kind = SaturationKind::None;
    double limit = 1.0;

    void validate() const {
        if (kind != SaturationKind::None && !(limit > 0.0)) throw ConfigError("saturation limit must be > 0");
    }
};

inline double saturate(const SaturationModel& m, double x) noexcept {
    switch (m.kind) {
    case SaturationKind::None: return x;
    case SaturationKind::HardClip: return std::clamp(x, -m.limit, m.limit);
    case SaturationKind::TanhSoft: return m.limit * std::tanh(x / m.limit);
    }
    return x;
}

} // namespace ancsim
