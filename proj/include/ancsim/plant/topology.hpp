#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ancsim/errors.hpp"
#include "ancsim/plant/geometry.hpp"
#include "ancsim/plant/path.hpp"
#include "ancsim/plant/saturation.hpp"
#include "ancsim/signal/generator.hpp"

namespace ancsim {

struct NoiseSource {
    SignalParams signal;
    std::optional<Vec3> position;
};

struct UnitSite {
    std::optional<Vec3> speaker;
    std::optional<Vec3> error_mic;
    SaturationModel saturation;
};

/// Explicit path matrices. Microphones are ordered error mics (one per unit)
/// first, then monitor mics.
struct ExplicitPaths {
    std::vector<std::vector<PathModel>> source_to_mic;
    std::vector<std::vector<PathModel>> unit_to_mic;
};

/// Everything the plant needs for one scenario. Either `paths` is given, or
/// all positions are given and paths are derived from free-field geometry.
struct PlantTopology {
    int sample_rate = kDefaultSampleRate;
    std::vector<NoiseSource> sources;
    std::vector<UnitSite> units;
    std::vector<Vec3> monitor_mics;
    // Extra observation points (geometry mode only), appended after the monitors.
    std::vector<Vec3> field_points;
    std::optional<ExplicitPaths> paths;
    FreeFieldOptions free_field;

    bool uses_geometry() const noexcept { return !paths.has_value(); }

    std::size_t num_monitors() const {
        if (paths && !paths->source_to_mic.empty()) {
            const auto n = paths->source_to_mic.front().size();
            return n >= units.size() ? n - units.size() : 0;
        }
        return monitor_mics.size();
    }

    std::size_t num_mics() const { return units.size() + num_monitors() + field_points.size(); }
};

} // namespace ancsim
