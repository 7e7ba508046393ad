#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "ancsim/plant/topology.hpp"
#include "ancsim/sim/engine.hpp"

namespace ancsim::testing {

inline std::vector<double> sine(double f, double amp, std::size_t n, int fs = 8000, double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(i) / fs + phase);
    return x;
}

inline double mean_sq(const std::vector<double>& x, std::size_t from = 0) {
    double acc = 0.0;
    for (std::size_t i = from; i < x.size(); ++i) acc += x[i] * x[i];
    return x.size() > from ? acc / static_cast<double>(x.size() - from) : 0.0;
}

inline double rel_err(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

/// Path with a pure delay and a gain.
inline PathModel delay_path(std::size_t delay, double gain = 1.0) {
    PathModel p;
    p.delay = delay;
    p.gain = gain;
    return p;
}

/// One source, one unit, no monitors: d = src delayed by `primary`, anti-noise
/// delayed by `secondary`. Optional clip on the unit.
inline PlantTopology single_unit_plant(SignalParams src, std::size_t primary = 20, std::size_t secondary = 5,
                                       SaturationModel sat = {}, int fs = 8000) {
    PlantTopology t;
    t.sample_rate = fs;
    t.sources.push_back({std::move(src), std::nullopt});
    UnitSite u;
    u.saturation = sat;
    t.units.push_back(u);
    t.paths = ExplicitPaths{{{delay_path(primary)}}, {{delay_path(secondary)}}};
    return t;
}

/// Temporary directory removed on scope exit.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("ancsim-" + tag + "-" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

inline std::filesystem::path source_dir() { return ANCSIM_SOURCE_DIR; }

} // namespace ancsim::testing
