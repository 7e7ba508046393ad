#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "ancsim/errors.hpp"

namespace ancsim {

namespace detail {

template <typename T>
void put_le(std::ofstream& out, T v) {
    static_assert(std::endian::native == std::endian::little, "little-endian host expected");
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

inline std::ofstream open_binary(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open '" + path.string() + "' for writing");
    return out;
}

} // namespace detail

/// Raw dump: 32-bit float, little-endian, mono, no header.
inline void write_raw_f32(const std::filesystem::path& path, std::span<const double> xs) {
    auto out = detail::open_binary(path);
    for (double x : xs) detail::put_le(out, static_cast<float>(x));
}

inline std::vector<float> read_raw_f32(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::vector<float> out;
    float v;
    while (in.read(reinterpret_cast<char*>(&v), sizeof v)) out.push_back(v);
    return out;
}

/// IEEE-float WAV (format tag 3), mono. `scale` maps digital units to the file
/// (signals here can exceed 1.0 because amplitude 1.0 is 94 dB SPL).
inline void write_wav_f32(const std::filesystem::path& path, std::span<const double> xs, int sample_rate,
                          double scale = 1.0) {
    auto out = detail::open_binary(path);
    const std::uint32_t data_bytes = static_cast<std::uint32_t>(xs.size() * sizeof(float));
    out.write("RIFF", 4);
    detail::put_le<std::uint32_t>(out, 36 + data_bytes);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    detail::put_le<std::uint32_t>(out, 16);
    detail::put_le<std::uint16_t>(out, 3);  // WAVE_FORMAT_IEEE_FLOAT
    detail::put_le<std::uint16_t>(out, 1);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(sample_rate) * 4);
    detail::put_le<std::uint16_t>(out, 4);
    detail::put_le<std::uint16_t>(out, 32);
    out.write("data", 4);
    detail::put_le<std::uint32_t>(out, data_bytes);
    for (double x : xs) detail::put_le(out, static_cast<float>(x * scale));
}

} // namespace ancsim
