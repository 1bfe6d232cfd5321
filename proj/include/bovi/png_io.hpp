#pragma once

#include "bovi/types.hpp"

#include <filesystem>

namespace bovi::png {

/// Decode any libpng-readable file to 8-bit RGB planes.
ColorImage read_rgb8(const std::filesystem::path& path);

void write_rgb8(const std::filesystem::path& path, const ColorImage& img);

/// Decode to single-channel 8-bit gray (color inputs are averaged).
Grid<std::uint8_t> read_gray8(const std::filesystem::path& path);

void write_gray8(const std::filesystem::path& path, const Grid<std::uint8_t>& img);

} // namespace bovi::png
