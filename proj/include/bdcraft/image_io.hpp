#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "bdcraft/raster.hpp"

namespace bdcraft {

/// Decodes a PNG or JPEG file into a grayscale raster in [0, 1] (8-bit
/// samples divided by 255, then BT.601 luma). Throws DataError when the file
/// is missing or undecodable.
Raster load_grayscale(const std::filesystem::path& path);

/// Quantises to 8 bits (clamp to [0, 1], round half away from zero).
std::vector<std::uint8_t> to_gray8(const Raster& img);

/// Writes an 8-bit single-channel PNG.
void save_png(const Raster& img, const std::filesystem::path& path);

/// True for the extensions the loader accepts (.png, .jpg, .jpeg; any case).
bool is_supported_image(const std::filesystem::path& path);

}  // namespace bdcraft
