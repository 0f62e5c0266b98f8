#pragma once

#include <filesystem>

#include "dynodom/types.hpp"

namespace dynodom {

/// Reads a PNG as 16-bit single channel. 8-bit gray input is widened.
ImageOf<std::uint16_t> read_png_u16(const std::filesystem::path& path);

/// Reads a PNG as interleaved RGB. Gray and alpha inputs are converted.
ColorImage read_png_rgb(const std::filesystem::path& path);

void write_png_u16(const std::filesystem::path& path, const ImageOf<std::uint16_t>& image);
void write_png_rgb(const std::filesystem::path& path, const ColorImage& image);

}  // namespace dynodom
