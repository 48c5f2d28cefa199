// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "elastic/grid.hpp"

namespace elastic {

enum class ImageFormat { pgm, png };

ImageFormat parse_image_format(const std::string& text);
std::string extension(ImageFormat format);

/// Maps [-1, 1] to [0, 255] with round-half-up; values outside are clamped.
std::uint8_t to_byte(double v);

/// PGM (P5) for single-channel grids; PNG for 1 (gray) or 3 (RGB) channels.
std::vector<std::uint8_t> render_image(const Grid& g, ImageFormat format);

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes);
void write_file(const std::string& path, const std::string& text);

}  // namespace elastic
