#pragma once

#include <string>

#include "flowpix/encode.hpp"

namespace flowpix {

// 8-bit single-channel grayscale, 16x16, no alpha, not interlaced.
void write_png(const Thumbnail& thumbnail, const std::string& path);
void write_png(const PixelGrid& pixels, const std::string& path);

// Throws Error(format) for anything other than an 8-bit grayscale 16x16 image.
PixelGrid read_png(const std::string& path);

}  // namespace flowpix
