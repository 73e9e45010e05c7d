#pragma once

#include <filesystem>

#include "twibridge/image.hpp"

namespace twibridge::pnm {

// Binary P6, maxval 255. Single-channel images are expanded to gray RGB.
void write_ppm(const std::filesystem::path& path, const Image& image);
Image read_ppm(const std::filesystem::path& path);

// Binary P5, maxval 255; 255 encodes VOID.
void write_pgm(const std::filesystem::path& path, const LabelMap& labels);
LabelMap read_pgm(const std::filesystem::path& path);

}  // namespace twibridge::pnm
