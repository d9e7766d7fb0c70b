#pragma once

#include <filesystem>

#include "cann/regions/region.hpp"

namespace cann::io {

/// Any PNG libpng can decode, converted to 8-bit RGB.
regions::RgbImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const regions::RgbImage& img);

}  // namespace cann::io
