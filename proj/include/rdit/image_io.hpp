#pragma once

#include <string>

#include "rdit/masks.hpp"
#include "rdit/metrics.hpp"

namespace rdit {

// P2/P5 (PGM) and P3/P6 (PPM), maxval 255.
void write_pgm(const std::string& path, const ImageBuffer& img, bool binary = false);
void write_ppm(const std::string& path, const ImageBuffer& img, bool binary = false);
ImageBuffer read_pnm(const std::string& path);

ImageBuffer mask_to_image(const RegionMask& mask, const LatentGrid& grid);

}  // namespace rdit
