#pragma once

#include <cstdint>
#include <vector>

#include "rdit/errors.hpp"

namespace rdit {

enum class Axis { Height, Width };

struct RegionSpec {
    Axis axis = Axis::Height;
    int count = 1;
};

struct LatentGrid {
    int height = 1;
    int width = 1;
    int cells() const { return height * width; }
};

// Binary indicator over the flattened (row-major) latent grid.
struct RegionMask {
    int region_index = 0;
    std::vector<uint8_t> values;

    size_t popcount() const;
};

// Adjacent stripes along one axis; region i covers indices
// floor(i*L/N) .. floor((i+1)*L/N)-1 of the chosen axis.
std::vector<RegionMask> divide_regions(const RegionSpec& spec, const LatentGrid& grid);

// 3x3-style grid layout: product of a row-stripe and a column-stripe
// partition, rows*cols regions in row-major region order.
std::vector<RegionMask> divide_regions_grid(int rows, int cols, const LatentGrid& grid);

// Nearest-neighbor downsample of a full-resolution binary mask to the latent
// grid, sampling the last cell of each block. H, W must be integer multiples
// of grid.height/width.
RegionMask downsample_mask(const std::vector<uint8_t>& full, int full_h, int full_w,
                           const LatentGrid& grid, int region_index = 0);

RegionMask flatten_mask(const std::vector<std::vector<uint8_t>>& mask2d, int region_index = 0);

// Throws RegionError unless the masks cover every cell of [0, cells) exactly once.
void check_partition(const std::vector<RegionMask>& masks, size_t cells);

}  // namespace rdit
