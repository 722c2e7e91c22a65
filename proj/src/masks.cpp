#include "rdit/masks.hpp"

#include <string>

namespace rdit {

size_t RegionMask::popcount() const {
    size_t n = 0;
    for (uint8_t v : values) n += v;
    return n;
}

static std::vector<std::pair<int, int>> stripe_bounds(int length, int n) {
    // half-open [lo, hi) per stripe, floor(i*L/N) boundaries
    std::vector<std::pair<int, int>> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        int lo = static_cast<int>((static_cast<int64_t>(i) * length) / n);
        int hi = static_cast<int>((static_cast<int64_t>(i + 1) * length) / n);
        out.emplace_back(lo, hi);
    }
    return out;
}

std::vector<RegionMask> divide_regions(const RegionSpec& spec, const LatentGrid& grid) {
    if (grid.height < 1 || grid.width < 1) throw RegionError("latent grid must be at least 1x1");
    if (spec.count < 1) throw RegionError("region count must be >= 1");
    int axis_len = spec.axis == Axis::Height ? grid.height : grid.width;
    if (spec.count > axis_len) {
        throw RegionError("region count " + std::to_string(spec.count) +
                          " exceeds axis length " + std::to_string(axis_len));
    }
    auto bounds = stripe_bounds(axis_len, spec.count);
    std::vector<RegionMask> masks;
    masks.reserve(spec.count);
    for (int i = 0; i < spec.count; ++i) {
        RegionMask m;
        m.region_index = i;
        m.values.assign(static_cast<size_t>(grid.cells()), 0);
        for (int r = 0; r < grid.height; ++r) {
            for (int c = 0; c < grid.width; ++c) {
                int coord = spec.axis == Axis::Height ? r : c;
                if (coord >= bounds[i].first && coord < bounds[i].second) {
                    m.values[static_cast<size_t>(r) * grid.width + c] = 1;
                }
            }
        }
        masks.push_back(std::move(m));
    }
    check_partition(masks, static_cast<size_t>(grid.cells()));
    return masks;
}

std::vector<RegionMask> divide_regions_grid(int rows, int cols, const LatentGrid& grid) {
    if (rows < 1 || cols < 1) throw RegionError("grid layout needs rows >= 1 and cols >= 1");
    if (rows > grid.height || cols > grid.width) {
        throw RegionError("grid layout exceeds latent dimensions");
    }
    auto rb = stripe_bounds(grid.height, rows);
    auto cb = stripe_bounds(grid.width, cols);
    std::vector<RegionMask> masks;
    masks.reserve(static_cast<size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            RegionMask m;
            m.region_index = i * cols + j;
            m.values.assign(static_cast<size_t>(grid.cells()), 0);
            for (int r = rb[i].first; r < rb[i].second; ++r) {
                for (int c = cb[j].first; c < cb[j].second; ++c) {
                    m.values[static_cast<size_t>(r) * grid.width + c] = 1;
                }
            }
            masks.push_back(std::move(m));
        }
    }
    check_partition(masks, static_cast<size_t>(grid.cells()));
    return masks;
}

RegionMask downsample_mask(const std::vector<uint8_t>& full, int full_h, int full_w,
                           const LatentGrid& grid, int region_index) {
    if (full_h < grid.height || full_w < grid.width ||
        full_h % grid.height != 0 || full_w % grid.width != 0) {
        throw RegionError("downsample requires full dims to be integer multiples of the latent grid");
    }
    if (full.size() != static_cast<size_t>(full_h) * full_w) {
        throw RegionError("full-resolution mask size mismatch");
    }
    int bh = full_h / grid.height;
    int bw = full_w / grid.width;
    RegionMask m;
    m.region_index = region_index;
    m.values.assign(static_cast<size_t>(grid.cells()), 0);
    // Nearest-neighbor at the last cell of each block: for floor-boundary
    // stripe partitions this commutes exactly with dividing at latent
    // resolution, which center sampling does not.
    for (int r = 0; r < grid.height; ++r) {
        for (int c = 0; c < grid.width; ++c) {
            int fr = r * bh + (bh - 1);
            int fc = c * bw + (bw - 1);
            m.values[static_cast<size_t>(r) * grid.width + c] =
                full[static_cast<size_t>(fr) * full_w + fc] ? 1 : 0;
        }
    }
    return m;
}

RegionMask flatten_mask(const std::vector<std::vector<uint8_t>>& mask2d, int region_index) {
    RegionMask m;
    m.region_index = region_index;
    size_t w = mask2d.empty() ? 0 : mask2d[0].size();
    for (const auto& row : mask2d) {
        if (row.size() != w) throw RegionError("ragged 2d mask");
        for (uint8_t v : row) m.values.push_back(v ? 1 : 0);
    }
    return m;
}

void check_partition(const std::vector<RegionMask>& masks, size_t cells) {
    if (masks.empty()) throw RegionError("empty mask list");
    for (const auto& m : masks) {
        if (m.values.size() != cells) {
            throw RegionError("mask length does not match grid size");
        }
        if (m.popcount() == 0) throw RegionError("empty region mask");
    }
    for (size_t p = 0; p < cells; ++p) {
        int sum = 0;
        for (const auto& m : masks) sum += m.values[p];
        if (sum != 1) {
            throw RegionError("masks do not partition the grid at cell " + std::to_string(p));
        }
    }
}

}  // namespace rdit
