#pragma once

#include <vector>

#include "rdit/masks.hpp"
#include "rdit/stack.hpp"

namespace rdit {

struct ImageBuffer {
    int height = 0;
    int width = 0;
    int channels = 1;  // 1 or 3
    std::vector<float> values;  // row-major, channel-interleaved, in [0,1]

    size_t numel() const { return values.size(); }
};

void check_image(const ImageBuffer& img);

// 10*log10(1/MSE) with unit dynamic range; +inf for identical images.
double psnr(const ImageBuffer& a, const ImageBuffer& b);

// Mean local SSIM, 8x8 uniform sliding window, stride 1, C1=0.01^2, C2=0.03^2;
// channels averaged.
double ssim(const ImageBuffer& a, const ImageBuffer& b, int window = 8);

struct InfluenceScore {
    double inside = 0.0;
    double outside = 0.0;
    double ratio = 0.0;
};

// Perturbs regional state j (same norm, seeded direction), runs the stack
// twice and compares RMS output change inside vs outside region j.
InfluenceScore regional_influence_score(const Stack& stack,
                                        const std::vector<RegionMask>& masks,
                                        const Conditioning& cond, int region_j,
                                        uint64_t perturb_seed,
                                        float timestep = 0.5f);

}  // namespace rdit
