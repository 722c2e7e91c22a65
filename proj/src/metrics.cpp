#include "rdit/metrics.hpp"

#include <cmath>
#include <limits>

namespace rdit {

void check_image(const ImageBuffer& img) {
    if (img.height < 1 || img.width < 1) throw DimensionError("empty image");
    if (img.channels != 1 && img.channels != 3) {
        throw DimensionError("image must have 1 or 3 channels");
    }
    size_t expect = static_cast<size_t>(img.height) * img.width * img.channels;
    if (img.values.size() != expect) throw DimensionError("image buffer size mismatch");
    for (float v : img.values) {
        if (!(v >= 0.0f && v <= 1.0f)) {
            throw NumericError("image values must lie in [0, 1]");
        }
    }
}

static void check_same_dims(const ImageBuffer& a, const ImageBuffer& b) {
    check_image(a);
    check_image(b);
    if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
        throw DimensionError("image dimension mismatch");
    }
}

double psnr(const ImageBuffer& a, const ImageBuffer& b) {
    check_same_dims(a, b);
    double mse = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        double d = static_cast<double>(a.values[i]) - b.values[i];
        mse += d * d;
    }
    mse /= static_cast<double>(a.values.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageBuffer& a, const ImageBuffer& b, int window) {
    check_same_dims(a, b);
    if (window < 1 || a.height < window || a.width < window) {
        throw DimensionError("image smaller than the SSIM window");
    }
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    const double wn = static_cast<double>(window) * window;
    double total = 0.0;
    size_t count = 0;
    for (int ch = 0; ch < a.channels; ++ch) {
        for (int y = 0; y + window <= a.height; ++y) {
            for (int x = 0; x + window <= a.width; ++x) {
                double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
                for (int wy = 0; wy < window; ++wy) {
                    for (int wx = 0; wx < window; ++wx) {
                        size_t idx = (static_cast<size_t>(y + wy) * a.width + (x + wx)) *
                                         a.channels + ch;
                        double va = a.values[idx];
                        double vb = b.values[idx];
                        sa += va;
                        sb += vb;
                        saa += va * va;
                        sbb += vb * vb;
                        sab += va * vb;
                    }
                }
                double mu_a = sa / wn;
                double mu_b = sb / wn;
                double var_a = saa / wn - mu_a * mu_a;
                double var_b = sbb / wn - mu_b * mu_b;
                double cov = sab / wn - mu_a * mu_b;
                double v = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
                           ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
                total += v;
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

static double rms_over(const Tensor& delta, const RegionMask& mask, bool inside) {
    size_t L = delta.rows();
    size_t d = delta.cols();
    double sum = 0.0;
    size_t n = 0;
    for (size_t p = 0; p < L; ++p) {
        bool in = mask.values[p] != 0;
        if (in != inside) continue;
        const float* row = delta.data.data() + p * d;
        for (size_t j = 0; j < d; ++j) sum += static_cast<double>(row[j]) * row[j];
        n += d;
    }
    if (n == 0) return 0.0;
    return std::sqrt(sum / static_cast<double>(n));
}

InfluenceScore regional_influence_score(const Stack& stack,
                                        const std::vector<RegionMask>& masks,
                                        const Conditioning& cond, int region_j,
                                        uint64_t perturb_seed, float timestep) {
    if (region_j < 0 || static_cast<size_t>(region_j) >= masks.size()) {
        throw RegionError("region index out of range");
    }
    size_t L = masks.front().values.size();
    Tensor latent = seeded_normal({L, stack.config().d_model},
                                  perturb_seed ^ 0xa5a5a5a5ULL, 1.0f);

    Conditioning perturbed = cond;
    const Tensor& orig = cond.regional[static_cast<size_t>(region_j)].values;
    Tensor dir = seeded_normal(orig.shape, perturb_seed, 1.0f);
    float target = l2_norm(orig);
    float dn = l2_norm(dir);
    if (dn == 0.0f) throw NumericError("degenerate perturbation direction");
    perturbed.regional[static_cast<size_t>(region_j)].values =
        scale(dir, target > 0.0f ? target / dn : 1.0f);

    Tensor base = stack.forward(latent, timestep, cond, masks);
    Tensor alt = stack.forward(latent, timestep, perturbed, masks);
    Tensor delta = sub(alt, base);

    InfluenceScore score;
    score.inside = rms_over(delta, masks[static_cast<size_t>(region_j)], true);
    score.outside = rms_over(delta, masks[static_cast<size_t>(region_j)], false);
    score.ratio = score.inside / (score.outside + 1e-8);
    return score;
}

}  // namespace rdit
