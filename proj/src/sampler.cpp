#include "rdit/sampler.hpp"

#include <cmath>

namespace rdit {

std::vector<float> sgm_uniform_sigmas(const SchedulerConfig& cfg) {
    if (cfg.steps < 1) throw ConfigError("scheduler needs steps >= 1");
    if (!(cfg.sigma_max > cfg.sigma_min && cfg.sigma_min > 0.0f)) {
        throw ConfigError("scheduler requires sigma_max > sigma_min > 0");
    }
    std::vector<float> sigmas;
    sigmas.reserve(static_cast<size_t>(cfg.steps) + 2);
    float span = cfg.sigma_max - cfg.sigma_min;
    for (int k = 0; k <= cfg.steps; ++k) {
        sigmas.push_back(cfg.sigma_max - span * static_cast<float>(k) / cfg.steps);
    }
    sigmas.back() = cfg.sigma_min;  // exact endpoint
    sigmas.push_back(0.0f);
    return sigmas;
}

Tensor cfg_combine(const Tensor& uncond, const Tensor& cond, float scale) {
    if (!uncond.same_shape(cond)) throw DimensionError("cfg_combine shape mismatch");
    if (scale == 1.0f) return cond;  // bitwise identity, no rounding detour
    Tensor out = uncond;
    for (size_t i = 0; i < out.data.size(); ++i) {
        out.data[i] += scale * (cond.data[i] - uncond.data[i]);
    }
    return out;
}

Tensor euler_step(const Tensor& x, float sigma_k, float sigma_k1, const Tensor& denoised) {
    if (sigma_k <= 0.0f) throw NumericError("euler_step requires sigma_k > 0");
    if (!x.same_shape(denoised)) throw DimensionError("euler_step shape mismatch");
    Tensor out = x;
    float dt = sigma_k1 - sigma_k;
    for (size_t i = 0; i < out.data.size(); ++i) {
        float d = (x.data[i] - denoised.data[i]) / sigma_k;
        out.data[i] = x.data[i] + dt * d;
    }
    return out;
}

SampleResult sample(const EpsModel& model, std::vector<size_t> latent_shape,
                    const SchedulerConfig& sched, const CfgConfig& cfg, uint64_t seed) {
    if (!(cfg.denoise > 0.0f && cfg.denoise <= 1.0f)) {
        throw ConfigError("denoise must be in (0, 1]");
    }
    std::vector<float> sigmas = sgm_uniform_sigmas(sched);

    // Truncate to the last ceil(denoise*steps) uniform transitions; the final
    // sigma_min -> 0 landing always runs.
    int eff = static_cast<int>(std::ceil(cfg.denoise * sched.steps));
    eff = std::max(1, std::min(eff, sched.steps));
    size_t first = static_cast<size_t>(sched.steps - eff);
    std::vector<float> used(sigmas.begin() + first, sigmas.end());

    SampleResult res;
    res.uniform_steps_run = eff;
    Tensor x = scale(seeded_normal(std::move(latent_shape), seed, 1.0f), used.front());

    for (size_t k = 0; k + 1 < used.size(); ++k) {
        float s = used[k];
        float s1 = used[k + 1];
        Tensor eps_pos = model.eps_positive(x, s);
        Tensor eps_neg = model.eps_negative(x, s);
        Tensor eps = cfg_combine(eps_neg, eps_pos, cfg.scale);
        Tensor denoised = sub(x, scale(eps, s));
        x = euler_step(x, s, s1, denoised);
        res.steps.push_back({static_cast<int>(k), s, s1});
        res.trajectory.push_back(x);
    }
    res.latent = std::move(x);
    return res;
}

}  // namespace rdit
