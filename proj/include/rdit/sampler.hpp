#pragma once

#include <vector>

#include "rdit/stack.hpp"
#include "rdit/tensor.hpp"

namespace rdit {

enum class SchedulerKind { SgmUniform };

struct SchedulerConfig {
    int steps = 20;
    float sigma_max = 1.0f;
    float sigma_min = 0.01f;
    SchedulerKind kind = SchedulerKind::SgmUniform;
};

struct CfgConfig {
    float scale = 6.0f;
    float denoise = 1.0f;
};

// Uniformly spaced timesteps sigma_max..sigma_min (steps+1 values, identity
// sigma map) with a final 0 appended; strictly decreasing.
std::vector<float> sgm_uniform_sigmas(const SchedulerConfig& cfg);

Tensor cfg_combine(const Tensor& uncond, const Tensor& cond, float scale);

// d = (x - denoised)/sigma_k; x + (sigma_k1 - sigma_k)*d
Tensor euler_step(const Tensor& x, float sigma_k, float sigma_k1, const Tensor& denoised);

// Noise-prediction model; the sampler combines the two branches with CFG.
struct EpsModel {
    virtual ~EpsModel() = default;
    virtual Tensor eps_positive(const Tensor& x, float sigma) const = 0;
    virtual Tensor eps_negative(const Tensor& x, float sigma) const = 0;
};

struct StackEpsModel : EpsModel {
    const Stack* stack;
    const Conditioning* cond;
    const std::vector<RegionMask>* masks;

    StackEpsModel(const Stack& s, const Conditioning& c, const std::vector<RegionMask>& m)
        : stack(&s), cond(&c), masks(&m) {}

    Tensor eps_positive(const Tensor& x, float sigma) const override {
        return stack->forward(x, sigma, *cond, *masks);
    }
    Tensor eps_negative(const Tensor& x, float sigma) const override {
        return stack->forward_negative(x, sigma, cond->negative);
    }
};

struct StepRecord {
    int index = 0;
    float sigma_from = 0.0f;
    float sigma_to = 0.0f;
};

struct SampleResult {
    Tensor latent;
    std::vector<Tensor> trajectory;  // x after each transition
    std::vector<StepRecord> steps;
    int uniform_steps_run = 0;  // transitions within the uniform segment
};

// x0 = seeded noise * first sigma; per transition: eps = cfg_combine(neg, pos),
// denoised = x - sigma*eps, then euler_step. denoise < 1 truncates the
// schedule to its last ceil(denoise*steps) uniform transitions.
SampleResult sample(const EpsModel& model, std::vector<size_t> latent_shape,
                    const SchedulerConfig& sched, const CfgConfig& cfg, uint64_t seed);

}  // namespace rdit
