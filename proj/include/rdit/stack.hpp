#pragma once

#include <vector>

#include "rdit/attention.hpp"
#include "rdit/masks.hpp"
#include "rdit/tensor.hpp"
#include "rdit/text_states.hpp"

namespace rdit {

inline constexpr int kDefaultNumBlocks = 39;
inline constexpr size_t kTimestepEmbedDim = 16;

struct StackConfig {
    int num_blocks = kDefaultNumBlocks;
    std::vector<int> injected;  // block indices using region attention
    AttentionMode mode = AttentionMode::RegionOutputMasked;
    size_t d_model = 64;
    int heads = 4;
    int head_dim = 16;
    uint64_t seed = 0;
};

// Pre-norm [self-attn -> cross-attn -> FFN] with residuals; timestep
// scale/shift from a 16-dim sinusoidal embedding through one affine map.
struct DiTBlock {
    CrossAttnWeights self_attn;
    CrossAttnWeights cross_attn;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
    Tensor ln1_g, ln1_b, ln2_g, ln2_b, ln3_g, ln3_b;
    Tensor mod_w, mod_b;  // 16 -> 2*d_model (scale, shift)
    bool region_injected = false;
};

// Positive branch conditioning: injected blocks read the regional states,
// standard blocks read the merged single-prompt state.
struct Conditioning {
    std::vector<TextState> regional;
    TextState merged;
    TextState negative;
};

Tensor timestep_embedding(float t);

class Stack {
  public:
    explicit Stack(StackConfig cfg);

    const StackConfig& config() const { return cfg_; }
    bool block_injected(int i) const;
    size_t injected_count() const;
    int num_blocks() const { return cfg_.num_blocks; }

    Tensor forward(const Tensor& latent, float timestep, const Conditioning& cond,
                   const std::vector<RegionMask>& masks) const;
    Tensor forward_negative(const Tensor& latent, float timestep,
                            const TextState& negative_state) const;

    void save(const std::string& dir) const;
    static Stack load(const std::string& dir);

  private:
    Stack() = default;
    Tensor run(const Tensor& latent, float timestep, const Conditioning* cond,
               const std::vector<RegionMask>* masks,
               const TextState* negative_state) const;

    StackConfig cfg_;
    std::vector<DiTBlock> blocks_;
};

Stack build_stack(const StackConfig& cfg);

// Injection placement policies for the depth-ablation sweep.
enum class PlacementPolicy { DeepestFirst, ShallowestFirst };
std::vector<int> placement_indices(PlacementPolicy policy, int count, int num_blocks);

}  // namespace rdit
