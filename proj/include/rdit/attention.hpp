#pragma once

#include <vector>

#include "rdit/masks.hpp"
#include "rdit/tensor.hpp"
#include "rdit/text_states.hpp"

namespace rdit {

enum class AttentionMode {
    Standard,
    RegionLiteral,       // masked queries, raw f_i summed verbatim
    RegionOutputMasked,  // f_i re-masked by its region before summation
};

// One shared weight set serves the baseline path and every region; per-region
// keys/values differ only through the text state fed in.
struct CrossAttnWeights {
    int heads = 4;
    int head_dim = 16;
    Tensor wq, bq;
    Tensor wk, bk;
    Tensor wv, bv;
    Tensor wo, bo;

    int inner_dim() const { return heads * head_dim; }
};

CrossAttnWeights make_cross_attn_weights(size_t d_model, int heads, int head_dim, Rng& rng);

Tensor cross_attention(const Tensor& latent_seq, const TextState& state,
                       const CrossAttnWeights& w);

// Controllable region attention. masks must partition [0, L); one text state
// per region, |masks| == |states|.
Tensor region_attention(const Tensor& latent_seq, const std::vector<RegionMask>& masks,
                        const std::vector<TextState>& states, const CrossAttnWeights& w,
                        AttentionMode mode);

// Plain cross-attention against the negative state; callers stack
// [negative, positive] along a leading batch axis for CFG.
Tensor negative_path(const Tensor& latent_seq, const TextState& negative_state,
                     const CrossAttnWeights& w);

}  // namespace rdit
