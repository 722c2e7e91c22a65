#include "rdit/attention.hpp"

#include <cmath>
#include <numeric>

namespace rdit {

CrossAttnWeights make_cross_attn_weights(size_t d_model, int heads, int head_dim, Rng& rng) {
    CrossAttnWeights w;
    w.heads = heads;
    w.head_dim = head_dim;
    size_t inner = static_cast<size_t>(heads) * head_dim;
    w.wq = seeded_normal({d_model, inner}, rng);
    w.bq = Tensor::zeros({inner});
    w.wk = seeded_normal({d_model, inner}, rng);
    w.bk = Tensor::zeros({inner});
    w.wv = seeded_normal({d_model, inner}, rng);
    w.bv = Tensor::zeros({inner});
    w.wo = seeded_normal({inner, d_model}, rng);
    w.bo = Tensor::zeros({d_model});
    return w;
}

// Scaled dot-product attention for the listed query rows, all heads, written
// into ctx (L x heads*head_dim). Rows not listed are left untouched.
static void attend_rows(const Tensor& q, const Tensor& k, const Tensor& v,
                        int heads, int head_dim, const std::vector<size_t>& rows,
                        Tensor& ctx) {
    size_t seq = k.rows();
    size_t inner = static_cast<size_t>(heads) * head_dim;
    float inv_scale = 1.0f / std::sqrt(static_cast<float>(head_dim));
    std::vector<float> logits(seq);
    std::vector<float> probs(seq);
    for (size_t r : rows) {
        const float* qrow = q.data.data() + r * inner;
        float* crow = ctx.data.data() + r * inner;
        for (int h = 0; h < heads; ++h) {
            const size_t off = static_cast<size_t>(h) * head_dim;
            float mx = -std::numeric_limits<float>::infinity();
            for (size_t s = 0; s < seq; ++s) {
                const float* krow = k.data.data() + s * inner + off;
                float dot = 0.0f;
                for (int d = 0; d < head_dim; ++d) dot += qrow[off + d] * krow[d];
                logits[s] = dot * inv_scale;
                mx = std::max(mx, logits[s]);
            }
            float sum = 0.0f;
            for (size_t s = 0; s < seq; ++s) {
                probs[s] = std::exp(logits[s] - mx);
                sum += probs[s];
            }
            float inv_sum = 1.0f / sum;
            for (int d = 0; d < head_dim; ++d) crow[off + d] = 0.0f;
            for (size_t s = 0; s < seq; ++s) {
                float p = probs[s] * inv_sum;
                const float* vrow = v.data.data() + s * inner + off;
                for (int d = 0; d < head_dim; ++d) crow[off + d] += p * vrow[d];
            }
        }
    }
}

static std::vector<size_t> all_rows(size_t n) {
    std::vector<size_t> rows(n);
    std::iota(rows.begin(), rows.end(), size_t{0});
    return rows;
}

static void check_weights(const Tensor& latent, const CrossAttnWeights& w) {
    if (latent.ndim() != 2 || latent.cols() != w.wq.rows()) {
        throw DimensionError("latent shape " + latent.shape_str() +
                             " incompatible with attention weights");
    }
}

static Tensor attend_full(const Tensor& latent, const Tensor& context,
                          const CrossAttnWeights& w) {
    check_weights(latent, w);
    Tensor q = linear(latent, w.wq, w.bq);
    Tensor k = linear(context, w.wk, w.bk);
    Tensor v = linear(context, w.wv, w.bv);
    Tensor ctx = Tensor::zeros({latent.rows(), static_cast<size_t>(w.inner_dim())});
    attend_rows(q, k, v, w.heads, w.head_dim, all_rows(latent.rows()), ctx);
    return linear(ctx, w.wo, w.bo);
}

Tensor cross_attention(const Tensor& latent_seq, const TextState& state,
                       const CrossAttnWeights& w) {
    return attend_full(latent_seq, state.values, w);
}

Tensor negative_path(const Tensor& latent_seq, const TextState& negative_state,
                     const CrossAttnWeights& w) {
    return cross_attention(latent_seq, negative_state, w);
}

Tensor region_attention(const Tensor& latent_seq, const std::vector<RegionMask>& masks,
                        const std::vector<TextState>& states, const CrossAttnWeights& w,
                        AttentionMode mode) {
    check_weights(latent_seq, w);
    if (masks.size() != states.size()) {
        throw RegionError("mask/state count mismatch");
    }
    size_t L = latent_seq.rows();
    check_partition(masks, L);
    if (mode == AttentionMode::Standard) {
        throw RegionError("region_attention requires a region mode");
    }

    size_t inner = static_cast<size_t>(w.inner_dim());
    Tensor q = linear(latent_seq, w.wq, w.bq);
    Tensor ctx = Tensor::zeros({L, inner});

    if (mode == AttentionMode::RegionOutputMasked) {
        // Each row attends only against the state of the region containing it;
        // the partition guarantees every row is written exactly once.
        for (size_t i = 0; i < masks.size(); ++i) {
            Tensor k = linear(states[i].values, w.wk, w.bk);
            Tensor v = linear(states[i].values, w.wv, w.bv);
            std::vector<size_t> rows;
            for (size_t p = 0; p < L; ++p) {
                if (masks[i].values[p]) rows.push_back(p);
            }
            attend_rows(q, k, v, w.heads, w.head_dim, rows, ctx);
        }
    } else {
        // Literal path: zero the query rows outside region i, attend over
        // all rows, sum the raw per-region features. Zeroed query rows still
        // produce uniform attention, so every region contributes everywhere.
        auto rows = all_rows(L);
        for (size_t i = 0; i < masks.size(); ++i) {
            Tensor qi = q;
            for (size_t p = 0; p < L; ++p) {
                float m = static_cast<float>(masks[i].values[p]);
                float* row = qi.data.data() + p * inner;
                for (size_t d = 0; d < inner; ++d) row[d] *= m;
            }
            Tensor k = linear(states[i].values, w.wk, w.bk);
            Tensor v = linear(states[i].values, w.wv, w.bv);
            if (i == 0) {
                attend_rows(qi, k, v, w.heads, w.head_dim, rows, ctx);
            } else {
                Tensor fi = Tensor::zeros({L, inner});
                attend_rows(qi, k, v, w.heads, w.head_dim, rows, fi);
                ctx = add(ctx, fi);
            }
        }
    }
    return linear(ctx, w.wo, w.bo);
}

}  // namespace rdit
