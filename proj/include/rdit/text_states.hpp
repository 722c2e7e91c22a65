#pragma once

#include <string>
#include <vector>

#include "rdit/tensor.hpp"

namespace rdit {

inline constexpr size_t kLongCtxLen = 256;
inline constexpr size_t kShortCtxLen = 77;
inline constexpr size_t kTextStateLen = kLongCtxLen + kShortCtxLen;  // 333

enum class EmbeddingSource { LongCtx, ShortCtx };

struct RawEmbedding {
    EmbeddingSource source = EmbeddingSource::LongCtx;
    Tensor values;  // seq_len x dim

    size_t seq_len() const { return values.rows(); }
    size_t dim() const { return values.cols(); }
};

// 333 x d_model conditioning sequence: 256 projected long-context rows
// followed by 77 projected short-context rows, zero-padded per part.
struct TextState {
    Tensor values;
};

struct PromptRecord {
    std::string text;
    RawEmbedding long_emb;
    RawEmbedding short_emb;
};

struct PromptSet {
    std::vector<PromptRecord> positives;
    PromptRecord negative;
};

struct ProjectionMlp {
    Tensor w1, b1;  // d_long -> d_model, GELU
    Tensor w2, b2;  // d_short -> d_model, affine only
};

ProjectionMlp make_projection_mlp(size_t d_long, size_t d_short, size_t d_model,
                                  uint64_t seed);

Tensor project_long(const RawEmbedding& emb, const ProjectionMlp& mlp);
TextState build_text_state(const Tensor& long_proj, const RawEmbedding& short_emb,
                           const ProjectionMlp& mlp);
TextState build_text_state(const PromptRecord& rec, const ProjectionMlp& mlp);

// states[0..N) are positives in region order, states[N] is the negative.
std::vector<TextState> batch_prompt_states(const PromptSet& set, const ProjectionMlp& mlp);

// Deterministic stand-in for a real encoder: hashes the prompt text into a
// seed and fills a pseudo-embedding. seq_len defaults to the whitespace token
// count clamped to the source cap.
RawEmbedding synthesize_embedding(const std::string& text, EmbeddingSource source,
                                  size_t dim, uint64_t seed, size_t seq_len = 0);
PromptRecord make_prompt_record(const std::string& text, size_t d_long, size_t d_short,
                                uint64_t seed);

uint64_t fnv1a64(const std::string& text);

}  // namespace rdit
