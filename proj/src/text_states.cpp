#include "rdit/text_states.hpp"

#include <algorithm>
#include <sstream>

namespace rdit {

uint64_t fnv1a64(const std::string& text) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

ProjectionMlp make_projection_mlp(size_t d_long, size_t d_short, size_t d_model,
                                  uint64_t seed) {
    Rng rng(seed);
    ProjectionMlp mlp;
    mlp.w1 = seeded_normal({d_long, d_model}, rng);
    mlp.b1 = Tensor::zeros({d_model});
    mlp.w2 = seeded_normal({d_short, d_model}, rng);
    mlp.b2 = Tensor::zeros({d_model});
    return mlp;
}

static Tensor pad_rows(const Tensor& x, size_t target_rows) {
    if (x.rows() > target_rows) {
        throw DimensionError("sequence longer than its context cap");
    }
    Tensor out = Tensor::zeros({target_rows, x.cols()});
    std::copy(x.data.begin(), x.data.end(), out.data.begin());
    return out;
}

Tensor project_long(const RawEmbedding& emb, const ProjectionMlp& mlp) {
    if (emb.source != EmbeddingSource::LongCtx) {
        throw SourceError("project_long expects a long-context embedding");
    }
    if (emb.seq_len() > kLongCtxLen) {
        throw DimensionError("long-context sequence exceeds 256 rows");
    }
    Tensor proj = gelu(linear(emb.values, mlp.w1, mlp.b1));
    return pad_rows(proj, kLongCtxLen);
}

TextState build_text_state(const Tensor& long_proj, const RawEmbedding& short_emb,
                           const ProjectionMlp& mlp) {
    if (long_proj.rows() != kLongCtxLen) {
        throw DimensionError("long projection must have 256 rows");
    }
    if (short_emb.source != EmbeddingSource::ShortCtx) {
        throw SourceError("build_text_state expects a short-context embedding");
    }
    if (short_emb.seq_len() > kShortCtxLen) {
        throw DimensionError("short-context sequence exceeds 77 rows");
    }
    Tensor short_proj = pad_rows(linear(short_emb.values, mlp.w2, mlp.b2), kShortCtxLen);
    if (short_proj.cols() != long_proj.cols()) {
        throw DimensionError("projection dims disagree between long and short paths");
    }
    size_t d = long_proj.cols();
    TextState state;
    state.values = Tensor::zeros({kTextStateLen, d});
    std::copy(long_proj.data.begin(), long_proj.data.end(), state.values.data.begin());
    std::copy(short_proj.data.begin(), short_proj.data.end(),
              state.values.data.begin() + kLongCtxLen * d);
    return state;
}

TextState build_text_state(const PromptRecord& rec, const ProjectionMlp& mlp) {
    return build_text_state(project_long(rec.long_emb, mlp), rec.short_emb, mlp);
}

std::vector<TextState> batch_prompt_states(const PromptSet& set, const ProjectionMlp& mlp) {
    std::vector<TextState> states;
    states.reserve(set.positives.size() + 1);
    for (size_t i = 0; i < set.positives.size(); ++i) {
        try {
            states.push_back(build_text_state(set.positives[i], mlp));
        } catch (const Error& e) {
            throw PipelineError("positive prompt " + std::to_string(i) + ": " + e.what());
        }
    }
    try {
        states.push_back(build_text_state(set.negative, mlp));
    } catch (const Error& e) {
        throw PipelineError(std::string("negative prompt: ") + e.what());
    }
    return states;
}

static size_t count_tokens(const std::string& text) {
    std::istringstream is(text);
    std::string tok;
    size_t n = 0;
    while (is >> tok) ++n;
    return n;
}

RawEmbedding synthesize_embedding(const std::string& text, EmbeddingSource source,
                                  size_t dim, uint64_t seed, size_t seq_len) {
    size_t cap = source == EmbeddingSource::LongCtx ? kLongCtxLen : kShortCtxLen;
    if (seq_len == 0) {
        seq_len = std::clamp<size_t>(count_tokens(text), 1, cap);
    }
    if (seq_len > cap) throw DimensionError("requested seq_len exceeds source cap");
    RawEmbedding emb;
    emb.source = source;
    uint64_t mixed = fnv1a64(text) ^ (seed * 0x9e3779b97f4a7c15ULL) ^
                     (source == EmbeddingSource::LongCtx ? 0x11ULL : 0x22ULL);
    emb.values = seeded_normal({seq_len, dim}, mixed, 1.0f);
    return emb;
}

PromptRecord make_prompt_record(const std::string& text, size_t d_long, size_t d_short,
                                uint64_t seed) {
    PromptRecord rec;
    rec.text = text;
    rec.long_emb = synthesize_embedding(text, EmbeddingSource::LongCtx, d_long, seed);
    rec.short_emb = synthesize_embedding(text, EmbeddingSource::ShortCtx, d_short, seed);
    return rec;
}

}  // namespace rdit
