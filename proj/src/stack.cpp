#include "rdit/stack.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "rdit/fixture_io.hpp"

namespace fs = std::filesystem;

namespace rdit {

Tensor timestep_embedding(float t) {
    // 16-dim sinusoidal: interleaved sin/cos over log-spaced frequencies
    constexpr size_t half = kTimestepEmbedDim / 2;
    Tensor emb = Tensor::zeros({1, kTimestepEmbedDim});
    for (size_t i = 0; i < half; ++i) {
        float freq = std::exp(-std::log(10000.0f) * static_cast<float>(i) / half);
        emb.data[2 * i] = std::sin(t * freq);
        emb.data[2 * i + 1] = std::cos(t * freq);
    }
    return emb;
}

static DiTBlock make_block(const StackConfig& cfg, Rng& rng, bool injected) {
    DiTBlock b;
    size_t d = cfg.d_model;
    b.self_attn = make_cross_attn_weights(d, cfg.heads, cfg.head_dim, rng);
    b.cross_attn = make_cross_attn_weights(d, cfg.heads, cfg.head_dim, rng);
    b.ff_w1 = seeded_normal({d, 4 * d}, rng);
    b.ff_b1 = Tensor::zeros({4 * d});
    b.ff_w2 = seeded_normal({4 * d, d}, rng);
    b.ff_b2 = Tensor::zeros({d});
    b.ln1_g = Tensor::full({d}, 1.0f);
    b.ln1_b = Tensor::zeros({d});
    b.ln2_g = Tensor::full({d}, 1.0f);
    b.ln2_b = Tensor::zeros({d});
    b.ln3_g = Tensor::full({d}, 1.0f);
    b.ln3_b = Tensor::zeros({d});
    b.mod_w = seeded_normal({kTimestepEmbedDim, 2 * d}, rng);
    b.mod_b = Tensor::zeros({2 * d});
    b.region_injected = injected;
    return b;
}

Stack::Stack(StackConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.num_blocks < 1) throw ConfigError("stack needs at least one block");
    std::vector<bool> injected(static_cast<size_t>(cfg_.num_blocks), false);
    for (int idx : cfg_.injected) {
        if (idx < 0 || idx >= cfg_.num_blocks) {
            throw ConfigError("injected block index " + std::to_string(idx) +
                              " out of range [0, " + std::to_string(cfg_.num_blocks) + ")");
        }
        injected[static_cast<size_t>(idx)] = true;
    }
    Rng rng(cfg_.seed);
    blocks_.reserve(static_cast<size_t>(cfg_.num_blocks));
    for (int i = 0; i < cfg_.num_blocks; ++i) {
        blocks_.push_back(make_block(cfg_, rng, injected[static_cast<size_t>(i)]));
    }
}

Stack build_stack(const StackConfig& cfg) { return Stack(cfg); }

bool Stack::block_injected(int i) const {
    if (i < 0 || i >= cfg_.num_blocks) throw ConfigError("block index out of range");
    return blocks_[static_cast<size_t>(i)].region_injected;
}

size_t Stack::injected_count() const {
    size_t n = 0;
    for (const auto& b : blocks_) n += b.region_injected ? 1 : 0;
    return n;
}

static Tensor self_attention(const Tensor& h, const DiTBlock& b) {
    TextState self_ctx;
    self_ctx.values = h;
    return cross_attention(h, self_ctx, b.self_attn);
}

static Tensor modulate(const Tensor& x, const Tensor& modvec, size_t d) {
    // modvec is 1 x 2d: [scale | shift]; applied as x*(1+scale)+shift rowwise
    Tensor out = x;
    size_t m = x.rows();
    for (size_t i = 0; i < m; ++i) {
        float* row = out.data.data() + i * d;
        for (size_t j = 0; j < d; ++j) {
            row[j] = row[j] * (1.0f + modvec.data[j]) + modvec.data[d + j];
        }
    }
    return out;
}

Tensor Stack::run(const Tensor& latent, float timestep, const Conditioning* cond,
                  const std::vector<RegionMask>* masks,
                  const TextState* negative_state) const {
    if (latent.ndim() != 2 || latent.cols() != cfg_.d_model) {
        throw DimensionError("latent shape " + latent.shape_str() +
                             " does not match d_model " + std::to_string(cfg_.d_model));
    }
    Tensor temb = timestep_embedding(timestep);
    Tensor x = latent;
    for (int bi = 0; bi < cfg_.num_blocks; ++bi) {
        const DiTBlock& b = blocks_[static_cast<size_t>(bi)];
        try {
            Tensor modvec = linear(temb, b.mod_w, b.mod_b);

            Tensor h = layer_norm(x, b.ln1_g, b.ln1_b);
            h = modulate(h, modvec, cfg_.d_model);
            x = add(x, self_attention(h, b));

            h = layer_norm(x, b.ln2_g, b.ln2_b);
            Tensor cross_out = [&] {
                if (negative_state != nullptr) {
                    return cross_attention(h, *negative_state, b.cross_attn);
                }
                if (b.region_injected) {
                    return region_attention(h, *masks, cond->regional, b.cross_attn,
                                            cfg_.mode);
                }
                return cross_attention(h, cond->merged, b.cross_attn);
            }();
            x = add(x, cross_out);

            h = layer_norm(x, b.ln3_g, b.ln3_b);
            h = gelu(linear(h, b.ff_w1, b.ff_b1));
            x = add(x, linear(h, b.ff_w2, b.ff_b2));
        } catch (const Error& e) {
            throw PipelineError("block " + std::to_string(bi) + ": " + e.what());
        }
    }
    return x;
}

Tensor Stack::forward(const Tensor& latent, float timestep, const Conditioning& cond,
                      const std::vector<RegionMask>& masks) const {
    return run(latent, timestep, &cond, &masks, nullptr);
}

Tensor Stack::forward_negative(const Tensor& latent, float timestep,
                               const TextState& negative_state) const {
    return run(latent, timestep, nullptr, nullptr, &negative_state);
}

static std::vector<std::pair<std::string, const Tensor*>> block_tensors(const DiTBlock& b) {
    return {
        {"self_wq", &b.self_attn.wq}, {"self_bq", &b.self_attn.bq},
        {"self_wk", &b.self_attn.wk}, {"self_bk", &b.self_attn.bk},
        {"self_wv", &b.self_attn.wv}, {"self_bv", &b.self_attn.bv},
        {"self_wo", &b.self_attn.wo}, {"self_bo", &b.self_attn.bo},
        {"cross_wq", &b.cross_attn.wq}, {"cross_bq", &b.cross_attn.bq},
        {"cross_wk", &b.cross_attn.wk}, {"cross_bk", &b.cross_attn.bk},
        {"cross_wv", &b.cross_attn.wv}, {"cross_bv", &b.cross_attn.bv},
        {"cross_wo", &b.cross_attn.wo}, {"cross_bo", &b.cross_attn.bo},
        {"ff_w1", &b.ff_w1}, {"ff_b1", &b.ff_b1},
        {"ff_w2", &b.ff_w2}, {"ff_b2", &b.ff_b2},
        {"ln1_g", &b.ln1_g}, {"ln1_b", &b.ln1_b},
        {"ln2_g", &b.ln2_g}, {"ln2_b", &b.ln2_b},
        {"ln3_g", &b.ln3_g}, {"ln3_b", &b.ln3_b},
        {"mod_w", &b.mod_w}, {"mod_b", &b.mod_b},
    };
}

void Stack::save(const std::string& dir) const {
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw IoError("cannot write stack manifest in " + dir);
    manifest << "num_blocks " << cfg_.num_blocks << "\n";
    manifest << "d_model " << cfg_.d_model << "\n";
    manifest << "heads " << cfg_.heads << "\n";
    manifest << "head_dim " << cfg_.head_dim << "\n";
    manifest << "seed " << cfg_.seed << "\n";
    manifest << "mode "
             << (cfg_.mode == AttentionMode::RegionLiteral ? "literal" : "output-masked")
             << "\n";
    for (int i = 0; i < cfg_.num_blocks; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "block_%03d.tensors", i);
        manifest << "block " << name << " "
                 << (blocks_[static_cast<size_t>(i)].region_injected ? 1 : 0) << "\n";
        write_named_tensors((fs::path(dir) / name).string(),
                            block_tensors(blocks_[static_cast<size_t>(i)]));
    }
}

Stack Stack::load(const std::string& dir) {
    std::ifstream manifest(fs::path(dir) / "manifest.txt");
    if (!manifest) throw IoError("cannot open stack manifest in " + dir);
    Stack stack;
    StackConfig& cfg = stack.cfg_;
    std::vector<std::pair<std::string, bool>> block_files;
    std::string key;
    while (manifest >> key) {
        if (key == "num_blocks") manifest >> cfg.num_blocks;
        else if (key == "d_model") manifest >> cfg.d_model;
        else if (key == "heads") manifest >> cfg.heads;
        else if (key == "head_dim") manifest >> cfg.head_dim;
        else if (key == "seed") manifest >> cfg.seed;
        else if (key == "mode") {
            std::string m;
            manifest >> m;
            cfg.mode = m == "literal" ? AttentionMode::RegionLiteral
                                      : AttentionMode::RegionOutputMasked;
        } else if (key == "block") {
            std::string file;
            int inj = 0;
            manifest >> file >> inj;
            block_files.emplace_back(file, inj != 0);
        } else {
            throw IoError("unknown manifest key '" + key + "'");
        }
    }
    if (static_cast<int>(block_files.size()) != cfg.num_blocks) {
        throw IoError("stack manifest lists " + std::to_string(block_files.size()) +
                      " blocks, expected " + std::to_string(cfg.num_blocks));
    }
    for (int i = 0; i < cfg.num_blocks; ++i) {
        const auto& [file, injected] = block_files[static_cast<size_t>(i)];
        auto named = read_named_tensors((fs::path(dir) / file).string());
        DiTBlock b;
        auto get = [&](const char* name) -> Tensor {
            auto it = named.find(name);
            if (it == named.end()) {
                throw IoError(std::string("missing tensor '") + name + "' in " + file);
            }
            return it->second;
        };
        b.self_attn.heads = cfg.heads;
        b.self_attn.head_dim = cfg.head_dim;
        b.cross_attn.heads = cfg.heads;
        b.cross_attn.head_dim = cfg.head_dim;
        b.self_attn.wq = get("self_wq"); b.self_attn.bq = get("self_bq");
        b.self_attn.wk = get("self_wk"); b.self_attn.bk = get("self_bk");
        b.self_attn.wv = get("self_wv"); b.self_attn.bv = get("self_bv");
        b.self_attn.wo = get("self_wo"); b.self_attn.bo = get("self_bo");
        b.cross_attn.wq = get("cross_wq"); b.cross_attn.bq = get("cross_bq");
        b.cross_attn.wk = get("cross_wk"); b.cross_attn.bk = get("cross_bk");
        b.cross_attn.wv = get("cross_wv"); b.cross_attn.bv = get("cross_bv");
        b.cross_attn.wo = get("cross_wo"); b.cross_attn.bo = get("cross_bo");
        b.ff_w1 = get("ff_w1"); b.ff_b1 = get("ff_b1");
        b.ff_w2 = get("ff_w2"); b.ff_b2 = get("ff_b2");
        b.ln1_g = get("ln1_g"); b.ln1_b = get("ln1_b");
        b.ln2_g = get("ln2_g"); b.ln2_b = get("ln2_b");
        b.ln3_g = get("ln3_g"); b.ln3_b = get("ln3_b");
        b.mod_w = get("mod_w"); b.mod_b = get("mod_b");
        b.region_injected = injected;
        if (injected) stack.cfg_.injected.push_back(i);
        stack.blocks_.push_back(std::move(b));
    }
    return stack;
}

std::vector<int> placement_indices(PlacementPolicy policy, int count, int num_blocks) {
    if (count < 0 || count > num_blocks) {
        throw ConfigError("injection count must be within [0, num_blocks]");
    }
    std::vector<int> out;
    out.reserve(static_cast<size_t>(count));
    if (policy == PlacementPolicy::DeepestFirst) {
        for (int i = 0; i < count; ++i) out.push_back(num_blocks - 1 - i);
    } else {
        for (int i = 0; i < count; ++i) out.push_back(i);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace rdit
