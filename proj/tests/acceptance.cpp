// Acceptance gate: one line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rdit/metrics.hpp"
#include "rdit/pipeline.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace rdit;
using testutil::make_instance;
using testutil::to_mat;
using testutil::to_oracle_masks;
using Clock = std::chrono::steady_clock;

namespace {

struct CriterionFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

#define EXPECT(cond, msg)                                  \
    do {                                                   \
        if (!(cond)) throw CriterionFailure(msg);          \
    } while (0)

std::vector<RegionMask> stripes(int L, int n) {
    return divide_regions({Axis::Height, n}, LatentGrid{L, 1});
}

Conditioning full_cond(int n, size_t rows, size_t d, uint64_t seed) {
    Rng rng(seed);
    Conditioning cond;
    for (int i = 0; i < n; ++i) {
        TextState s;
        s.values = seeded_normal({rows, d}, rng, 1.0f);
        cond.regional.push_back(std::move(s));
    }
    cond.merged.values = seeded_normal({rows, d}, rng, 1.0f);
    cond.negative.values = seeded_normal({rows, d}, rng, 1.0f);
    return cond;
}

struct ZeroEps : EpsModel {
    Tensor eps_positive(const Tensor& x, float) const override {
        return Tensor::zeros(x.shape);
    }
    Tensor eps_negative(const Tensor& x, float) const override {
        return Tensor::zeros(x.shape);
    }
};

ImageBuffer constant_image(int h, int w, float v) {
    ImageBuffer img;
    img.height = h;
    img.width = w;
    img.channels = 1;
    img.values.assign(static_cast<size_t>(h) * w, v);
    return img;
}

// ---- criteria -------------------------------------------------------------

void criterion_oracle_equivalence() {
    auto start = Clock::now();
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = make_instance(seed, 8, 6, 8, 2, 4);
        Tensor got = cross_attention(inst.latent, inst.states[0], inst.w);
        oracle::Mat want = oracle::cross_attention(
            to_mat(inst.latent), to_mat(inst.states[0].values), ORACLE_WEIGHTS(inst), 2);
        EXPECT(testutil::max_abs_diff(want, got) < 1e-5, "cross_attention oracle mismatch");
    }
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto inst = make_instance(seed, 8, 4, 8, 2, 4, 2);
        auto masks = stripes(8, 2);
        auto omasks = to_oracle_masks(masks);
        auto ostates = testutil::state_mats(inst);

        Tensor lit = region_attention(inst.latent, masks, inst.states, inst.w,
                                      AttentionMode::RegionLiteral);
        oracle::Mat lit_want = oracle::region_literal(to_mat(inst.latent), omasks, ostates,
                                                      ORACLE_WEIGHTS(inst), 2);
        EXPECT(testutil::max_abs_diff(lit_want, lit) < 1e-5, "literal-mode oracle mismatch");

        Tensor om = region_attention(inst.latent, masks, inst.states, inst.w,
                                     AttentionMode::RegionOutputMasked);
        oracle::Mat om_want = oracle::region_output_masked(to_mat(inst.latent), omasks,
                                                           ostates, ORACLE_WEIGHTS(inst), 2);
        EXPECT(testutil::max_abs_diff(om_want, om) < 1e-5, "output-masked oracle mismatch");
    }
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    EXPECT(secs < 5.0, "oracle equivalence exceeded the 5 s budget");
}

void criterion_degeneracy() {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        auto inst = make_instance(seed, 6, 5, 8, 2, 4);
        auto masks = stripes(6, 1);
        Tensor base = cross_attention(inst.latent, inst.states[0], inst.w);
        for (auto mode : {AttentionMode::RegionLiteral, AttentionMode::RegionOutputMasked}) {
            Tensor got = region_attention(inst.latent, masks, inst.states, inst.w, mode);
            EXPECT(got.data == base.data, "N=1 region attention is not bit-identical");
        }
    }
}

void criterion_identical_prompt_collapse() {
    auto start = Clock::now();
    StackConfig cfg;
    cfg.num_blocks = 39;
    cfg.d_model = 32;
    cfg.heads = 2;
    cfg.head_dim = 16;
    cfg.seed = 1;
    cfg.mode = AttentionMode::RegionOutputMasked;
    for (int i = 0; i < cfg.num_blocks; ++i) cfg.injected.push_back(i);
    Stack injected = build_stack(cfg);

    StackConfig base_cfg = cfg;
    base_cfg.injected.clear();
    Stack baseline = build_stack(base_cfg);

    LatentGrid grid{32, 32};
    Tensor latent = seeded_normal({1024, cfg.d_model}, 2, 1.0f);
    for (int n : {2, 4, 9}) {
        auto masks = divide_regions({Axis::Height, n}, grid);
        Conditioning cond = full_cond(n, 333, cfg.d_model, 3);
        for (auto& s : cond.regional) s = cond.merged;
        Tensor a = injected.forward(latent, 0.5f, cond, masks);
        Tensor b = baseline.forward(latent, 0.5f, cond, masks);
        EXPECT(max_abs_diff(a, b) < 1e-4f,
               "collapse failed at N=" + std::to_string(n));
    }
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    EXPECT(secs < 60.0, "collapse check exceeded the 60 s budget");
}

void criterion_locality() {
    for (int n : {2, 4, 9}) {
        auto inst = make_instance(100 + n, 18, 5, 8, 2, 4, static_cast<size_t>(n));
        auto masks = stripes(18, n);
        Tensor base = region_attention(inst.latent, masks, inst.states, inst.w,
                                       AttentionMode::RegionOutputMasked);
        for (int j = 0; j < n; ++j) {
            auto perturbed = inst.states;
            perturbed[static_cast<size_t>(j)].values =
                seeded_normal(perturbed[static_cast<size_t>(j)].values.shape,
                              500 + static_cast<uint64_t>(j), 1.0f);
            Tensor got = region_attention(inst.latent, masks, perturbed, inst.w,
                                          AttentionMode::RegionOutputMasked);
            for (size_t p = 0; p < 18; ++p) {
                if (masks[static_cast<size_t>(j)].values[p]) continue;
                for (size_t c = 0; c < 8; ++c) {
                    EXPECT(got.at(p, c) == base.at(p, c),
                           "positions outside region " + std::to_string(j) + " changed");
                }
            }
        }
    }
}

void criterion_literal_bias_law() {
    for (uint64_t seed = 40; seed < 45; ++seed) {
        auto inst = make_instance(seed, 6, 4, 8, 2, 4, 2);
        auto masks = stripes(6, 2);
        Tensor lit = region_attention(inst.latent, masks, inst.states, inst.w,
                                      AttentionMode::RegionLiteral);
        Tensor om = region_attention(inst.latent, masks, inst.states, inst.w,
                                     AttentionMode::RegionOutputMasked);

        // literal keeps every region's attention term at every position; output
        // masking drops the out-of-region ones. With the query rows zeroed by
        // the mask, those dropped terms are uniform attention: column means of
        // the other regions' projected values, pushed through Wo (the output
        // bias cancels in the difference).
        size_t inner = static_cast<size_t>(inst.w.inner_dim());
        oracle::Mat bias_pre(6, inner);
        for (size_t i = 0; i < 2; ++i) {
            size_t rows = inst.states[i].values.rows();
            oracle::Mat v(rows, inner);
            for (size_t s = 0; s < rows; ++s) {
                for (size_t c = 0; c < inner; ++c) {
                    double sum = static_cast<double>(inst.w.bv.data[c]);
                    for (size_t k = 0; k < 8; ++k) {
                        sum += static_cast<double>(inst.states[i].values.at(s, k)) *
                               inst.w.wv.at(k, c);
                    }
                    v.at(s, c) = sum;
                }
            }
            for (size_t p = 0; p < 6; ++p) {
                if (masks[i].values[p]) continue;
                for (size_t c = 0; c < inner; ++c) {
                    double mean = 0.0;
                    for (size_t s = 0; s < rows; ++s) mean += v.at(s, c);
                    bias_pre.at(p, c) += mean / static_cast<double>(rows);
                }
            }
        }
        oracle::Mat bias_post = oracle::matmul(bias_pre, to_mat(inst.w.wo));
        Tensor diff = sub(lit, om);
        EXPECT(testutil::max_abs_diff(bias_post, diff) < 1e-5,
               "literal-mode bias law violated");
    }
}

void criterion_partition_invariant() {
    for (const LatentGrid& grid : {LatentGrid{8, 8}, LatentGrid{9, 7}, LatentGrid{32, 32}}) {
        for (int n = 1; n <= 9; ++n) {
            for (Axis axis : {Axis::Height, Axis::Width}) {
                int axis_len = axis == Axis::Height ? grid.height : grid.width;
                if (n > axis_len) {
                    bool threw = false;
                    try {
                        divide_regions({axis, n}, grid);
                    } catch (const RegionError&) {
                        threw = true;
                    }
                    EXPECT(threw, "oversubscribed axis did not raise RegionError");
                    continue;
                }
                auto masks = divide_regions({axis, n}, grid);
                EXPECT(static_cast<int>(masks.size()) == n, "wrong mask count");
                std::vector<int> cover(static_cast<size_t>(grid.cells()), 0);
                for (const auto& m : masks) {
                    EXPECT(m.popcount() > 0, "empty region mask");
                    for (size_t p = 0; p < m.values.size(); ++p) cover[p] += m.values[p];
                }
                for (int c : cover) EXPECT(c == 1, "masks are not an exact partition");
            }
        }
    }
}

void criterion_text_state_contract() {
    ProjectionMlp mlp = make_projection_mlp(8, 6, 16, 31);
    for (size_t len : {size_t{1}, size_t{10}, size_t{77}, size_t{256}}) {
        PromptRecord rec;
        rec.text = "t";
        rec.long_emb = synthesize_embedding("t", EmbeddingSource::LongCtx, 8, 0, len);
        rec.short_emb = synthesize_embedding("t", EmbeddingSource::ShortCtx, 6, 0,
                                             std::min<size_t>(len, kShortCtxLen));
        TextState s = build_text_state(rec, mlp);
        EXPECT(s.values.rows() == 333, "state length is not 333");
    }
    for (int n : {1, 2, 4, 9}) {
        PromptSet set;
        for (int i = 0; i < n; ++i) {
            set.positives.push_back(
                make_prompt_record("region " + std::to_string(i), 8, 6, 1));
        }
        set.negative = make_prompt_record("negative", 8, 6, 1);
        auto states = batch_prompt_states(set, mlp);
        EXPECT(static_cast<int>(states.size()) == n + 1, "batch size is not N+1");
        for (const auto& s : states) {
            EXPECT(s.values.rows() == 333, "batched state length is not 333");
        }
    }
}

void criterion_sampler_identities() {
    Tensor u = seeded_normal({3, 3}, 1, 1.0f);
    Tensor c = seeded_normal({3, 3}, 2, 1.0f);
    EXPECT(cfg_combine(u, c, 1.0f).data == c.data, "cfg_combine(u,c,1) != c");
    EXPECT(cfg_combine(u, u, 6.0f).data == u.data, "cfg_combine(u,u,6) != u");

    SchedulerConfig sched;
    sched.steps = 8;
    auto sigmas = sgm_uniform_sigmas(sched);
    for (size_t k = 0; k + 1 < sigmas.size(); ++k) {
        EXPECT(sigmas[k] > sigmas[k + 1], "sigma list is not strictly decreasing");
    }
    EXPECT(sigmas.back() == 0.0f, "sigma list does not end at 0");

    CfgConfig cfg;
    SampleResult res = sample(ZeroEps{}, {4, 3}, sched, cfg, 7);
    Tensor x0 = scale(seeded_normal({4, 3}, 7, 1.0f), sched.sigma_max);
    for (const auto& t : res.trajectory) {
        EXPECT(t.data == x0.data, "eps=0 stub trajectory is not constant");
    }
    EXPECT(res.uniform_steps_run == 8, "denoise=1 did not run all steps");

    cfg.denoise = 0.5f;
    EXPECT(sample(ZeroEps{}, {4, 3}, sched, cfg, 7).uniform_steps_run == 4,
           "denoise=0.5 with steps=8 did not run 4 steps");
}

void criterion_ablation_endpoints() {
    auto start = Clock::now();
    fs::path dir = fs::temp_directory_path() / "rdit_acceptance_ablate";
    fs::remove_all(dir);

    RunConfig cfg = parse_run_config(
        "{\"region\": {\"count\": 2}, \"grid\": {\"height\": 8, \"width\": 8},"
        " \"stack\": {\"num_blocks\": 39, \"d_model\": 32, \"heads\": 2, \"head_dim\": 16},"
        " \"sweep\": {\"counts\": [0, 13, 26, 39]},"
        " \"out\": \"" + dir.string() + "\"}");
    auto rows = cmd_ablate_depth(cfg);

    // every (policy, count, seed, region) combination appears exactly once
    EXPECT(rows.size() == 2u * 4u * 5u * 2u, "unexpected ablation row count");
    for (const auto& r : rows) {
        if (r.count == 0) {
            EXPECT(r.score.inside == 0.0 && r.score.outside == 0.0 && r.score.ratio == 0.0,
                   "score at k=0 is not exactly zero");
        }
        if (r.count == 39) {
            EXPECT(r.score.inside > 0.0, "score at k=39 is not strictly positive");
        }
    }

    // the CSV on disk is loadable and complete
    std::ifstream csv(dir / "ablation.csv");
    EXPECT(csv.good(), "ablation.csv missing");
    std::string line;
    EXPECT(std::getline(csv, line) && line == "policy,k,seed,region,inside,outside,ratio",
           "unexpected CSV header");
    std::map<std::string, int> seen;
    size_t data_lines = 0;
    while (std::getline(csv, line)) {
        ++data_lines;
        std::istringstream ls(line);
        std::string policy, k, seed, region, inside, outside, ratio;
        EXPECT(std::getline(ls, policy, ',') && std::getline(ls, k, ',') &&
                   std::getline(ls, seed, ',') && std::getline(ls, region, ',') &&
                   std::getline(ls, inside, ',') && std::getline(ls, outside, ',') &&
                   std::getline(ls, ratio, ','),
               "short CSV row");
        ++seen[policy + "/" + k];
        (void)std::stod(ratio);  // numeric fields parse
    }
    EXPECT(data_lines == rows.size(), "CSV row count mismatch");
    for (const std::string& policy : {"deepest-first", "shallowest-first"}) {
        for (const std::string& k : {"0", "13", "26", "39"}) {
            EXPECT(seen[policy + "/" + k] == 2 * 5, "missing sweep cell " + policy + "/" + k);
        }
    }

    // depth endpoints: shallowest-first so the k=1 point is block 0, leaving
    // the later blocks to diffuse the change across positions; with deepest
    // placement the single injected block is the last one, no later mixing
    // happens, and the outside term is exactly zero by the locality guarantee
    PreparedRun run = prepare_run(cfg);
    int wins = 0;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        double ratios[2];
        int slot = 0;
        for (int k : {1, 39}) {
            StackConfig sc = cfg.stack;
            sc.seed = seed;
            sc.injected = placement_indices(PlacementPolicy::ShallowestFirst, k, 39);
            Stack stack = build_stack(sc);
            ratios[slot++] = regional_influence_score(stack, run.masks, run.cond, 0,
                                                      seed * 1000003ULL)
                                 .ratio;
        }
        if (ratios[1] > ratios[0]) ++wins;
    }
    EXPECT(wins >= 4, "ratio(39) > ratio(1) held in only " + std::to_string(wins) +
                          " of 5 seeds");

    fs::remove_all(dir);
    double secs = std::chrono::duration<double>(Clock::now() - start).count();
    EXPECT(secs < 600.0, "ablation sweep exceeded the 10 min budget");
}

void criterion_metrics() {
    ImageBuffer img = constant_image(8, 8, 0.5f);
    Rng rng(3);
    for (float& v : img.values) v = static_cast<float>(rng.next_unit());
    EXPECT(std::isinf(psnr(img, img)), "psnr(a,a) is not the inf sentinel");
    EXPECT(psnr(constant_image(8, 8, 0.0f), constant_image(8, 8, 1.0f)) == 0.0,
           "psnr(0-image, 1-image) is not exactly 0 dB");
    EXPECT(std::abs(ssim(img, img) - 1.0) < 1e-12, "ssim(a,a) != 1");

    float p = 0.25f, q = 0.75f;
    constexpr double c1 = 0.01 * 0.01;
    double want = (2.0 * p * q + c1) / (double(p) * p + double(q) * q + c1);
    double got = ssim(constant_image(10, 10, p), constant_image(10, 10, q));
    EXPECT(std::abs(got - want) < 1e-9, "constant-image SSIM deviates from the closed form");
}

void criterion_determinism() {
    fs::path d1 = fs::temp_directory_path() / "rdit_acceptance_det1";
    fs::path d2 = fs::temp_directory_path() / "rdit_acceptance_det2";
    fs::remove_all(d1);
    fs::remove_all(d2);
    auto config = [](const std::string& out) {
        return "{\"region\": {\"count\": 2}, \"grid\": {\"height\": 8, \"width\": 8},"
               " \"stack\": {\"num_blocks\": 3, \"d_model\": 16, \"heads\": 2,"
               " \"head_dim\": 8, \"injected\": \"all\"},"
               " \"scheduler\": {\"steps\": 4}, \"seed\": 17, \"out\": \"" + out + "\"}";
    };
    GenerateReport r1 = cmd_generate(parse_run_config(config(d1.string())));
    GenerateReport r2 = cmd_generate(parse_run_config(config(d2.string())));
    EXPECT(r1.final_latent_checksum == r2.final_latent_checksum,
           "final latent checksums differ between identical runs");
    EXPECT(r1.trajectory_checksums == r2.trajectory_checksums,
           "trajectory checksums differ between identical runs");
    fs::remove_all(d1);
    fs::remove_all(d2);
}

void criterion_prompt_robustness() {
    struct MockTransport : Transport {
        std::vector<HttpResponse> script;
        size_t calls = 0;
        HttpResponse post(const std::string&) override {
            if (calls >= script.size()) throw TransportError("mock script exhausted");
            return script[calls++];
        }
    };
    auto envelope = [](const std::string& content) {
        std::string esc;
        for (char ch : content) {
            if (ch == '"' || ch == '\\') esc += '\\';
            esc += ch;
        }
        return "{\"choices\": [{\"message\": {\"content\": \"" + esc + "\"}}]}";
    };
    LlmClientConfig cfg;
    cfg.max_retries = 2;

    std::string valid =
        "{\"high_level\": \"scene\", \"regions\": [{\"index\": 0, \"text\": \"a\"},"
        " {\"index\": 1, \"text\": \"b\"}], \"negative\": \"n\"}";
    MockTransport ok;
    ok.script = {{200, envelope(valid)}};
    ProgressivePrompt p = generate_prompts("x", 2, cfg, &ok);
    EXPECT(p.regions.size() == 2 && p.high_level == "scene", "valid JSON did not parse");

    bool threw = false;
    try {
        parse_progressive_json(
            "{\"high_level\": \"s\", \"regions\": [{\"index\": 0, \"text\": \"a\"},"
            " {\"index\": 0, \"text\": \"b\"}], \"negative\": \"n\"}",
            2);
    } catch (const SchemaError&) {
        threw = true;
    }
    EXPECT(threw, "duplicate region indices were accepted");

    threw = false;
    try {
        parse_progressive_json("{\"high_level\": \"s\"}", 2);
    } catch (const SchemaError&) {
        threw = true;
    }
    EXPECT(threw, "missing fields were accepted");

    MockTransport flaky;
    flaky.script = {{500, "{}"}, {500, "{}"}, {500, "{}"}, {500, "{}"}};
    threw = false;
    try {
        generate_prompts("x", 2, cfg, &flaky);
    } catch (const TransportError&) {
        threw = true;
    }
    EXPECT(threw, "persistent 500s did not raise TransportError");
    EXPECT(flaky.calls == 3, "retry budget not respected: " + std::to_string(flaky.calls) +
                                 " calls for max_retries=2");
}

}  // namespace

int main() {
    struct Criterion {
        const char* label;
        std::function<void()> fn;
    };
    const std::vector<Criterion> criteria = {
        {"1. oracle equivalence (cross + both region modes, 20 instances, <1e-5)",
         criterion_oracle_equivalence},
        {"2. N=1 degeneracy is bit-for-bit (10 instances)", criterion_degeneracy},
        {"3. identical-prompt collapse through 39 blocks, N in {2,4,9}, <1e-4",
         criterion_identical_prompt_collapse},
        {"4. output-masked locality is bitwise for all (N, j)", criterion_locality},
        {"5. literal-mode bias law vs double-precision oracle, <1e-5",
         criterion_literal_bias_law},
        {"6. stripe masks partition every grid/axis/N combination",
         criterion_partition_invariant},
        {"7. text states are 333 rows; batches are N+1", criterion_text_state_contract},
        {"8. sampler identities (CFG, sigma order, denoise truncation)",
         criterion_sampler_identities},
        {"9. ablation endpoints and CSV completeness", criterion_ablation_endpoints},
        {"10. metric identities (PSNR sentinel, SSIM closed forms)", criterion_metrics},
        {"11. cmd_generate is checksum-deterministic offline", criterion_determinism},
        {"12. prompt generation is robust against a mock server",
         criterion_prompt_robustness},
    };

    int failures = 0;
    for (const auto& c : criteria) {
        auto start = Clock::now();
        std::string error;
        try {
            c.fn();
        } catch (const std::exception& e) {
            error = e.what();
        }
        double secs = std::chrono::duration<double>(Clock::now() - start).count();
        if (error.empty()) {
            std::printf("[PASS] %s (%.2fs)\n", c.label, secs);
        } else {
            std::printf("[FAIL] %s (%.2fs): %s\n", c.label, secs, error.c_str());
            ++failures;
        }
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
        return 1;
    }
    std::printf("all %zu criteria passed\n", criteria.size());
    return 0;
}
