#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>

#include "rdit/stack.hpp"

using namespace rdit;

static StackConfig small_config() {
    StackConfig cfg;
    cfg.num_blocks = 4;
    cfg.d_model = 8;
    cfg.heads = 2;
    cfg.head_dim = 4;
    cfg.seed = 5;
    return cfg;
}

static std::vector<RegionMask> line_masks(int L, int n) {
    return divide_regions({Axis::Height, n}, LatentGrid{L, 1});
}

static Conditioning make_cond(int n, size_t d, uint64_t seed) {
    Rng rng(seed);
    Conditioning cond;
    for (int i = 0; i < n; ++i) {
        TextState s;
        s.values = seeded_normal({6, d}, rng, 1.0f);
        cond.regional.push_back(std::move(s));
    }
    cond.merged.values = seeded_normal({6, d}, rng, 1.0f);
    cond.negative.values = seeded_normal({6, d}, rng, 1.0f);
    return cond;
}

TEST_CASE("build_stack honors the injection set") {
    StackConfig cfg = small_config();
    CHECK(build_stack(cfg).injected_count() == 0);

    cfg.injected = {0, 1, 2, 3};
    Stack full = build_stack(cfg);
    CHECK(full.injected_count() == 4);
    for (int i = 0; i < 4; ++i) CHECK(full.block_injected(i));

    cfg.injected = {2};
    Stack one = build_stack(cfg);
    CHECK(one.block_injected(2));
    CHECK_FALSE(one.block_injected(1));

    cfg.injected = {7};
    CHECK_THROWS_AS(build_stack(cfg), ConfigError);
}

TEST_CASE("same seed gives identical forwards, different seed differs") {
    StackConfig cfg = small_config();
    Tensor latent = seeded_normal({6, 8}, 1, 1.0f);
    Conditioning cond = make_cond(2, 8, 2);
    auto masks = line_masks(6, 2);

    Tensor a = build_stack(cfg).forward(latent, 0.3f, cond, masks);
    Tensor b = build_stack(cfg).forward(latent, 0.3f, cond, masks);
    CHECK(a.data == b.data);

    cfg.seed = 6;
    Tensor c = build_stack(cfg).forward(latent, 0.3f, cond, masks);
    CHECK(a.data != c.data);
}

TEST_CASE("without injection the regional states are unused") {
    StackConfig cfg = small_config();
    Stack stack = build_stack(cfg);
    Tensor latent = seeded_normal({6, 8}, 3, 1.0f);
    auto masks = line_masks(6, 2);
    Conditioning cond = make_cond(2, 8, 4);
    Conditioning other = cond;
    other.regional[0].values = seeded_normal({6, 8}, 99, 1.0f);
    other.regional[1].values = seeded_normal({6, 8}, 98, 1.0f);
    Tensor a = stack.forward(latent, 0.5f, cond, masks);
    Tensor b = stack.forward(latent, 0.5f, other, masks);
    CHECK(a.data == b.data);
}

TEST_CASE("identical regional states match the merged baseline through the stack") {
    StackConfig cfg = small_config();
    cfg.injected = {0, 1, 2, 3};
    cfg.mode = AttentionMode::RegionOutputMasked;
    Stack injected = build_stack(cfg);

    StackConfig base_cfg = cfg;
    base_cfg.injected.clear();
    Stack baseline = build_stack(base_cfg);

    Tensor latent = seeded_normal({6, 8}, 7, 1.0f);
    auto masks = line_masks(6, 2);
    Conditioning cond = make_cond(2, 8, 8);
    cond.regional[0] = cond.merged;
    cond.regional[1] = cond.merged;

    Tensor a = injected.forward(latent, 0.2f, cond, masks);
    Tensor b = baseline.forward(latent, 0.2f, cond, masks);
    CHECK(max_abs_diff(a, b) < 1e-4f);
}

TEST_CASE("forward_negative equals forward when the negative state is the merged state") {
    StackConfig cfg = small_config();
    Stack stack = build_stack(cfg);
    Tensor latent = seeded_normal({6, 8}, 9, 1.0f);
    auto masks = line_masks(6, 2);
    Conditioning cond = make_cond(2, 8, 10);
    cond.negative = cond.merged;
    Tensor a = stack.forward(latent, 0.4f, cond, masks);
    Tensor b = stack.forward_negative(latent, 0.4f, cond.negative);
    CHECK(a.data == b.data);
}

TEST_CASE("timestep enters the network") {
    StackConfig cfg = small_config();
    Stack stack = build_stack(cfg);
    Tensor latent = seeded_normal({6, 8}, 11, 1.0f);
    auto masks = line_masks(6, 2);
    Conditioning cond = make_cond(2, 8, 12);
    Tensor a = stack.forward(latent, 0.1f, cond, masks);
    Tensor b = stack.forward(latent, 0.9f, cond, masks);
    CHECK(a.data != b.data);
}

TEST_CASE("save/load round-trips weights and injection flags") {
    namespace fs = std::filesystem;
    StackConfig cfg = small_config();
    cfg.injected = {1, 3};
    Stack stack = build_stack(cfg);

    fs::path dir = fs::temp_directory_path() / "rdit_stack_roundtrip";
    fs::remove_all(dir);
    stack.save(dir.string());
    Stack loaded = Stack::load(dir.string());

    CHECK(loaded.injected_count() == 2);
    CHECK(loaded.block_injected(1));
    CHECK(loaded.block_injected(3));

    Tensor latent = seeded_normal({6, 8}, 13, 1.0f);
    auto masks = line_masks(6, 2);
    Conditioning cond = make_cond(2, 8, 14);
    CHECK(stack.forward(latent, 0.3f, cond, masks).data ==
          loaded.forward(latent, 0.3f, cond, masks).data);
    fs::remove_all(dir);
}

TEST_CASE("zero-latent golden regression") {
    StackConfig cfg = small_config();
    cfg.injected = {0, 2};
    Stack stack = build_stack(cfg);
    Tensor latent = Tensor::zeros({6, 8});
    auto masks = line_masks(6, 2);
    Conditioning cond = make_cond(2, 8, 20);
    Tensor out = stack.forward(latent, 0.5f, cond, masks);
    // frozen from the first verified run of this configuration
    CHECK(out.at(0, 0) == doctest::Approx(0.00479585305f).epsilon(1e-5));
    CHECK(out.at(5, 7) == doctest::Approx(-0.000276230741f).epsilon(1e-5));
    double sum = 0.0;
    for (float v : out.data) sum += v;
    CHECK(sum == doctest::Approx(0.00920570316).epsilon(1e-5));
}

TEST_CASE("placement policies") {
    auto deep = placement_indices(PlacementPolicy::DeepestFirst, 3, 39);
    CHECK(deep == std::vector<int>{36, 37, 38});
    auto shallow = placement_indices(PlacementPolicy::ShallowestFirst, 3, 39);
    CHECK(shallow == std::vector<int>{0, 1, 2});
    CHECK(placement_indices(PlacementPolicy::DeepestFirst, 0, 39).empty());
    CHECK_THROWS_AS(placement_indices(PlacementPolicy::DeepestFirst, 40, 39), ConfigError);
}
