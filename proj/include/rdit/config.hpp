#pragma once

#include <optional>
#include <string>
#include <vector>

#include "rdit/masks.hpp"
#include "rdit/prompt_gen.hpp"
#include "rdit/sampler.hpp"
#include "rdit/stack.hpp"

namespace rdit {

enum class PromptSource { Offline, Llm, Files };

struct GridLayout {
    int rows = 0;
    int cols = 0;
};

struct EmbeddingPair {
    std::string long_path;
    std::string short_path;
};

struct PromptFilesConfig {
    std::vector<EmbeddingPair> positives;
    EmbeddingPair negative;
    EmbeddingPair merged;
};

struct SweepConfig {
    std::vector<int> counts = {0, 13, 26, 39};
    std::vector<std::string> policies = {"deepest-first", "shallowest-first"};
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<std::vector<int>> explicit_sets;  // used when a policy is "explicit"
};

struct RunConfig {
    RegionSpec region;
    std::optional<GridLayout> grid_layout;  // 3x3-style region layout
    LatentGrid grid{32, 32};

    StackConfig stack;
    SchedulerConfig scheduler;
    CfgConfig cfg;

    PromptSource prompt_source = PromptSource::Offline;
    std::string intent = "a landscape";
    LlmClientConfig llm;
    PromptFilesConfig files;

    size_t d_long = 32;
    size_t d_short = 24;

    uint64_t seed = 0;
    std::string out_dir = "out";

    SweepConfig sweep;

    int region_count() const {
        return grid_layout ? grid_layout->rows * grid_layout->cols : region.count;
    }
};

// Parses the JSON config document; unknown or ill-typed fields raise
// ConfigError naming the field.
RunConfig load_run_config(const std::string& path);
RunConfig parse_run_config(const std::string& json_text);

// Effective config with defaults expanded, echoed into every report.
std::string run_config_to_json(const RunConfig& c);

PlacementPolicy parse_policy(const std::string& name);

}  // namespace rdit
