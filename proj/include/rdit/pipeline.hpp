#pragma once

#include <string>
#include <vector>

#include "rdit/config.hpp"
#include "rdit/metrics.hpp"
#include "rdit/prompt_gen.hpp"

namespace rdit {

struct GenerateReport {
    std::string report_path;
    std::string final_latent_checksum;
    std::vector<std::string> trajectory_checksums;
    int steps_run = 0;
};

// Builds masks and text states for a config; shared by generate and ablate.
struct PreparedRun {
    std::vector<RegionMask> masks;
    Conditioning cond;
    ProgressivePrompt prompt;
    bool llm_used = false;
};

PreparedRun prepare_run(const RunConfig& cfg, Transport* llm_transport = nullptr);
std::vector<RegionMask> build_masks(const RunConfig& cfg);

// prompt-gen -> text-states -> sample; writes trajectory fixtures, the final
// latent, and report.json under cfg.out_dir.
GenerateReport cmd_generate(const RunConfig& cfg, Transport* llm_transport = nullptr);

struct AblationRow {
    std::string policy;
    int count = 0;
    uint64_t seed = 0;
    int region = 0;
    InfluenceScore score;
};

// Depth sweep per (policy, count, seed, region); emits ablation.csv and
// ablation.json under cfg.out_dir and returns the rows.
std::vector<AblationRow> cmd_ablate_depth(const RunConfig& cfg);

// One PGM per region plus index.json under cfg.out_dir.
std::vector<std::string> cmd_masks(const RunConfig& cfg);

// ProgressivePrompt JSON text for stdout.
std::string cmd_prompts(const std::string& intent, int n, bool offline,
                        const LlmClientConfig& llm, Transport* transport = nullptr);

}  // namespace rdit
