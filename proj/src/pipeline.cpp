#include "rdit/pipeline.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "rdit/fixture_io.hpp"
#include "rdit/image_io.hpp"
#include "rdit/sampler.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace rdit {

std::vector<RegionMask> build_masks(const RunConfig& cfg) {
    if (cfg.grid_layout) {
        return divide_regions_grid(cfg.grid_layout->rows, cfg.grid_layout->cols, cfg.grid);
    }
    return divide_regions(cfg.region, cfg.grid);
}

static TextState state_from_text(const std::string& text, const RunConfig& cfg,
                                 const ProjectionMlp& mlp) {
    return build_text_state(make_prompt_record(text, cfg.d_long, cfg.d_short, cfg.seed), mlp);
}

static TextState state_from_files(const EmbeddingPair& pair, const ProjectionMlp& mlp) {
    RawEmbedding long_emb = load_embedding_fixture(pair.long_path);
    RawEmbedding short_emb = load_embedding_fixture(pair.short_path);
    return build_text_state(project_long(long_emb, mlp), short_emb, mlp);
}

PreparedRun prepare_run(const RunConfig& cfg, Transport* llm_transport) {
    PreparedRun run;
    run.masks = build_masks(cfg);
    int n = cfg.region_count();

    ProjectionMlp mlp = make_projection_mlp(cfg.d_long, cfg.d_short, cfg.stack.d_model,
                                            cfg.seed ^ 0x7e71ULL);

    if (cfg.prompt_source == PromptSource::Files) {
        for (const auto& pair : cfg.files.positives) {
            run.cond.regional.push_back(state_from_files(pair, mlp));
        }
        run.cond.negative = state_from_files(cfg.files.negative, mlp);
        run.cond.merged = state_from_files(cfg.files.merged, mlp);
        return run;
    }

    if (cfg.prompt_source == PromptSource::Llm) {
        run.prompt = generate_prompts(cfg.intent, n, cfg.llm, llm_transport);
        run.llm_used = true;
    } else {
        run.prompt = offline_template(cfg.intent, n);
    }

    std::vector<RegionPromptEntry> regions = run.prompt.regions;
    std::sort(regions.begin(), regions.end(),
              [](const RegionPromptEntry& a, const RegionPromptEntry& b) {
                  return a.index < b.index;
              });
    for (const auto& r : regions) {
        run.cond.regional.push_back(state_from_text(r.text, cfg, mlp));
    }
    run.cond.merged = state_from_text(merge_prompts(run.prompt), cfg, mlp);
    run.cond.negative = state_from_text(run.prompt.negative, cfg, mlp);
    return run;
}

GenerateReport cmd_generate(const RunConfig& cfg, Transport* llm_transport) {
    auto t_start = std::chrono::steady_clock::now();
    fs::create_directories(cfg.out_dir);
    fs::create_directories(fs::path(cfg.out_dir) / "trajectory");

    PreparedRun run = prepare_run(cfg, llm_transport);
    Stack stack = build_stack(cfg.stack);
    auto t_built = std::chrono::steady_clock::now();

    StackEpsModel model(stack, run.cond, run.masks);
    size_t L = static_cast<size_t>(cfg.grid.cells());
    SampleResult result =
        sample(model, {L, cfg.stack.d_model}, cfg.scheduler, cfg.cfg, cfg.seed);
    auto t_sampled = std::chrono::steady_clock::now();

    GenerateReport report;
    json steps = json::array();
    for (size_t k = 0; k < result.trajectory.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof(name), "step_%03zu.tensor", k);
        std::string path = (fs::path(cfg.out_dir) / "trajectory" / name).string();
        write_tensor(path, result.trajectory[k]);
        std::string sum = checksum_hex(result.trajectory[k]);
        report.trajectory_checksums.push_back(sum);
        steps.push_back({{"index", result.steps[k].index},
                         {"sigma_from", result.steps[k].sigma_from},
                         {"sigma_to", result.steps[k].sigma_to},
                         {"file", std::string("trajectory/") + name},
                         {"checksum", sum}});
    }
    write_tensor((fs::path(cfg.out_dir) / "final_latent.tensor").string(), result.latent);
    report.final_latent_checksum = checksum_hex(result.latent);
    report.steps_run = result.uniform_steps_run;

    auto ms = [](auto a, auto b) {
        return std::chrono::duration_cast<std::chrono::milliseconds>(b - a).count();
    };
    json doc;
    doc["config"] = json::parse(run_config_to_json(cfg));
    if (cfg.prompt_source != PromptSource::Files) {
        doc["prompt"] = json::parse(progressive_prompt_to_json(run.prompt));
    }
    doc["llm_used"] = run.llm_used;
    doc["deterministic"] = !run.llm_used;
    doc["steps"] = steps;
    doc["steps_run"] = result.uniform_steps_run;
    doc["checksums"] = {{"final_latent", report.final_latent_checksum},
                        {"trajectory", report.trajectory_checksums}};
    doc["timings_ms"] = {{"prepare", ms(t_start, t_built)}, {"sample", ms(t_built, t_sampled)}};

    report.report_path = (fs::path(cfg.out_dir) / "report.json").string();
    std::ofstream os(report.report_path);
    if (!os) throw IoError("cannot write " + report.report_path);
    os << doc.dump(2) << "\n";
    return report;
}

static std::vector<int> sweep_indices(const RunConfig& cfg, const std::string& policy,
                                      int count, size_t sweep_pos) {
    if (policy == "explicit") {
        if (sweep_pos >= cfg.sweep.explicit_sets.size()) {
            throw ConfigError("sweep.explicit_sets shorter than sweep.counts");
        }
        return cfg.sweep.explicit_sets[sweep_pos];
    }
    return placement_indices(parse_policy(policy), count, cfg.stack.num_blocks);
}

std::vector<AblationRow> cmd_ablate_depth(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    PreparedRun run = prepare_run(cfg);
    int n = cfg.region_count();

    std::vector<AblationRow> rows;
    for (const auto& policy : cfg.sweep.policies) {
        for (size_t ci = 0; ci < cfg.sweep.counts.size(); ++ci) {
            int count = cfg.sweep.counts[ci];
            for (uint64_t seed : cfg.sweep.seeds) {
                StackConfig sc = cfg.stack;
                sc.injected = sweep_indices(cfg, policy, count, ci);
                sc.seed = seed;
                Stack stack = build_stack(sc);
                for (int region = 0; region < n; ++region) {
                    AblationRow row;
                    row.policy = policy;
                    row.count = count;
                    row.seed = seed;
                    row.region = region;
                    row.score = regional_influence_score(stack, run.masks, run.cond, region,
                                                         seed * 1000003ULL + region);
                    rows.push_back(std::move(row));
                }
            }
        }
    }

    std::string csv_path = (fs::path(cfg.out_dir) / "ablation.csv").string();
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot write " + csv_path);
    csv << "policy,k,seed,region,inside,outside,ratio\n";
    char buf[64];
    for (const auto& r : rows) {
        csv << r.policy << "," << r.count << "," << r.seed << "," << r.region;
        std::snprintf(buf, sizeof(buf), ",%.9g,%.9g,%.9g", r.score.inside, r.score.outside,
                      r.score.ratio);
        csv << buf << "\n";
    }

    json doc;
    doc["config"] = json::parse(run_config_to_json(cfg));
    doc["rows"] = json::array();
    for (const auto& r : rows) {
        doc["rows"].push_back({{"policy", r.policy},
                               {"k", r.count},
                               {"seed", r.seed},
                               {"region", r.region},
                               {"inside", r.score.inside},
                               {"outside", r.score.outside},
                               {"ratio", r.score.ratio}});
    }
    std::ofstream js((fs::path(cfg.out_dir) / "ablation.json").string());
    js << doc.dump(2) << "\n";
    return rows;
}

std::vector<std::string> cmd_masks(const RunConfig& cfg) {
    fs::create_directories(cfg.out_dir);
    std::vector<RegionMask> masks = build_masks(cfg);
    std::vector<std::string> paths;
    json index = json::array();
    for (const auto& m : masks) {
        char name[32];
        std::snprintf(name, sizeof(name), "mask_%02d.pgm", m.region_index);
        std::string path = (fs::path(cfg.out_dir) / name).string();
        write_pgm(path, mask_to_image(m, cfg.grid));
        index.push_back({{"region", m.region_index},
                         {"file", name},
                         {"cells", m.popcount()}});
        paths.push_back(path);
    }
    std::ofstream os((fs::path(cfg.out_dir) / "masks.json").string());
    os << index.dump(2) << "\n";
    return paths;
}

std::string cmd_prompts(const std::string& intent, int n, bool offline,
                        const LlmClientConfig& llm, Transport* transport) {
    ProgressivePrompt p =
        offline ? offline_template(intent, n) : generate_prompts(intent, n, llm, transport);
    return progressive_prompt_to_json(p);
}

}  // namespace rdit
