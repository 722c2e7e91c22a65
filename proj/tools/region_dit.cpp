#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "rdit/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitPipeline = 3;
constexpr int kExitTransport = 4;

rdit::RunConfig load_with_overrides(const std::string& config_path, uint64_t seed,
                                    bool has_seed, const std::string& out,
                                    bool offline) {
    rdit::RunConfig cfg =
        config_path.empty() ? rdit::RunConfig{} : rdit::load_run_config(config_path);
    if (has_seed) {
        cfg.seed = seed;
        cfg.stack.seed = seed;
    }
    if (!out.empty()) cfg.out_dir = out;
    if (offline) cfg.prompt_source = rdit::PromptSource::Offline;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"region-dit: regional cross-attention diffusion pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    uint64_t seed = 0;
    bool offline = false;

    auto add_common = [&](CLI::App* cmd, bool config_required) {
        auto* opt = cmd->add_option("--config", config_path, "JSON run config");
        if (config_required) opt->required();
        cmd->add_option("--seed", seed, "override the run seed");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_flag("--offline", offline, "force the offline prompt template");
    };

    auto* gen = app.add_subcommand("generate", "run the full generation pipeline");
    add_common(gen, true);

    auto* abl = app.add_subcommand("ablate-depth", "injection-depth ablation sweep");
    add_common(abl, true);

    auto* msk = app.add_subcommand("masks", "dump region masks as PGM images");
    add_common(msk, false);
    int mask_n = 2;
    std::string mask_axis = "height";
    int grid_h = 32, grid_w = 32;
    msk->add_option("--regions", mask_n, "number of regions");
    msk->add_option("--axis", mask_axis, "height or width");
    msk->add_option("--height", grid_h, "latent grid height");
    msk->add_option("--width", grid_w, "latent grid width");

    auto* prm = app.add_subcommand("prompts", "progressive prompt generation");
    std::string intent;
    int prompt_n = 2;
    bool use_llm = false;
    prm->add_option("--intent", intent, "user intent text")->required();
    prm->add_option("--regions", prompt_n, "number of regions");
    prm->add_flag("--llm", use_llm, "query the configured LLM endpoint");
    prm->add_option("--config", config_path, "JSON run config (for the llm section)");
    prm->add_flag("--offline", offline, "use the offline template");

    CLI11_PARSE(app, argc, argv);

    bool has_seed = gen->count("--seed") > 0 || abl->count("--seed") > 0 ||
                    msk->count("--seed") > 0;

    try {
        if (gen->parsed()) {
            rdit::RunConfig cfg =
                load_with_overrides(config_path, seed, has_seed, out_dir, offline);
            rdit::GenerateReport report = rdit::cmd_generate(cfg);
            std::cout << "report: " << report.report_path << "\n"
                      << "final latent checksum: " << report.final_latent_checksum << "\n";
        } else if (abl->parsed()) {
            rdit::RunConfig cfg =
                load_with_overrides(config_path, seed, has_seed, out_dir, offline);
            auto rows = rdit::cmd_ablate_depth(cfg);
            std::cout << "ablation rows: " << rows.size() << " -> " << cfg.out_dir
                      << "/ablation.csv\n";
        } else if (msk->parsed()) {
            rdit::RunConfig cfg =
                load_with_overrides(config_path, seed, has_seed, out_dir, offline);
            if (config_path.empty()) {
                cfg.region.count = mask_n;
                cfg.region.axis = mask_axis == "width" ? rdit::Axis::Width
                                                       : rdit::Axis::Height;
                cfg.grid = {grid_h, grid_w};
            }
            auto paths = rdit::cmd_masks(cfg);
            for (const auto& p : paths) std::cout << p << "\n";
        } else if (prm->parsed()) {
            rdit::LlmClientConfig llm;
            if (!config_path.empty()) llm = rdit::load_run_config(config_path).llm;
            bool use_offline = offline || !use_llm;
            std::cout << rdit::cmd_prompts(intent, prompt_n, use_offline, llm) << "\n";
        }
    } catch (const rdit::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const rdit::TransportError& e) {
        std::cerr << "transport error: " << e.what() << "\n";
        return kExitTransport;
    } catch (const rdit::SchemaError& e) {
        std::cerr << "schema error: " << e.what() << "\n";
        return kExitPipeline;
    } catch (const rdit::Error& e) {
        std::cerr << "pipeline error: " << e.what() << "\n";
        return kExitPipeline;
    }
    return kExitOk;
}
