#include "rdit/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

using nlohmann::json;

namespace rdit {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& why) {
    throw ConfigError("config field '" + field + "': " + why);
}

template <typename T>
T get_or(const json& obj, const std::string& field, T fallback) {
    if (!obj.contains(field)) return fallback;
    try {
        return obj.at(field).get<T>();
    } catch (const json::exception&) {
        fail(field, "wrong type");
    }
}

AttentionMode parse_mode(const std::string& s) {
    if (s == "output-masked") return AttentionMode::RegionOutputMasked;
    if (s == "literal") return AttentionMode::RegionLiteral;
    fail("stack.mode", "expected 'output-masked' or 'literal', got '" + s + "'");
}

std::vector<int> parse_injected(const json& stack, int num_blocks) {
    if (!stack.contains("injected")) return {};
    const json& inj = stack.at("injected");
    if (inj.is_string()) {
        std::string s = inj.get<std::string>();
        if (s == "none") return {};
        if (s == "all") {
            std::vector<int> all(static_cast<size_t>(num_blocks));
            for (int i = 0; i < num_blocks; ++i) all[static_cast<size_t>(i)] = i;
            return all;
        }
        fail("stack.injected", "expected 'all', 'none', a list, or {count, policy}");
    }
    if (inj.is_array()) {
        try {
            return inj.get<std::vector<int>>();
        } catch (const json::exception&) {
            fail("stack.injected", "list entries must be integers");
        }
    }
    if (inj.is_object()) {
        int count = get_or(inj, "count", 0);
        std::string policy = get_or<std::string>(inj, "policy", "deepest-first");
        return placement_indices(parse_policy(policy), count, num_blocks);
    }
    fail("stack.injected", "unsupported value");
}

EmbeddingPair parse_pair(const json& obj, const std::string& field) {
    if (!obj.is_object() || !obj.contains("long") || !obj.contains("short")) {
        fail(field, "expected {long: path, short: path}");
    }
    return {obj.at("long").get<std::string>(), obj.at("short").get<std::string>()};
}

}  // namespace

PlacementPolicy parse_policy(const std::string& name) {
    if (name == "deepest-first") return PlacementPolicy::DeepestFirst;
    if (name == "shallowest-first") return PlacementPolicy::ShallowestFirst;
    throw ConfigError("unknown placement policy '" + name + "'");
}

RunConfig parse_run_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");

    RunConfig c;

    if (doc.contains("region")) {
        const json& r = doc.at("region");
        std::string axis = get_or<std::string>(r, "axis", "height");
        if (axis == "height") c.region.axis = Axis::Height;
        else if (axis == "width") c.region.axis = Axis::Width;
        else fail("region.axis", "expected 'height' or 'width'");
        c.region.count = get_or(r, "count", 2);
        if (c.region.count < 1) fail("region.count", "must be >= 1");
        if (r.contains("layout")) {
            const json& l = r.at("layout");
            if (l.is_string()) {
                if (l.get<std::string>() != "stripes") {
                    fail("region.layout", "expected 'stripes' or {rows, cols}");
                }
            } else if (l.is_object()) {
                GridLayout g;
                g.rows = get_or(l, "rows", 0);
                g.cols = get_or(l, "cols", 0);
                if (g.rows < 1 || g.cols < 1) fail("region.layout", "rows/cols must be >= 1");
                c.grid_layout = g;
            } else {
                fail("region.layout", "unsupported value");
            }
        }
    } else {
        c.region.count = 2;
    }

    if (doc.contains("grid")) {
        const json& g = doc.at("grid");
        c.grid.height = get_or(g, "height", 32);
        c.grid.width = get_or(g, "width", 32);
        if (c.grid.height < 1 || c.grid.width < 1) fail("grid", "dimensions must be >= 1");
    }

    if (doc.contains("stack")) {
        const json& s = doc.at("stack");
        c.stack.num_blocks = get_or(s, "num_blocks", kDefaultNumBlocks);
        if (c.stack.num_blocks < 1) fail("stack.num_blocks", "must be >= 1");
        c.stack.d_model = get_or<size_t>(s, "d_model", 64);
        c.stack.heads = get_or(s, "heads", 4);
        c.stack.head_dim = get_or(s, "head_dim", 16);
        c.stack.mode = parse_mode(get_or<std::string>(s, "mode", "output-masked"));
        c.stack.injected = parse_injected(s, c.stack.num_blocks);
        for (int idx : c.stack.injected) {
            if (idx < 0 || idx >= c.stack.num_blocks) {
                fail("stack.injected", "index " + std::to_string(idx) + " out of range");
            }
        }
    }

    if (doc.contains("scheduler")) {
        const json& s = doc.at("scheduler");
        c.scheduler.steps = get_or(s, "steps", 20);
        c.scheduler.sigma_max = get_or(s, "sigma_max", 1.0f);
        c.scheduler.sigma_min = get_or(s, "sigma_min", 0.01f);
        std::string kind = get_or<std::string>(s, "kind", "sgm-uniform");
        if (kind != "sgm-uniform") fail("scheduler.kind", "only 'sgm-uniform' is supported");
        if (c.scheduler.steps < 1) fail("scheduler.steps", "must be >= 1");
    }

    if (doc.contains("cfg")) {
        const json& g = doc.at("cfg");
        c.cfg.scale = get_or(g, "scale", 6.0f);
        c.cfg.denoise = get_or(g, "denoise", 1.0f);
        if (c.cfg.scale < 0.0f) fail("cfg.scale", "must be >= 0");
        if (!(c.cfg.denoise > 0.0f && c.cfg.denoise <= 1.0f)) {
            fail("cfg.denoise", "must be in (0, 1]");
        }
    }

    if (doc.contains("prompts")) {
        const json& p = doc.at("prompts");
        std::string src = get_or<std::string>(p, "source", "offline");
        if (src == "offline") c.prompt_source = PromptSource::Offline;
        else if (src == "llm") c.prompt_source = PromptSource::Llm;
        else if (src == "files") c.prompt_source = PromptSource::Files;
        else fail("prompts.source", "expected 'offline', 'llm', or 'files'");
        c.intent = get_or<std::string>(p, "intent", c.intent);
        if (p.contains("llm")) {
            const json& l = p.at("llm");
            c.llm.endpoint = get_or(l, "endpoint", c.llm.endpoint);
            c.llm.model = get_or(l, "model", c.llm.model);
            c.llm.api_key_env = get_or(l, "api_key_env", c.llm.api_key_env);
            c.llm.timeout_seconds = get_or(l, "timeout_seconds", c.llm.timeout_seconds);
            c.llm.max_retries = get_or(l, "max_retries", c.llm.max_retries);
            if (c.llm.timeout_seconds <= 0) fail("prompts.llm.timeout_seconds", "must be > 0");
            if (c.llm.max_retries < 0) fail("prompts.llm.max_retries", "must be >= 0");
        }
        if (p.contains("files")) {
            const json& f = p.at("files");
            if (!f.contains("positives") || !f.at("positives").is_array()) {
                fail("prompts.files.positives", "expected a list of {long, short} pairs");
            }
            for (const auto& e : f.at("positives")) {
                c.files.positives.push_back(parse_pair(e, "prompts.files.positives"));
            }
            c.files.negative = parse_pair(f.at("negative"), "prompts.files.negative");
            c.files.merged = parse_pair(f.at("merged"), "prompts.files.merged");
        }
    }

    if (doc.contains("text")) {
        const json& t = doc.at("text");
        c.d_long = get_or<size_t>(t, "d_long", c.d_long);
        c.d_short = get_or<size_t>(t, "d_short", c.d_short);
    }

    if (doc.contains("sweep")) {
        const json& s = doc.at("sweep");
        if (s.contains("counts")) c.sweep.counts = s.at("counts").get<std::vector<int>>();
        if (s.contains("policies")) {
            c.sweep.policies = s.at("policies").get<std::vector<std::string>>();
        }
        if (s.contains("seeds")) c.sweep.seeds = s.at("seeds").get<std::vector<uint64_t>>();
        if (s.contains("explicit_sets")) {
            c.sweep.explicit_sets = s.at("explicit_sets").get<std::vector<std::vector<int>>>();
        }
        for (int k : c.sweep.counts) {
            if (k < 0 || k > c.stack.num_blocks) {
                fail("sweep.counts", "count " + std::to_string(k) + " out of range");
            }
        }
        for (const auto& pol : c.sweep.policies) {
            if (pol != "deepest-first" && pol != "shallowest-first" && pol != "explicit") {
                fail("sweep.policies", "unknown policy '" + pol + "'");
            }
        }
    }

    c.seed = get_or<uint64_t>(doc, "seed", 0);
    c.stack.seed = get_or<uint64_t>(doc, "stack_seed", c.seed);
    c.out_dir = get_or<std::string>(doc, "out", c.out_dir);

    // cross-field consistency
    if (c.prompt_source == PromptSource::Files &&
        static_cast<int>(c.files.positives.size()) != c.region_count()) {
        fail("prompts.files.positives",
             "count must equal the region count (" + std::to_string(c.region_count()) + ")");
    }
    int axis_len = c.region.axis == Axis::Height ? c.grid.height : c.grid.width;
    if (!c.grid_layout && c.region.count > axis_len) {
        fail("region.count", "exceeds the chosen axis length");
    }

    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_run_config(buf.str());
}

std::string run_config_to_json(const RunConfig& c) {
    json doc;
    doc["region"]["axis"] = c.region.axis == Axis::Height ? "height" : "width";
    doc["region"]["count"] = c.region.count;
    if (c.grid_layout) {
        doc["region"]["layout"] = {{"rows", c.grid_layout->rows},
                                   {"cols", c.grid_layout->cols}};
    } else {
        doc["region"]["layout"] = "stripes";
    }
    doc["grid"] = {{"height", c.grid.height}, {"width", c.grid.width}};
    doc["stack"] = {{"num_blocks", c.stack.num_blocks},
                    {"injected", c.stack.injected},
                    {"mode", c.stack.mode == AttentionMode::RegionLiteral ? "literal"
                                                                          : "output-masked"},
                    {"d_model", c.stack.d_model},
                    {"heads", c.stack.heads},
                    {"head_dim", c.stack.head_dim},
                    {"seed", c.stack.seed}};
    doc["scheduler"] = {{"steps", c.scheduler.steps},
                        {"sigma_max", c.scheduler.sigma_max},
                        {"sigma_min", c.scheduler.sigma_min},
                        {"kind", "sgm-uniform"}};
    doc["cfg"] = {{"scale", c.cfg.scale}, {"denoise", c.cfg.denoise}};
    doc["prompts"]["source"] = c.prompt_source == PromptSource::Offline ? "offline"
                               : c.prompt_source == PromptSource::Llm  ? "llm"
                                                                       : "files";
    doc["prompts"]["intent"] = c.intent;
    if (c.prompt_source == PromptSource::Llm) {
        doc["prompts"]["llm"] = {{"endpoint", c.llm.endpoint},
                                 {"model", c.llm.model},
                                 {"api_key_env", c.llm.api_key_env},
                                 {"timeout_seconds", c.llm.timeout_seconds},
                                 {"max_retries", c.llm.max_retries}};
    }
    doc["text"] = {{"d_long", c.d_long}, {"d_short", c.d_short}};
    doc["seed"] = c.seed;
    doc["out"] = c.out_dir;
    return doc.dump(2);
}

}  // namespace rdit
