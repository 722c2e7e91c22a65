#include "rdit/prompt_gen.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <json.hpp>

#include <httplib.h>

using nlohmann::json;

namespace rdit {

namespace {

struct HttpTransport : Transport {
    std::string base;
    std::string path;
    std::string api_key;
    int timeout_seconds;

    HttpResponse post(const std::string& body) override {
        httplib::Client cli(base);
        cli.set_connection_timeout(timeout_seconds, 0);
        cli.set_read_timeout(timeout_seconds, 0);
        httplib::Headers headers;
        if (!api_key.empty()) {
            headers.emplace("Authorization", "Bearer " + api_key);
        }
        auto res = cli.Post(path, headers, body, "application/json");
        if (!res) {
            throw TransportError("request to " + base + path + " failed: " +
                                 httplib::to_string(res.error()));
        }
        return {res->status, res->body};
    }
};

}  // namespace

std::unique_ptr<Transport> make_http_transport(const LlmClientConfig& cfg) {
    auto t = std::make_unique<HttpTransport>();
    auto scheme_end = cfg.endpoint.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint must include a scheme: " + cfg.endpoint);
    }
    auto path_start = cfg.endpoint.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        t->base = cfg.endpoint;
        t->path = "/";
    } else {
        t->base = cfg.endpoint.substr(0, path_start);
        t->path = cfg.endpoint.substr(path_start);
    }
    t->timeout_seconds = cfg.timeout_seconds;
    if (const char* key = std::getenv(cfg.api_key_env.c_str())) {
        t->api_key = key;
    }
    return t;
}

ProgressivePrompt parse_progressive_json(const std::string& text, int n) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(std::string("response is not valid JSON: ") + e.what(), text);
    }
    if (!doc.is_object() || !doc.contains("high_level") || !doc.contains("regions") ||
        !doc.contains("negative")) {
        throw SchemaError("missing high_level/regions/negative fields", text);
    }
    ProgressivePrompt p;
    try {
        p.high_level = doc["high_level"].get<std::string>();
        p.negative = doc["negative"].get<std::string>();
        for (const auto& r : doc["regions"]) {
            RegionPromptEntry e;
            e.index = r.at("index").get<int>();
            e.text = r.at("text").get<std::string>();
            p.regions.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("malformed prompt structure: ") + e.what(), text);
    }
    if (static_cast<int>(p.regions.size()) != n) {
        throw SchemaError("expected " + std::to_string(n) + " regions, got " +
                              std::to_string(p.regions.size()),
                          text);
    }
    std::vector<bool> seen(static_cast<size_t>(n), false);
    for (const auto& r : p.regions) {
        if (r.index < 0 || r.index >= n) {
            throw SchemaError("region index " + std::to_string(r.index) + " out of range",
                              text);
        }
        if (seen[static_cast<size_t>(r.index)]) {
            throw SchemaError("duplicate region index " + std::to_string(r.index), text);
        }
        seen[static_cast<size_t>(r.index)] = true;
        if (r.text.empty()) throw SchemaError("empty region text", text);
    }
    if (p.high_level.empty() || p.negative.empty()) {
        throw SchemaError("high_level and negative must be nonempty", text);
    }
    return p;
}

static std::string instruction_template(const std::string& intent, int n) {
    json user;
    user["task"] = "Decompose the image request into progressive prompts.";
    user["intent"] = intent;
    user["region_count"] = n;
    return "Produce exactly this JSON shape and nothing else: "
           "{\"high_level\": string describing layout, style and topic, "
           "\"regions\": [{\"index\": int, \"text\": string with low-level detail "
           "(color, texture, object)}], \"negative\": string}. "
           "regions must contain one entry per index 0.." +
           std::to_string(n - 1) + ". Request: " + user.dump();
}

static std::string extract_content(const std::string& body) {
    try {
        json doc = json::parse(body);
        return doc.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception& e) {
        throw SchemaError(std::string("unexpected completion envelope: ") + e.what(), body);
    }
}

static HttpResponse post_with_retries(Transport& transport, const std::string& body,
                                      int max_retries) {
    std::string last_error;
    for (int attempt = 0; attempt <= max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 << (attempt - 1)));
        }
        HttpResponse res;
        try {
            res = transport.post(body);
        } catch (const TransportError&) {
            if (attempt == max_retries) throw;
            last_error = "transport failure";
            continue;
        }
        if (res.status >= 500) {
            last_error = "server returned " + std::to_string(res.status);
            continue;
        }
        if (res.status != 200) {
            // client errors are not transient; fail immediately
            throw TransportError("server returned status " + std::to_string(res.status));
        }
        return res;
    }
    throw TransportError("retries exhausted: " + last_error);
}

ProgressivePrompt generate_prompts(const std::string& user_intent, int n,
                                   const LlmClientConfig& cfg, Transport* transport) {
    if (n < 1) throw ConfigError("region count must be >= 1");
    std::unique_ptr<Transport> owned;
    if (transport == nullptr) {
        owned = make_http_transport(cfg);
        transport = owned.get();
    }

    auto request_body = [&](const std::vector<json>& messages) {
        json body;
        body["model"] = cfg.model;
        body["messages"] = messages;
        body["temperature"] = 0;
        return body.dump();
    };

    std::vector<json> messages = {
        {{"role", "system"}, {"content", "Respond only with JSON."}},
        {{"role", "user"}, {"content", instruction_template(user_intent, n)}},
    };

    HttpResponse res = post_with_retries(*transport, request_body(messages), cfg.max_retries);
    std::string content = extract_content(res.body);
    try {
        return parse_progressive_json(content, n);
    } catch (const SchemaError& first) {
        // one repair round: show the model its own malformed output
        messages.push_back({{"role", "assistant"}, {"content", content}});
        messages.push_back({{"role", "user"},
                            {"content", std::string("That output was invalid (") +
                                            first.what() +
                                            "). Respond again with only the corrected JSON."}});
        HttpResponse retry =
            post_with_retries(*transport, request_body(messages), cfg.max_retries);
        return parse_progressive_json(extract_content(retry.body), n);
    }
}

ProgressivePrompt offline_template(const std::string& user_intent, int n) {
    if (n < 1) throw ConfigError("region count must be >= 1");
    static const char* kDetails[] = {
        "warm golden lighting", "cool blue tones",   "rough stone texture",
        "soft velvet texture",  "a single red object", "scattered green foliage",
        "polished metal surface", "weathered wood grain", "drifting white mist",
    };
    constexpr int kNumDetails = 9;
    ProgressivePrompt p;
    p.high_level = user_intent;
    for (int i = 0; i < n; ++i) {
        p.regions.push_back({i, user_intent + ", region " + std::to_string(i) + " with " +
                                    kDetails[i % kNumDetails]});
    }
    p.negative = "blurry, low quality, distorted, watermark";
    return p;
}

std::string merge_prompts(const ProgressivePrompt& p) {
    auto regions = p.regions;
    std::sort(regions.begin(), regions.end(),
              [](const RegionPromptEntry& a, const RegionPromptEntry& b) {
                  return a.index < b.index;
              });
    std::string out = p.high_level;
    for (const auto& r : regions) {
        out += ", " + r.text;
    }
    return out;
}

std::string progressive_prompt_to_json(const ProgressivePrompt& p) {
    json doc;
    doc["high_level"] = p.high_level;
    doc["regions"] = json::array();
    for (const auto& r : p.regions) {
        doc["regions"].push_back({{"index", r.index}, {"text", r.text}});
    }
    doc["negative"] = p.negative;
    return doc.dump(2);
}

}  // namespace rdit
