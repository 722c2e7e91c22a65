#pragma once

#include <memory>
#include <string>
#include <vector>

#include "rdit/errors.hpp"

namespace rdit {

struct RegionPromptEntry {
    int index = 0;
    std::string text;
};

// High-level layout/style prompt plus per-region low-level details and one
// global negative prompt. Region indices are exactly 0..N-1, each once.
struct ProgressivePrompt {
    std::string high_level;
    std::vector<RegionPromptEntry> regions;
    std::string negative;
};

struct LlmClientConfig {
    std::string endpoint = "http://localhost:8080/v1/chat/completions";
    std::string model = "gpt-4o-mini";
    std::string api_key_env = "LLM_API_KEY";
    int timeout_seconds = 30;
    int max_retries = 2;
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

// Injected transport so tests can mock the network.
struct Transport {
    virtual ~Transport() = default;
    virtual HttpResponse post(const std::string& json_body) = 0;
};

std::unique_ptr<Transport> make_http_transport(const LlmClientConfig& cfg);

// Validates the {high_level, regions:[{index,text}], negative} schema against
// the ProgressivePrompt invariants; throws SchemaError with the raw text.
ProgressivePrompt parse_progressive_json(const std::string& text, int n);

// Queries the LLM with a strict-JSON instruction template; retries transient
// failures with exponential backoff and re-asks once on malformed JSON.
ProgressivePrompt generate_prompts(const std::string& user_intent, int n,
                                   const LlmClientConfig& cfg,
                                   Transport* transport = nullptr);

// Hermetic deterministic substitute for the LLM.
ProgressivePrompt offline_template(const std::string& user_intent, int n);

// high_level followed by region texts in index order, ", " separated.
std::string merge_prompts(const ProgressivePrompt& p);

std::string progressive_prompt_to_json(const ProgressivePrompt& p);

}  // namespace rdit
