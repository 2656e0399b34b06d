#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "mirage/agent.hpp"
#include "mirage/provider.hpp"
#include "mirage/search.hpp"

namespace mirage::config {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Effective runtime configuration. Precedence: CLI flag > environment
// variable > config file > built-in default. Unknown config-file keys are
// rejected.
struct GlobalConfig {
    struct ProviderConfig {
        std::string type = "mock";  // mock | http
        std::string mock_script;
        std::string endpoint;
        std::string api_key;
        std::string model = "gpt-4o";
        int max_retries = 2;
        int max_inflight = 4;
    } provider;

    struct EmbedderConfig {
        std::string type = "hashing";
        std::size_t dimension = 256;
        std::uint64_t seed = 0x6d697261676531ull;
    } embedder;

    struct Paths {
        std::string store;
        std::string suite;
        std::string corpus;
        std::string out;
    } paths;

    agent::AgentOptions agent;
    search::SearchConfig search;
    double merge_threshold = 0.92;
    std::uint64_t seed = 0;
    bool trace = false;

    static GlobalConfig load(const std::string& config_path = "");  // "" = defaults + env
    void apply_env_overrides();

    nlohmann::json dump() const;  // machine-readable --config-dump

    std::shared_ptr<const embed::Embedder> make_embedder() const;
    std::shared_ptr<const llm::Provider> make_provider() const;
};

}  // namespace mirage::config
