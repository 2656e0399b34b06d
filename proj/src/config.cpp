#include "mirage/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>

namespace mirage::config {

namespace {

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known,
                    const std::string& where) {
    for (const auto& [k, v] : obj.items())
        if (!known.count(k))
            throw ConfigError("config: unknown key '" + where + k + "'");
}

}  // namespace

GlobalConfig GlobalConfig::load(const std::string& config_path) {
    GlobalConfig cfg;
    if (!config_path.empty()) {
        std::ifstream in(config_path);
        if (!in) throw ConfigError("config file not readable: " + config_path);
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("config file is not valid JSON: " + std::string(e.what()));
        }
        reject_unknown(doc, {"provider", "embedder", "paths", "agent", "search", "merge_threshold",
                             "seed", "trace"},
                       "");
        if (doc.contains("provider")) {
            const auto& p = doc.at("provider");
            reject_unknown(p, {"type", "mock_script", "endpoint", "api_key", "model",
                               "max_retries", "max_inflight"},
                           "provider.");
            cfg.provider.type = p.value("type", cfg.provider.type);
            cfg.provider.mock_script = p.value("mock_script", cfg.provider.mock_script);
            cfg.provider.endpoint = p.value("endpoint", cfg.provider.endpoint);
            cfg.provider.api_key = p.value("api_key", cfg.provider.api_key);
            cfg.provider.model = p.value("model", cfg.provider.model);
            cfg.provider.max_retries = p.value("max_retries", cfg.provider.max_retries);
            cfg.provider.max_inflight = p.value("max_inflight", cfg.provider.max_inflight);
        }
        if (doc.contains("embedder")) {
            const auto& e = doc.at("embedder");
            reject_unknown(e, {"type", "dimension", "seed"}, "embedder.");
            cfg.embedder.type = e.value("type", cfg.embedder.type);
            cfg.embedder.dimension = e.value("dimension", cfg.embedder.dimension);
            cfg.embedder.seed = e.value("seed", cfg.embedder.seed);
        }
        if (doc.contains("paths")) {
            const auto& p = doc.at("paths");
            reject_unknown(p, {"store", "suite", "corpus", "out"}, "paths.");
            cfg.paths.store = p.value("store", cfg.paths.store);
            cfg.paths.suite = p.value("suite", cfg.paths.suite);
            cfg.paths.corpus = p.value("corpus", cfg.paths.corpus);
            cfg.paths.out = p.value("out", cfg.paths.out);
        }
        if (doc.contains("agent")) {
            const auto& a = doc.at("agent");
            reject_unknown(a,
                           {"k", "grounding_threshold", "reflect_every", "max_regenerations",
                            "max_episode_steps", "max_subgoal_steps", "plan_retries",
                            "exemplar_count"},
                           "agent.");
            cfg.agent.k = a.value("k", cfg.agent.k);
            cfg.agent.grounding_threshold =
                a.value("grounding_threshold", cfg.agent.grounding_threshold);
            cfg.agent.reflect_every = a.value("reflect_every", cfg.agent.reflect_every);
            cfg.agent.max_regenerations = a.value("max_regenerations", cfg.agent.max_regenerations);
            cfg.agent.max_episode_steps = a.value("max_episode_steps", cfg.agent.max_episode_steps);
            cfg.agent.max_subgoal_steps = a.value("max_subgoal_steps", cfg.agent.max_subgoal_steps);
            cfg.agent.plan_retries = a.value("plan_retries", cfg.agent.plan_retries);
            cfg.agent.exemplar_count = a.value("exemplar_count", cfg.agent.exemplar_count);
        }
        if (doc.contains("search")) {
            const auto& s = doc.at("search");
            reject_unknown(s, {"iterations", "depth", "branch", "c_exp", "mode"}, "search.");
            cfg.search.iterations = s.value("iterations", cfg.search.iterations);
            cfg.search.depth = s.value("depth", cfg.search.depth);
            cfg.search.branch = s.value("branch", cfg.search.branch);
            cfg.search.c_exp = s.value("c_exp", cfg.search.c_exp);
            if (s.contains("mode")) cfg.search.mode = search::parse_mode(s.at("mode"));
        }
        cfg.merge_threshold = doc.value("merge_threshold", cfg.merge_threshold);
        cfg.seed = doc.value("seed", cfg.seed);
        cfg.trace = doc.value("trace", cfg.trace);
    }
    cfg.apply_env_overrides();
    return cfg;
}

void GlobalConfig::apply_env_overrides() {
    if (const char* v = std::getenv("MIRAGE_API_KEY")) provider.api_key = v;
    if (const char* v = std::getenv("MIRAGE_ENDPOINT")) provider.endpoint = v;
    if (const char* v = std::getenv("MIRAGE_MODEL")) provider.model = v;
}

nlohmann::json GlobalConfig::dump() const {
    return {{"provider",
             {{"type", provider.type},
              {"mock_script", provider.mock_script},
              {"endpoint", provider.endpoint},
              {"api_key", provider.api_key.empty() ? "" : "***"},
              {"model", provider.model},
              {"max_retries", provider.max_retries},
              {"max_inflight", provider.max_inflight}}},
            {"embedder",
             {{"type", embedder.type}, {"dimension", embedder.dimension}, {"seed", embedder.seed}}},
            {"paths",
             {{"store", paths.store},
              {"suite", paths.suite},
              {"corpus", paths.corpus},
              {"out", paths.out}}},
            {"agent",
             {{"k", agent.k},
              {"grounding_threshold", agent.grounding_threshold},
              {"reflect_every", agent.reflect_every},
              {"max_regenerations", agent.max_regenerations},
              {"max_episode_steps", agent.max_episode_steps},
              {"max_subgoal_steps", agent.max_subgoal_steps},
              {"plan_retries", agent.plan_retries},
              {"exemplar_count", agent.exemplar_count}}},
            {"search",
             {{"iterations", search.iterations},
              {"depth", search.depth},
              {"branch", search.branch},
              {"c_exp", search.c_exp},
              {"mode", search::mode_name(search.mode)}}},
            {"merge_threshold", merge_threshold},
            {"seed", seed},
            {"trace", trace}};
}

std::shared_ptr<const embed::Embedder> GlobalConfig::make_embedder() const {
    if (embedder.type != "hashing")
        throw ConfigError("unknown embedder type: " + embedder.type);
    return embed::make_default_embedder(embedder.dimension, embedder.seed);
}

std::shared_ptr<const llm::Provider> GlobalConfig::make_provider() const {
    if (provider.type == "mock") {
        if (provider.mock_script.empty())
            throw ConfigError("mock provider needs provider.mock_script (or --mock-script)");
        return std::make_shared<llm::MockProvider>(llm::MockProvider::from_file(provider.mock_script));
    }
    if (provider.type == "http") {
        if (provider.endpoint.empty())
            throw ConfigError("http provider needs provider.endpoint (or MIRAGE_ENDPOINT)");
        llm::HttpProviderConfig http;
        http.endpoint = provider.endpoint;
        http.api_key = provider.api_key;
        http.model = provider.model;
        http.max_retries = provider.max_retries;
        http.max_inflight = provider.max_inflight;
        http.trace = trace;
        return std::make_shared<llm::HttpProvider>(std::move(http));
    }
    throw ConfigError("unknown provider type: " + provider.type);
}

}  // namespace mirage::config
