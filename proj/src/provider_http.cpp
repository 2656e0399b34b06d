#include <chrono>
#include <iostream>
#include <semaphore>
#include <sstream>

#include <httplib.h>

#include "mirage/provider.hpp"

namespace mirage::llm {

namespace {

// Replies often arrive fenced as ```json ... ```; strip that before parsing.
std::string strip_code_fence(const std::string& text) {
    auto first = text.find("```");
    if (first == std::string::npos) return text;
    auto line_end = text.find('\n', first);
    if (line_end == std::string::npos) return text;
    auto last = text.rfind("```");
    if (last <= line_end) return text;
    return text.substr(line_end + 1, last - line_end - 1);
}

std::string redact(std::string body, const std::string& secret) {
    if (secret.empty()) return body;
    std::size_t pos;
    while ((pos = body.find(secret)) != std::string::npos) body.replace(pos, secret.size(), "***");
    return body;
}

}  // namespace

struct HttpProvider::Impl {
    HttpProviderConfig config;
    mutable std::counting_semaphore<64> inflight;

    explicit Impl(HttpProviderConfig cfg)
        : config(std::move(cfg)), inflight(std::min(config.max_inflight, 64)) {
        if (config.endpoint.rfind("http://", 0) != 0)
            throw ProviderError("http provider endpoint must start with http:// (got '" +
                                config.endpoint + "')");
    }

    nlohmann::json build_body(const PromptRequest& request, const std::string& extra_user) const {
        nlohmann::json messages = nlohmann::json::array();
        messages.push_back({{"role", "system"}, {"content", request.system_text}});
        if (request.attachments.empty()) {
            messages.push_back({{"role", "user"}, {"content", request.user_text + extra_user}});
        } else {
            nlohmann::json parts = nlohmann::json::array();
            parts.push_back({{"type", "text"}, {"text", request.user_text + extra_user}});
            for (const auto& image : request.attachments)
                parts.push_back({{"type", "image_url"},
                                 {"image_url", {{"url", "data:image/png;base64," + image}}}});
            messages.push_back({{"role", "user"}, {"content", parts}});
        }
        return {{"model", config.model}, {"messages", messages}, {"temperature", 0}};
    }
};

HttpProvider::HttpProvider(HttpProviderConfig config)
    : impl_(std::make_unique<Impl>(std::move(config))) {}

HttpProvider::~HttpProvider() = default;

std::string HttpProvider::id() const { return "http:" + impl_->config.model; }

ProviderReply HttpProvider::complete(const PromptRequest& request) const {
    const auto& cfg = impl_->config;
    impl_->inflight.acquire();
    struct Release {
        std::counting_semaphore<64>& sem;
        ~Release() { sem.release(); }
    } release{impl_->inflight};

    auto started = std::chrono::steady_clock::now();
    std::vector<std::string> raw_attempts;
    std::string extra_user;
    int transport_failures = 0;
    const int max_attempts = cfg.max_retries + 1;

    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        httplib::Client client(cfg.endpoint);
        client.set_connection_timeout(cfg.timeout_seconds);
        client.set_read_timeout(cfg.timeout_seconds);
        httplib::Headers headers;
        if (!cfg.api_key.empty()) headers.insert({"Authorization", "Bearer " + cfg.api_key});

        std::string body = impl_->build_body(request, extra_user).dump();
        if (cfg.trace)
            std::cerr << "[trace] POST " << cfg.endpoint << cfg.path << " "
                      << redact(body, cfg.api_key) << "\n";

        auto res = client.Post(cfg.path, headers, body, "application/json");
        if (!res || res->status != 200) {
            ++transport_failures;
            if (cfg.trace)
                std::cerr << "[trace] transport failure attempt " << attempt + 1
                          << (res ? " status " + std::to_string(res->status) : " no response")
                          << "\n";
            if (transport_failures >= max_attempts)
                throw TransportError("http provider: transport failed", transport_failures);
            continue;
        }
        if (cfg.trace) std::cerr << "[trace] reply " << redact(res->body, cfg.api_key) << "\n";

        std::string content;
        try {
            auto doc = nlohmann::json::parse(res->body);
            content = doc.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const nlohmann::json::exception&) {
            raw_attempts.push_back(res->body);
            extra_user = "\n\nYour last reply did not parse. Respond with strict JSON only, schema " +
                         schema_name(request.role) + ": " + schema_hint(request.role);
            continue;
        }

        try {
            nlohmann::json parsed = nlohmann::json::parse(strip_code_fence(content));
            validate_reply(request.role, parsed);
            ProviderReply reply;
            reply.raw_text = content;
            reply.parsed = std::move(parsed);
            reply.provider_id = id();
            reply.latency = std::chrono::duration_cast<std::chrono::microseconds>(
                std::chrono::steady_clock::now() - started);
            return reply;
        } catch (const std::exception& e) {
            raw_attempts.push_back(content);
            extra_user = std::string("\n\nYour last reply was rejected (") + e.what() +
                         "). Respond with strict JSON only, schema " + schema_name(request.role) +
                         ": " + schema_hint(request.role);
        }
    }
    throw DecodeError("http provider: reply failed schema " + schema_name(request.role) + " after " +
                          std::to_string(raw_attempts.size()) + " attempt(s)",
                      raw_attempts);
}

}  // namespace mirage::llm
