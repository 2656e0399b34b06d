#pragma once

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mirage::llm {

// Each role has exactly one reply schema; see validate_reply().
enum class Role {
    step_goal_extraction,
    core_skill_synthesis,
    meta_classification,
    subgoal_planning,
    subgoal_ranking,
    reflection,
    action_decision,
    task_generation,
};

std::string role_name(Role role);
Role parse_role(const std::string& name);

// Name of the structured reply shape a role decodes into.
std::string schema_name(Role role);

// One-line description of the required JSON fields, restated to HTTP
// providers on decode retries.
std::string schema_hint(Role role);

struct PromptRequest {
    Role role;
    std::string system_text;
    std::string user_text;
    std::vector<std::string> attachments;  // opaque image payloads
    std::string decode_schema;             // derived from role

    PromptRequest(Role r, std::string system, std::string user,
                  std::vector<std::string> images = {})
        : role(r),
          system_text(std::move(system)),
          user_text(std::move(user)),
          attachments(std::move(images)),
          decode_schema(schema_name(r)) {}

    std::string attachments_digest() const;
};

struct ProviderReply {
    std::string raw_text;
    nlohmann::json parsed;
    std::string provider_id;
    std::chrono::microseconds latency{0};
};

struct ProviderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Transport-level failure after the configured retries.
struct TransportError : ProviderError {
    TransportError(const std::string& what, int attempts_made)
        : ProviderError(what), attempts(attempts_made) {}
    int attempts = 0;
};

// Reply did not validate against the role's schema after retries. Carries the
// raw text of every attempt.
struct DecodeError : ProviderError {
    DecodeError(const std::string& what, std::vector<std::string> raw)
        : ProviderError(what), raw_attempts(std::move(raw)) {}
    std::vector<std::string> raw_attempts;
};

// The mock script has no entry for this request: a test-fixture gap, not a
// runtime condition.
struct ScriptGapError : ProviderError {
    using ProviderError::ProviderError;
};

// Throws DecodeError if `parsed` does not match the role's schema. Strict:
// all fields required, unknown keys rejected.
void validate_reply(Role role, const nlohmann::json& parsed);

class Provider {
public:
    virtual ~Provider() = default;
    virtual ProviderReply complete(const PromptRequest& request) const = 0;
    virtual std::string id() const = 0;
};

// A scripted rule. Matches when the role equals, every `contains` entry is a
// substring of user_text, no `not_contains` entry is, and `pattern` (when
// set) regex-searches user_text. Capture groups substitute into $1..$9 in the
// reply template's string values ($0 = whole match).
struct MockRule {
    Role role;
    std::vector<std::string> contains;
    std::vector<std::string> not_contains;
    std::string pattern;  // ECMAScript regex; empty = no regex constraint
    nlohmann::json reply;

    nlohmann::json to_json() const;
    static MockRule from_json(const nlohmann::json& j);
};

// Deterministic scripted provider: a pure function of
// (role, user_text, attachments digest). First matching rule wins.
class MockProvider final : public Provider {
public:
    MockProvider() = default;
    explicit MockProvider(std::vector<MockRule> rules) : rules_(std::move(rules)) {}

    static MockProvider from_file(const std::string& path);
    static std::vector<MockRule> rules_from_json(const nlohmann::json& doc);

    void add_rule(MockRule rule) { rules_.push_back(std::move(rule)); }
    void add_rules(std::vector<MockRule> rules);
    std::size_t rule_count() const { return rules_.size(); }

    ProviderReply complete(const PromptRequest& request) const override;
    std::string id() const override { return "mock"; }

private:
    std::vector<MockRule> rules_;
};

// Wraps another provider and fails (TransportError) on a scripted set of call
// indices. Test plumbing for fault-injection trials.
class FaultInjectingProvider final : public Provider {
public:
    FaultInjectingProvider(std::shared_ptr<const Provider> inner, std::vector<int> failing_calls);

    ProviderReply complete(const PromptRequest& request) const override;
    std::string id() const override { return "fault(" + inner_->id() + ")"; }
    int calls_made() const;

private:
    std::shared_ptr<const Provider> inner_;
    std::vector<int> failing_calls_;
    mutable std::atomic<int> counter_{0};
};

struct HttpProviderConfig {
    std::string endpoint;     // e.g. http://host:port ; path fixed below
    std::string path = "/v1/chat/completions";
    std::string api_key;
    std::string model = "gpt-4o";
    int max_retries = 2;      // decode retries; transport retries use the same budget
    int max_inflight = 4;
    int timeout_seconds = 60;
    bool trace = false;       // log request/response bodies (credentials redacted)
};

// Client for a chat-completion-compatible endpoint. Immutable after
// construction; in-flight requests are bounded by max_inflight.
class HttpProvider final : public Provider {
public:
    explicit HttpProvider(HttpProviderConfig config);
    ~HttpProvider() override;

    ProviderReply complete(const PromptRequest& request) const override;
    std::string id() const override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mirage::llm
