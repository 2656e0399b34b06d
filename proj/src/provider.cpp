#include "mirage/provider.hpp"

#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>

#include "mirage/util.hpp"

namespace mirage::llm {

namespace {

const std::map<Role, std::string>& role_table() {
    static const std::map<Role, std::string> table = {
        {Role::step_goal_extraction, "step_goal_extraction"},
        {Role::core_skill_synthesis, "core_skill_synthesis"},
        {Role::meta_classification, "meta_classification"},
        {Role::subgoal_planning, "subgoal_planning"},
        {Role::subgoal_ranking, "subgoal_ranking"},
        {Role::reflection, "reflection"},
        {Role::action_decision, "action_decision"},
        {Role::task_generation, "task_generation"},
    };
    return table;
}

[[noreturn]] void decode_fail(const std::string& message, const nlohmann::json& parsed) {
    throw DecodeError(message, {parsed.dump()});
}

void require_keys(const nlohmann::json& obj, const std::set<std::string>& keys,
                  const std::string& where) {
    if (!obj.is_object()) decode_fail(where + ": expected object", obj);
    for (const auto& k : keys)
        if (!obj.contains(k)) decode_fail(where + ": missing field '" + k + "'", obj);
    for (const auto& [k, v] : obj.items())
        if (!keys.count(k)) decode_fail(where + ": unknown field '" + k + "'", obj);
}

void require_string(const nlohmann::json& obj, const std::string& key, const std::string& where,
                    bool non_empty = false) {
    if (!obj.at(key).is_string()) decode_fail(where + ": '" + key + "' must be a string", obj);
    if (non_empty && obj.at(key).get<std::string>().empty())
        decode_fail(where + ": '" + key + "' must be non-empty", obj);
}

void check_action_payload(const nlohmann::json& action) {
    static const std::map<std::string, std::set<std::string>> kind_fields = {
        {"click", {"x", "y"}},        // coord optional: grounding fills it in
        {"double_tap", {"x", "y"}},
        {"long_press", {"x", "y"}},
        {"input_text", {"text"}},
        {"navigate_home", {}},
        {"navigate_back", {}},
        {"scroll", {"direction"}},
        {"swipe", {"direction"}},
        {"open_app", {"app_name"}},
        {"wait", {}},
        {"keyboard_enter", {}},
        {"clear_text", {}},
        {"status", {"status"}},
        {"answer", {"text"}},
    };
    if (!action.is_object() || !action.contains("kind") || !action.at("kind").is_string())
        decode_fail("action: missing 'kind'", action);
    std::string kind = action.at("kind").get<std::string>();
    auto it = kind_fields.find(kind);
    if (it == kind_fields.end()) decode_fail("action: unknown kind '" + kind + "'", action);
    for (const auto& [k, v] : action.items()) {
        if (k == "kind") continue;
        if (!it->second.count(k)) decode_fail("action: field '" + k + "' not valid for " + kind, action);
    }
    bool coord_kind = (kind == "click" || kind == "double_tap" || kind == "long_press");
    if (coord_kind) {
        if (action.contains("x") != action.contains("y"))
            decode_fail("action: coordinate needs both x and y", action);
        if (action.contains("x") &&
            (!action.at("x").is_number_integer() || !action.at("y").is_number_integer()))
            decode_fail("action: coordinates must be integers", action);
    } else {
        for (const auto& field : it->second)
            if (!action.contains(field)) decode_fail("action: missing '" + field + "'", action);
    }
    if (kind == "scroll" || kind == "swipe") {
        std::string d = action.at("direction").get<std::string>();
        if (d != "up" && d != "down" && d != "left" && d != "right")
            decode_fail("action: bad direction '" + d + "'", action);
    }
    if (kind == "status") {
        std::string s = action.at("status").get<std::string>();
        if (s != "in_progress" && s != "complete" && s != "infeasible")
            decode_fail("action: bad status '" + s + "'", action);
    }
    if (kind == "open_app" && action.at("app_name").get<std::string>().empty())
        decode_fail("action: empty app_name", action);
}

}  // namespace

std::string role_name(Role role) { return role_table().at(role); }

Role parse_role(const std::string& name) {
    for (const auto& [role, rn] : role_table())
        if (rn == name) return role;
    throw std::invalid_argument("unknown provider role: " + name);
}

std::string schema_name(Role role) { return role_name(role) + "_v1"; }

std::string schema_hint(Role role) {
    switch (role) {
        case Role::step_goal_extraction:
            return R"({"step_goal": "<non-empty string>"})";
        case Role::core_skill_synthesis:
            return R"({"decision": "reuse|create", "name": "...", "params": [{"name": "...", "description": "..."}], "docstring": "...", "body": ["step goal template", ...]})";
        case Role::meta_classification:
            return R"({"is_new": true|false, "category": "...", "name": "...", "description": "..."})";
        case Role::subgoal_planning:
            return R"({"selected_meta": "...", "subgoals": [{"text": "...", "kind": "skill_call|natural_language", "core_skill": "...", "args": {"param": "value"}}]})";
        case Role::subgoal_ranking:
            return R"({"ranking": [0, 1, ...]})";
        case Role::reflection:
            return R"({"caption": "...", "reason": "...", "state_change": "...", "score": 0-10})";
        case Role::action_decision:
            return R"({"action": {"kind": "...", ...}, "description": "...", "subgoal_done": true|false})";
        case Role::task_generation:
            return R"({"tasks": ["instruction", ...]})";
    }
    return "{}";
}

void validate_reply(Role role, const nlohmann::json& parsed) {
    const std::string where = schema_name(role);
    switch (role) {
        case Role::step_goal_extraction: {
            require_keys(parsed, {"step_goal"}, where);
            require_string(parsed, "step_goal", where, /*non_empty=*/true);
            break;
        }
        case Role::core_skill_synthesis: {
            require_keys(parsed, {"decision", "name", "params", "docstring", "body"}, where);
            require_string(parsed, "decision", where);
            std::string decision = parsed.at("decision").get<std::string>();
            if (decision != "reuse" && decision != "create")
                decode_fail(where + ": decision must be reuse or create", parsed);
            require_string(parsed, "name", where, /*non_empty=*/true);
            require_string(parsed, "docstring", where);
            if (!parsed.at("params").is_array()) decode_fail(where + ": params must be an array", parsed);
            for (const auto& p : parsed.at("params")) {
                require_keys(p, {"name", "description"}, where + ".params");
                require_string(p, "name", where + ".params", /*non_empty=*/true);
                require_string(p, "description", where + ".params");
            }
            if (!parsed.at("body").is_array()) decode_fail(where + ": body must be an array", parsed);
            for (const auto& s : parsed.at("body"))
                if (!s.is_string() || s.get<std::string>().empty())
                    decode_fail(where + ": body entries must be non-empty strings", parsed);
            break;
        }
        case Role::meta_classification: {
            require_keys(parsed, {"is_new", "category", "name", "description"}, where);
            if (!parsed.at("is_new").is_boolean()) decode_fail(where + ": is_new must be bool", parsed);
            require_string(parsed, "category", where);
            require_string(parsed, "name", where);
            require_string(parsed, "description", where);
            if (parsed.at("is_new").get<bool>()) {
                if (parsed.at("name").get<std::string>().empty() ||
                    parsed.at("description").get<std::string>().empty())
                    decode_fail(where + ": new skill needs name and description", parsed);
            } else if (parsed.at("category").get<std::string>().empty()) {
                decode_fail(where + ": existing category must be named", parsed);
            }
            break;
        }
        case Role::subgoal_planning: {
            require_keys(parsed, {"selected_meta", "subgoals"}, where);
            require_string(parsed, "selected_meta", where);
            if (!parsed.at("subgoals").is_array())
                decode_fail(where + ": subgoals must be an array", parsed);
            for (const auto& sg : parsed.at("subgoals")) {
                require_keys(sg, {"text", "kind", "core_skill", "args"}, where + ".subgoals");
                require_string(sg, "text", where + ".subgoals", /*non_empty=*/true);
                std::string kind = sg.at("kind").get<std::string>();
                if (kind != "skill_call" && kind != "natural_language")
                    decode_fail(where + ": subgoal kind must be skill_call or natural_language", parsed);
                require_string(sg, "core_skill", where + ".subgoals");
                if (!sg.at("args").is_object())
                    decode_fail(where + ": args must be an object", parsed);
                for (const auto& [k, v] : sg.at("args").items())
                    if (!v.is_string()) decode_fail(where + ": arg '" + k + "' must be a string", parsed);
            }
            break;
        }
        case Role::subgoal_ranking: {
            require_keys(parsed, {"ranking"}, where);
            if (!parsed.at("ranking").is_array()) decode_fail(where + ": ranking must be an array", parsed);
            std::set<long long> seen;
            for (const auto& r : parsed.at("ranking")) {
                if (!r.is_number_integer() || r.get<long long>() < 0)
                    decode_fail(where + ": ranking entries must be non-negative integers", parsed);
                if (!seen.insert(r.get<long long>()).second)
                    decode_fail(where + ": ranking entries must be distinct", parsed);
            }
            break;
        }
        case Role::reflection: {
            require_keys(parsed, {"caption", "reason", "state_change", "score"}, where);
            require_string(parsed, "caption", where);
            require_string(parsed, "reason", where);
            require_string(parsed, "state_change", where);
            if (!parsed.at("score").is_number_integer())
                decode_fail(where + ": score must be an integer", parsed);
            long long q = parsed.at("score").get<long long>();
            if (q < 0 || q > 10) decode_fail(where + ": score must be in [0, 10]", parsed);
            break;
        }
        case Role::action_decision: {
            require_keys(parsed, {"action", "description", "subgoal_done"}, where);
            require_string(parsed, "description", where);
            if (!parsed.at("subgoal_done").is_boolean())
                decode_fail(where + ": subgoal_done must be bool", parsed);
            check_action_payload(parsed.at("action"));
            break;
        }
        case Role::task_generation: {
            require_keys(parsed, {"tasks"}, where);
            if (!parsed.at("tasks").is_array()) decode_fail(where + ": tasks must be an array", parsed);
            for (const auto& t : parsed.at("tasks"))
                if (!t.is_string() || t.get<std::string>().empty())
                    decode_fail(where + ": tasks must be non-empty strings", parsed);
            break;
        }
    }
}

std::string PromptRequest::attachments_digest() const {
    std::string all;
    for (const auto& a : attachments) {
        all += util::digest_hex(a);
        all += '|';
    }
    return util::digest_hex(all);
}

// ---------------------------------------------------------------------------
// MockProvider

nlohmann::json MockRule::to_json() const {
    nlohmann::json j;
    j["role"] = role_name(role);
    j["contains"] = contains;
    j["not_contains"] = not_contains;
    j["regex"] = pattern;
    j["reply"] = reply;
    return j;
}

MockRule MockRule::from_json(const nlohmann::json& j) {
    MockRule rule;
    rule.role = parse_role(j.at("role").get<std::string>());
    if (j.contains("contains")) rule.contains = j.at("contains").get<std::vector<std::string>>();
    if (j.contains("not_contains"))
        rule.not_contains = j.at("not_contains").get<std::vector<std::string>>();
    if (j.contains("regex")) rule.pattern = j.at("regex").get<std::string>();
    rule.reply = j.at("reply");
    return rule;
}

MockProvider MockProvider::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ProviderError("mock script not readable: " + path);
    nlohmann::json doc = nlohmann::json::parse(in);
    return MockProvider(rules_from_json(doc));
}

std::vector<MockRule> MockProvider::rules_from_json(const nlohmann::json& doc) {
    std::vector<MockRule> rules;
    for (const auto& r : doc.at("rules")) rules.push_back(MockRule::from_json(r));
    return rules;
}

void MockProvider::add_rules(std::vector<MockRule> rules) {
    for (auto& r : rules) rules_.push_back(std::move(r));
}

namespace {

nlohmann::json substitute_captures(const nlohmann::json& templ, const std::smatch& match) {
    if (templ.is_string()) {
        std::string s = templ.get<std::string>();
        std::string out;
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] == '$' && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
                std::size_t group = static_cast<std::size_t>(s[i + 1] - '0');
                if (group < match.size()) {
                    out += match[group].str();
                    ++i;
                    continue;
                }
            }
            out.push_back(s[i]);
        }
        return out;
    }
    if (templ.is_object()) {
        nlohmann::json out = nlohmann::json::object();
        for (const auto& [k, v] : templ.items()) out[k] = substitute_captures(v, match);
        return out;
    }
    if (templ.is_array()) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& v : templ) out.push_back(substitute_captures(v, match));
        return out;
    }
    return templ;
}

}  // namespace

ProviderReply MockProvider::complete(const PromptRequest& request) const {
    for (const auto& rule : rules_) {
        if (rule.role != request.role) continue;
        bool ok = true;
        for (const auto& needle : rule.contains)
            if (request.user_text.find(needle) == std::string::npos) { ok = false; break; }
        if (!ok) continue;
        for (const auto& needle : rule.not_contains)
            if (request.user_text.find(needle) != std::string::npos) { ok = false; break; }
        if (!ok) continue;

        std::smatch match;
        nlohmann::json reply = rule.reply;
        if (!rule.pattern.empty()) {
            std::regex re(rule.pattern, std::regex::ECMAScript);
            if (!std::regex_search(request.user_text, match, re)) continue;
            reply = substitute_captures(reply, match);
        }
        validate_reply(request.role, reply);
        ProviderReply out;
        out.parsed = reply;
        out.raw_text = reply.dump();
        out.provider_id = id();
        return out;
    }
    std::string head = request.user_text.substr(0, 160);
    throw ScriptGapError("mock script has no entry for role=" + role_name(request.role) +
                         " user_text[:160]=" + head);
}

// ---------------------------------------------------------------------------
// FaultInjectingProvider

FaultInjectingProvider::FaultInjectingProvider(std::shared_ptr<const Provider> inner,
                                               std::vector<int> failing_calls)
    : inner_(std::move(inner)), failing_calls_(std::move(failing_calls)) {}

ProviderReply FaultInjectingProvider::complete(const PromptRequest& request) const {
    int call = counter_.fetch_add(1);
    for (int f : failing_calls_)
        if (f == call) throw TransportError("injected fault at call " + std::to_string(call), 1);
    return inner_->complete(request);
}

int FaultInjectingProvider::calls_made() const { return counter_.load(); }

}  // namespace mirage::llm
