#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mirage/env.hpp"
#include "mirage/provider.hpp"
#include "mirage/skills.hpp"

namespace mirage::agent {

struct AgentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct GroundingMiss : AgentError {
    using AgentError::AgentError;
};

// Runtime knobs plus the ablation toggles that reshape the loop.
struct AgentOptions {
    int k = 5;                       // meta candidates per plan (Eq. 1)
    double grounding_threshold = 0.5;
    int reflect_every = 1;           // reflect on steps where index % reflect_every == 0
    int max_regenerations = 3;
    int max_episode_steps = 80;
    int max_subgoal_steps = 30;
    int plan_retries = 2;            // re-ask on an empty sub-goal list
    int exemplar_count = 3;          // execution skills shown to the reflector

    bool reflector_enabled = true;
    bool use_meta_level = true;      // Eq. 1-2 retrieval
    bool use_core_level = true;      // skill_call planning + core prompt section
    bool use_execution_level = true; // reflector exemplars
};

struct SubGoal {
    enum class Kind { skill_call, natural_language };
    Kind kind = Kind::natural_language;
    std::string text;
    std::string core_skill_id;  // resolved store id when kind == skill_call
    std::vector<std::pair<std::string, std::string>> args;

    nlohmann::json to_json() const;
};

struct Plan {
    std::string task_goal;
    std::optional<std::string> selected_meta_id;
    std::vector<SubGoal> subgoals;
    int downgraded = 0;  // skill_calls naming unknown cores, demoted to natural language

    nlohmann::json to_json() const;
};

struct ReflectionVerdict {
    std::string caption;
    std::string reason;
    std::string state_change;
    int score = 5;  // q in [0,10]; q < 5 triggers regeneration
    bool fail_open = false;  // provider failed; treated as a pass-through
};

struct AgentContext {
    std::string goal;
    std::vector<std::pair<nlohmann::json, std::string>> history;  // (action, summary)
    int current_subgoal_index = 0;

    std::vector<std::string> summaries() const {
        std::vector<std::string> out;
        out.reserve(history.size());
        for (const auto& [a, s] : history) out.push_back(s);
        return out;
    }
};

struct TrajectoryStep {
    env::Observation observation;
    env::Action action;
    std::string description;
    std::string summary;
    std::string subgoal_text;
    int regenerations = 0;

    nlohmann::json to_json() const;
    static TrajectoryStep from_json(const nlohmann::json& j);
};

struct Trajectory {
    std::string task_id;
    std::string goal;
    std::vector<TrajectoryStep> steps;
    env::EpisodeOutcome outcome;

    std::string content_digest() const;
    nlohmann::json to_json() const;
    static Trajectory from_json(const nlohmann::json& j);
};

// Per-step trace record sink; the harness wires this to a JSONL writer.
using TraceSink = std::function<void(const nlohmann::json&)>;

struct Decision {
    env::Action action;
    std::string description;
    bool subgoal_done = false;
};

// Eq. 1-3. With an empty store (or the meta/core levels ablated) planning
// degrades to natural-language sub-goals. Empty sub-goal lists are re-asked
// plan_retries times, then raise AgentError.
Plan plan(const std::string& goal, const skills::SkillStore& store,
          const llm::Provider& reasoner, const AgentOptions& opts,
          const TraceSink& trace = nullptr);

// Eq. 4: one action plus its element description for the current step-goal.
Decision decide_action(const std::string& goal, const SubGoal& subgoal,
                       const std::string& step_goal, int subgoal_step,
                       const env::Observation& obs, const AgentContext& context,
                       const llm::Provider& reasoner,
                       const std::vector<struct RejectedCandidate>& rejected);

struct RejectedCandidate {
    Decision decision;
    int score = -1;  // reflector q, or -1 for a grounding miss
};

// Eq. 5 stand-in: lexical descriptor matching. Returns the center of the
// best element by token overlap against text+role; below the threshold
// throws GroundingMiss. Ties resolve to the earliest element.
std::pair<int, int> ground(const std::string& description, const env::Observation& obs,
                           double threshold);

// Eq. 6. Provider failures fail open as a pass-through verdict (flagged).
ReflectionVerdict reflect(const std::string& goal, const std::string& subgoal,
                          const env::Observation& obs, const env::Action& action,
                          const std::string& description, const AgentContext& context,
                          const skills::SkillStore& store, const llm::Provider& reasoner,
                          const AgentOptions& opts);

struct SubGoalResult {
    bool completed = false;
    bool episode_terminal = false;
    std::vector<TrajectoryStep> steps;
};

// Runs one sub-goal from the current environment state: the
// decide/ground/reflect/step loop with the q<5 regeneration gate.
SubGoalResult execute_subgoal(const std::string& goal, const SubGoal& subgoal,
                              env::GuiEnv& environment, AgentContext& context,
                              const skills::SkillStore& store, const llm::Provider& reasoner,
                              const AgentOptions& opts, const TraceSink& trace = nullptr);

// Full Mirage loop: plan, then execute each sub-goal, then verify.
Trajectory run_episode(const env::TaskSpec& task, env::GuiEnv& environment,
                       const skills::SkillStore& store, const llm::Provider& reasoner,
                       const AgentOptions& opts, std::uint64_t seed,
                       const TraceSink& trace = nullptr);

// Instantiates a core skill body with bound args; unknown args are left
// verbatim so the failure is visible downstream.
std::vector<std::string> instantiate_body(const skills::CoreSkill& core,
                                          const std::vector<std::pair<std::string, std::string>>& args);

}  // namespace mirage::agent
