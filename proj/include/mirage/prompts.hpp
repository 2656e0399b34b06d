#pragma once

#include <string>
#include <vector>

#include "mirage/env.hpp"
#include "mirage/provider.hpp"
#include "mirage/skills.hpp"

// Builders for every provider request the runtime issues. The user_text
// layouts are part of the artifact's contract: mock scripts match on them, so
// changes here are breaking changes for recorded scripts.
namespace mirage::prompts {

struct RejectedAttempt {
    std::string description;
    int score = -1;  // -1 = grounding miss
};

llm::PromptRequest meta_classification(const std::string& goal,
                                       const std::vector<skills::MetaSkill>& existing);

llm::PromptRequest core_synthesis(const skills::ExecutionSkill& eps,
                                  const std::vector<skills::CoreSkill>& existing,
                                  const std::string& meta_name);

llm::PromptRequest core_merge(const skills::CoreSkill& a, const skills::CoreSkill& b);

llm::PromptRequest step_goal_label(const std::string& goal, int step_index,
                                   const env::Observation& before, const env::Observation& after,
                                   const env::Action& action, const std::string& hit_element_text,
                                   const std::string& hit_element_role);

llm::PromptRequest planning(const std::string& goal,
                            const std::vector<std::pair<skills::MetaSkill, double>>& meta_candidates,
                            const std::vector<skills::CoreSkill>& core_functions);

llm::PromptRequest expansion(const std::string& goal, int branch, int depth, int steps_so_far,
                             const env::Observation& obs,
                             const std::vector<skills::CoreSkill>& available_skills,
                             bool include_skills);

llm::PromptRequest ranking(const std::string& goal, const std::vector<std::string>& candidates);

llm::PromptRequest reflection(const std::string& goal, const std::string& subgoal,
                              const env::Observation& obs, const env::Action& action,
                              const std::string& description,
                              const std::vector<std::string>& history_summaries,
                              const std::vector<skills::ExecutionSkill>& exemplars);

llm::PromptRequest action_decision(const std::string& goal, const std::string& subgoal_text,
                                   const std::string& subgoal_kind, const std::string& step_goal,
                                   int subgoal_step, const env::Observation& obs,
                                   const std::vector<std::string>& history_summaries,
                                   const std::vector<RejectedAttempt>& rejected);

llm::PromptRequest task_generation(const std::vector<std::pair<std::string, std::string>>& apps,
                                   int count, const std::vector<std::string>& rejected);

}  // namespace mirage::prompts
