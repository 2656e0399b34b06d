#include "mirage/prompts.hpp"

#include <sstream>

namespace mirage::prompts {

namespace {

constexpr std::size_t kHistoryWindow = 8;

void append_history(std::ostringstream& out, const std::vector<std::string>& summaries) {
    out << "steps_so_far: " << summaries.size() << "\n";
    if (summaries.empty()) return;
    out << "history:\n";
    std::size_t start = summaries.size() > kHistoryWindow ? summaries.size() - kHistoryWindow : 0;
    for (std::size_t i = start; i < summaries.size(); ++i)
        out << "  - " << summaries[i] << "\n";
}

}  // namespace

llm::PromptRequest meta_classification(const std::string& goal,
                                       const std::vector<skills::MetaSkill>& existing) {
    std::ostringstream out;
    out << "Classify the task into a meta skill category, or define a new category if none fits.\n";
    out << "Task: " << goal << "\n";
    out << "Existing meta skills:\n";
    if (existing.empty()) out << "  (none)\n";
    for (const auto& m : existing) out << "  - " << m.name << ": " << m.description << "\n";
    return llm::PromptRequest(llm::Role::meta_classification,
                              "You organize agent skills into thematic categories.", out.str());
}

llm::PromptRequest core_synthesis(const skills::ExecutionSkill& eps,
                                  const std::vector<skills::CoreSkill>& existing,
                                  const std::string& meta_name) {
    std::ostringstream out;
    out << "Decide whether an existing core skill already abstracts this task; otherwise define a "
           "new parameterized skill function whose body is a list of step-goal templates.\n";
    out << "Task: " << eps.goal_text << "\n";
    out << "Steps:\n";
    for (std::size_t i = 0; i < eps.steps.size(); ++i)
        out << "  " << (i + 1) << ". " << eps.steps[i].step_goal << "\n";
    out << "Existing core skills:\n";
    if (existing.empty()) out << "  (none)\n";
    for (const auto& c : existing)
        out << "  - existing_skill: " << c.signature() << ": " << c.docstring << "\n";
    out << "Meta category: " << meta_name << "\n";
    return llm::PromptRequest(llm::Role::core_skill_synthesis,
                              "You abstract concrete task trajectories into reusable functions.",
                              out.str());
}

llm::PromptRequest core_merge(const skills::CoreSkill& a, const skills::CoreSkill& b) {
    std::ostringstream out;
    out << "Consolidate two similar core skills into one. Reuse whichever name should survive, or "
           "create a merged replacement.\n";
    auto render = [&out](const char* tag, const skills::CoreSkill& c) {
        out << tag << ": " << c.signature() << ": " << c.docstring << "\n";
        out << tag << "_body:";
        for (const auto& s : c.body) out << " | " << s;
        out << "\n";
    };
    render("first", a);
    render("second", b);
    return llm::PromptRequest(llm::Role::core_skill_synthesis,
                              "You deduplicate a library of skill functions.", out.str());
}

llm::PromptRequest step_goal_label(const std::string& goal, int step_index,
                                   const env::Observation& before, const env::Observation& after,
                                   const env::Action& action, const std::string& hit_element_text,
                                   const std::string& hit_element_role) {
    std::ostringstream out;
    out << "Infer the step-goal behind the action from the observation change.\n";
    out << "Task: " << goal << "\n";
    out << "step: " << step_index << "\n";
    out << "action: " << action.to_json().dump() << "\n";
    if (!hit_element_text.empty() || !hit_element_role.empty())
        out << "clicked_element: " << hit_element_text << " (" << hit_element_role << ")\n";
    out << "before screen: " << before.screen_id << "\n";
    out << "after screen: " << after.screen_id << "\n";
    return llm::PromptRequest(llm::Role::step_goal_extraction,
                              "You describe what each agent action was meant to accomplish.",
                              out.str());
}

llm::PromptRequest planning(const std::string& goal,
                            const std::vector<std::pair<skills::MetaSkill, double>>& meta_candidates,
                            const std::vector<skills::CoreSkill>& core_functions) {
    std::ostringstream out;
    out << "Generate an ordered plan of sub-goals for the task. Call a skill function when one "
           "fits, otherwise describe the sub-goal in natural language.\n";
    out << "Task: " << goal << "\n";
    if (!meta_candidates.empty()) {
        out << "Candidate meta skills:\n";
        for (const auto& [m, sim] : meta_candidates)
            out << "  - " << m.name << ": " << m.description << "\n";
    }
    if (!core_functions.empty()) {
        out << "Core skill functions:\n";
        for (const auto& c : core_functions)
            out << "  - " << c.signature() << ": " << c.docstring << "\n";
    }
    return llm::PromptRequest(llm::Role::subgoal_planning,
                              "You are a phone-automation planner that decomposes tasks into "
                              "sub-goals.",
                              out.str());
}

llm::PromptRequest expansion(const std::string& goal, int branch, int depth, int steps_so_far,
                             const env::Observation& obs,
                             const std::vector<skills::CoreSkill>& available_skills,
                             bool include_skills) {
    std::ostringstream out;
    out << "Propose candidate next sub-goals for the task from the current state.\n";
    out << "Task: " << goal << "\n";
    out << "branch: " << branch << "\n";
    out << "depth: " << depth << "\n";
    out << "steps_so_far: " << steps_so_far << "\n";
    out << obs.render();
    if (include_skills) {
        out << "Available skills:\n";
        if (available_skills.empty()) out << "  (none)\n";
        for (const auto& c : available_skills)
            out << "  - " << c.signature() << ": " << c.docstring << "\n";
    }
    return llm::PromptRequest(llm::Role::subgoal_planning,
                              "You explore promising next objectives for a phone agent.", out.str());
}

llm::PromptRequest ranking(const std::string& goal, const std::vector<std::string>& candidates) {
    std::ostringstream out;
    out << "Rank the candidate sub-goals by how useful they are for completing the task. Reply "
           "with candidate indices, best first.\n";
    out << "Task: " << goal << "\n";
    out << "candidates:\n";
    for (std::size_t i = 0; i < candidates.size(); ++i)
        out << "  " << i << ": " << candidates[i] << "\n";
    return llm::PromptRequest(llm::Role::subgoal_ranking,
                              "You judge the utility of candidate sub-goals.", out.str());
}

llm::PromptRequest reflection(const std::string& goal, const std::string& subgoal,
                              const env::Observation& obs, const env::Action& action,
                              const std::string& description,
                              const std::vector<std::string>& history_summaries,
                              const std::vector<skills::ExecutionSkill>& exemplars) {
    std::ostringstream out;
    out << "Assess whether the proposed action helps complete the goal. Predict the state change "
           "and score the action from 0 to 10.\n";
    out << "Task: " << goal << "\n";
    out << "Sub-goal: " << subgoal << "\n";
    out << "Proposed action: " << action.to_json().dump() << "\n";
    out << "Proposed description: " << description << "\n";
    out << obs.render();
    append_history(out, history_summaries);
    if (!exemplars.empty()) {
        out << "Past execution examples:\n";
        for (const auto& e : exemplars) {
            out << "  - past skill: " << e.goal_text << " (steps:";
            for (const auto& s : e.steps) out << " " << s.step_goal << " |";
            out << ")\n";
        }
    }
    return llm::PromptRequest(llm::Role::reflection,
                              "You instruct a phone agent, scoring each proposed action before it "
                              "runs.",
                              out.str());
}

llm::PromptRequest action_decision(const std::string& goal, const std::string& subgoal_text,
                                   const std::string& subgoal_kind, const std::string& step_goal,
                                   int subgoal_step, const env::Observation& obs,
                                   const std::vector<std::string>& history_summaries,
                                   const std::vector<RejectedAttempt>& rejected) {
    std::ostringstream out;
    out << "Decide the next action toward the step-goal. Name the target element in the "
           "description for pointer actions.\n";
    out << "Task: " << goal << "\n";
    out << "Sub-goal: " << subgoal_text << "\n";
    out << "subgoal_kind: " << subgoal_kind << "\n";
    out << "Step-goal: " << step_goal << "\n";
    out << "subgoal_step: " << subgoal_step << "\n";
    out << obs.render();
    append_history(out, history_summaries);
    if (!rejected.empty()) {
        out << "rejected:\n";
        for (const auto& r : rejected) {
            out << "  - " << r.description;
            if (r.score >= 0)
                out << " (q=" << r.score << ")";
            else
                out << " (grounding miss)";
            out << "\n";
        }
    }
    return llm::PromptRequest(llm::Role::action_decision,
                              "You operate an Android phone one action at a time.", out.str());
}

llm::PromptRequest task_generation(const std::vector<std::pair<std::string, std::string>>& apps,
                                   int count, const std::vector<std::string>& rejected) {
    std::ostringstream out;
    out << "Generate distinct task instructions exercising the listed apps.\n";
    out << "count: " << count << "\n";
    out << "apps:\n";
    for (const auto& [name, description] : apps) out << "  - " << name << ": " << description << "\n";
    if (!rejected.empty()) {
        out << "rejected:\n";
        for (const auto& r : rejected) out << "  - " << r << "\n";
    }
    return llm::PromptRequest(llm::Role::task_generation,
                              "You invent realistic phone tasks for exploration.", out.str());
}

}  // namespace mirage::prompts
