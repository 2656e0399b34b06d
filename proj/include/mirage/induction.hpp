#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mirage/agent.hpp"
#include "mirage/env.hpp"
#include "mirage/provider.hpp"
#include "mirage/search.hpp"
#include "mirage/skills.hpp"

namespace mirage::induct {

struct InductionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RawTrajectoryRecord {
    std::string goal;
    std::vector<std::pair<env::Observation, env::Action>> pairs;
    skills::SkillSource source = skills::SkillSource::offline_corpus;
    std::string record_id;  // defaults to the content digest

    std::string content_digest() const;
    nlohmann::json to_json() const;
    static RawTrajectoryRecord from_json(const nlohmann::json& j);
    static RawTrajectoryRecord from_trajectory(const agent::Trajectory& t, skills::SkillSource src);
};

struct InductionReport {
    int execution_skills_created = 0;
    int core_skills_created = 0;
    int core_skills_attached = 0;
    int meta_skills_created = 0;
    int duplicates_reattached = 0;
    std::vector<std::string> failures;

    nlohmann::json to_json() const;
    void accumulate(const InductionReport& other);
};

// Listing-1 style labeling: one step-goal per action, inferred from the
// (before, after) observation pair. Provider failure on any step rejects the
// whole record. The element hit by pointer actions is resolved against the
// before-observation and included in the prompt.
skills::ExecutionSkill label_step_goals(const RawTrajectoryRecord& record,
                                        const llm::Provider& reasoner,
                                        const embed::Embedder& embedder);

// Labels and inserts one record; duplicate trajectories (by content digest)
// reattach to existing skills instead of creating anything.
InductionReport induct_record(const RawTrajectoryRecord& record, skills::SkillStore& store,
                              const llm::Provider& reasoner);

// Offline bootstrap: reads trajectory JSON files from the corpus directory in
// sorted filename order, up to `limit` (negative = all). Malformed files are
// skipped and reported.
InductionReport bootstrap(const std::string& corpus_dir, skills::SkillStore& store,
                          const llm::Provider& reasoner, int limit = -1);

// Algorithm 1 "RefineSkillModule": every buffered trajectory flows through
// labeling + insertion; failures isolate per trajectory; the buffer is
// drained.
InductionReport induct_from_buffer(search::ReplayBuffer& buffer, skills::SkillStore& store,
                                   const llm::Provider& reasoner);

// Adapter for the search driver's refine hook.
search::RefineHook make_refine_hook(skills::SkillStore& store, const llm::Provider& reasoner,
                                    InductionReport* accumulator = nullptr);

// Exploration task generation: asks the provider for `count` distinct
// instructions, each of which must name a registered app. Offending
// instructions are regenerated once, then dropped with a warning.
struct GeneratedTasks {
    std::vector<std::string> instructions;
    std::vector<std::string> dropped;
};

GeneratedTasks generate_exploration_tasks(
    const std::vector<std::pair<std::string, std::string>>& app_descriptions,
    const llm::Provider& reasoner, int count);

}  // namespace mirage::induct
