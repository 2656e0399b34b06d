#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mirage/agent.hpp"
#include "mirage/env.hpp"
#include "mirage/search.hpp"
#include "mirage/skills.hpp"

namespace mirage::bench {

struct BenchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// One ablation row: skill sources, HMS levels, reflector, exploration mode.
// Disabling core_level forces skill_call planning off; disabling meta_level
// forces meta retrieval off (the agent options encode both).
struct AblationSpec {
    std::string name = "all-on";
    bool offline_skills = true;
    bool online_skills = true;
    bool execution_level = true;
    bool core_level = true;
    bool meta_level = true;
    bool reflector = true;
    search::Mode mode = search::Mode::direct;

    nlohmann::json to_json() const;
    static AblationSpec from_json(const nlohmann::json& j);
    static AblationSpec preset(const std::string& name);
    static std::vector<std::string> preset_names();

    agent::AgentOptions apply(agent::AgentOptions base) const;
};

struct TaskResult {
    std::string task_id;
    env::EpisodeOutcome outcome;
    std::string error;  // non-empty when the task aborted with an env error

    double checkpoint_fraction() const {
        return outcome.checkpoints_total == 0
                   ? 0.0
                   : static_cast<double>(outcome.checkpoints_completed) /
                         outcome.checkpoints_total;
    }
};

struct SuiteResult {
    std::vector<TaskResult> tasks;  // task_id order
    double sr = 0.0;                // successes / total
    double cr = 0.0;                // mean of per-task checkpoint fractions
    int skills_acquired = 0;
    int expansions_total = 0;
    long long wallclock_ms = 0;  // reported, never serialized (determinism)
    nlohmann::json config_echo;

    // Deterministic: excludes wallclock.
    nlohmann::json to_json() const;
    static SuiteResult from_json(const nlohmann::json& j);
};

struct RunOptions {
    agent::AgentOptions agent;
    search::SearchConfig search;
    std::uint64_t seed = 0;
    std::string trace_dir;  // per-task JSONL traces when non-empty
};

// Executes every task once (task_id order), computing SR and CR exactly.
// Per-task env errors are recorded as failures and the suite continues.
SuiteResult run_suite(const env::Suite& suite, const skills::SkillStore& store,
                      const llm::Provider& reasoner, const RunOptions& options,
                      const AblationSpec& ablation);

struct AblationTable {
    std::vector<std::pair<AblationSpec, SuiteResult>> rows;  // spec order

    nlohmann::json to_json() const;
    std::string render() const;
};

AblationTable run_ablation_matrix(const env::Suite& suite, const skills::SkillStore& store,
                                  const llm::Provider& reasoner, const RunOptions& options,
                                  const std::vector<AblationSpec>& specs);

// Human-readable summary; percentages like "50.0%". Field order is stable.
std::string report(const SuiteResult& result);

std::string format_percent(double fraction);

// Independent pass over the emitted traces: recomputes SR/CR from the
// outcome footers alone. Used to cross-check run_suite's aggregation.
struct TraceMetrics {
    double sr = 0.0;
    double cr = 0.0;
    int tasks = 0;
};

TraceMetrics recompute_from_traces(const std::string& trace_dir);

}  // namespace mirage::bench
