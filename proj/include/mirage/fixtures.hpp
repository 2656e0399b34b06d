#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mirage/env.hpp"
#include "mirage/provider.hpp"

// Built-in benchmark content: twelve declarative app machines, a catalog of
// primitive task families, thirty composite long-horizon templates, the
// exploration/ablation/adversarial suites, the synthetic offline corpus, and
// the deterministic mock scripts that solve them. Everything here is plain
// data plus emitters; the engine never depends on it.
namespace mirage::fixtures {

struct PrimitiveSpec {
    std::string family;       // e.g. "add_contact"
    std::string core_name;    // skill function name
    std::vector<std::pair<std::string, std::string>> params;  // name -> description
    std::string docstring;
    std::vector<std::string> body;       // step-goal templates with {param} holes
    std::string instruction_template;    // primitive task instruction
    std::string nl_phrase_template;      // natural-language sub-goal phrase
    std::string app;
    std::vector<env::Checkpoint> checkpoints;  // values may contain {param}
    nlohmann::json initial_state = nlohmann::json::object();
    std::string meta_name;
    std::string meta_description;
};

const std::vector<PrimitiveSpec>& primitives();
const PrimitiveSpec& primitive(const std::string& family);

std::map<std::string, env::AppMachine> builtin_apps();

std::vector<env::TaskTemplate> primitive_templates();   // one per family variant (19)
std::vector<env::TaskTemplate> bench_templates();       // 30 composites
std::vector<std::map<std::string, std::string>> bench_bindings();
std::vector<env::TaskTemplate> exploration_templates(); // 30 concrete tasks
std::vector<std::string> exploration_instructions();    // the same 30, as strings
std::vector<env::TaskTemplate> ablation_templates();    // 11 concrete tasks
std::vector<env::TaskTemplate> adversarial_templates(); // 3 trap tasks

// Families whose sub-goal proposals succeed per exploration mode (strictly
// nested: direct < mcts < sa-mcts).
std::vector<std::string> direct_covered_families();
std::vector<std::string> mcts_covered_families();
std::vector<std::string> sa_covered_families();

// Families excluded from the offline corpus (their skills only ever arrive
// through online exploration).
std::vector<std::string> online_only_families();

// The full deterministic solver script, in priority order.
std::vector<llm::MockRule> solver_rules();
llm::MockProvider solver_provider();

// Translate a step-goal in the fixture grammar into an action payload and
// element description ("click the Save button" -> click + "the Save button").
struct StepActionProto {
    nlohmann::json action;
    std::string description;
};
std::optional<StepActionProto> action_for_step_goal(const std::string& step_goal);

// Drive the environment through a list of concrete step goals, grounding
// pointer actions by description. Returns (observation, action) pairs.
std::vector<std::pair<env::Observation, env::Action>> run_scripted(
    env::GuiEnv& environment, const env::TaskSpec& task,
    const std::vector<std::string>& step_goals, std::uint64_t seed);

// Emitters (directories are created as needed).
void write_apps(const std::string& dir);
void write_bench_suite(const std::string& dir);
void write_exploration_suite(const std::string& dir);
void write_ablation_suite(const std::string& dir);
void write_adversarial_suite(const std::string& dir);
void write_mock_script(const std::string& path);
void write_corpus(const std::string& dir, std::uint64_t seed);  // 60 trajectories
void write_all(const std::string& root, std::uint64_t seed);

}  // namespace mirage::fixtures
