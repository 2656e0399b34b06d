#include "mirage/agent.hpp"

#include <algorithm>
#include <sstream>

#include "mirage/prompts.hpp"
#include "mirage/util.hpp"

namespace mirage::agent {

// ---------------------------------------------------------------------------
// serialization

nlohmann::json SubGoal::to_json() const {
    nlohmann::json args_json = nlohmann::json::object();
    for (const auto& [k, v] : args) args_json[k] = v;
    return {{"kind", kind == Kind::skill_call ? "skill_call" : "natural_language"},
            {"text", text},
            {"core_skill_id", core_skill_id},
            {"args", args_json}};
}

nlohmann::json Plan::to_json() const {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& s : subgoals) subs.push_back(s.to_json());
    return {{"task_goal", task_goal},
            {"selected_meta_id", selected_meta_id ? nlohmann::json(*selected_meta_id)
                                                  : nlohmann::json(nullptr)},
            {"subgoals", subs},
            {"downgraded", downgraded}};
}

nlohmann::json TrajectoryStep::to_json() const {
    return {{"observation", observation.to_json()},
            {"action", action.to_json()},
            {"description", description},
            {"summary", summary},
            {"subgoal_text", subgoal_text},
            {"regenerations", regenerations}};
}

TrajectoryStep TrajectoryStep::from_json(const nlohmann::json& j) {
    TrajectoryStep s;
    s.observation = env::Observation::from_json(j.at("observation"));
    s.action = env::Action::from_json(j.at("action"));
    s.description = j.at("description").get<std::string>();
    s.summary = j.at("summary").get<std::string>();
    s.subgoal_text = j.value("subgoal_text", "");
    s.regenerations = j.value("regenerations", 0);
    return s;
}

std::string Trajectory::content_digest() const {
    // Digest over (goal, observation digests, actions): stable identity for
    // duplicate-trajectory detection regardless of labels or outcome.
    nlohmann::json j;
    j["goal"] = goal;
    nlohmann::json steps_json = nlohmann::json::array();
    for (const auto& s : steps)
        steps_json.push_back({{"obs", s.observation.digest}, {"action", s.action.to_json()}});
    j["steps"] = steps_json;
    return util::json_digest(j);
}

nlohmann::json Trajectory::to_json() const {
    nlohmann::json steps_json = nlohmann::json::array();
    for (const auto& s : steps) steps_json.push_back(s.to_json());
    return {{"format_version", 1},
            {"task_id", task_id},
            {"goal", goal},
            {"steps", steps_json},
            {"outcome", outcome.to_json()}};
}

Trajectory Trajectory::from_json(const nlohmann::json& j) {
    Trajectory t;
    t.task_id = j.at("task_id").get<std::string>();
    t.goal = j.at("goal").get<std::string>();
    for (const auto& s : j.at("steps")) t.steps.push_back(TrajectoryStep::from_json(s));
    t.outcome = env::EpisodeOutcome::from_json(j.at("outcome"));
    return t;
}

// ---------------------------------------------------------------------------
// planning (Eq. 1-3)

Plan plan(const std::string& goal, const skills::SkillStore& store, const llm::Provider& reasoner,
          const AgentOptions& opts, const TraceSink& trace) {
    std::vector<std::pair<skills::MetaSkill, double>> candidates;
    if (opts.use_meta_level && store.meta_count() > 0)
        candidates = store.retrieve_meta_candidates(goal, static_cast<std::size_t>(opts.k));

    std::vector<skills::CoreSkill> core_functions;
    if (opts.use_core_level) {
        if (!candidates.empty()) {
            std::set<std::string> seen;
            for (const auto& [meta, sim] : candidates)
                for (const auto& core : store.core_skills_of(meta.id))
                    if (seen.insert(core.id).second) core_functions.push_back(core);
        } else if (!opts.use_meta_level && store.core_count() > 0) {
            // Meta level ablated: fall back to direct core retrieval.
            for (auto& [core, sim] :
                 store.retrieve_core_candidates(goal, static_cast<std::size_t>(opts.k)))
                core_functions.push_back(core);
        }
    }

    for (int attempt = 0; attempt <= opts.plan_retries; ++attempt) {
        auto request = prompts::planning(goal, candidates, core_functions);
        if (attempt > 0)
            request.user_text += "\nretry: " + std::to_string(attempt) +
                                 " (previous plan had no sub-goals)\n";
        auto reply = reasoner.complete(request);

        Plan result;
        result.task_goal = goal;
        std::string meta_name = reply.parsed.at("selected_meta").get<std::string>();
        if (!meta_name.empty()) {
            for (const auto& [meta, sim] : candidates)
                if (meta.name == meta_name) result.selected_meta_id = meta.id;
        }
        for (const auto& sg : reply.parsed.at("subgoals")) {
            SubGoal sub;
            sub.text = sg.at("text").get<std::string>();
            for (const auto& [k, v] : sg.at("args").items())
                sub.args.emplace_back(k, v.get<std::string>());
            bool wants_call = sg.at("kind").get<std::string>() == "skill_call";
            if (wants_call && opts.use_core_level) {
                auto core = store.core_by_name(sg.at("core_skill").get<std::string>());
                if (core) {
                    sub.kind = SubGoal::Kind::skill_call;
                    sub.core_skill_id = core->id;
                } else {
                    sub.kind = SubGoal::Kind::natural_language;
                    ++result.downgraded;
                    if (trace)
                        trace({{"event", "subgoal_downgraded"},
                               {"core_skill", sg.at("core_skill").get<std::string>()},
                               {"text", sub.text}});
                }
            } else {
                sub.kind = SubGoal::Kind::natural_language;
                if (wants_call) ++result.downgraded;
            }
            result.subgoals.push_back(std::move(sub));
        }
        if (!result.subgoals.empty()) return result;
    }
    throw AgentError("planner produced an empty sub-goal list after " +
                     std::to_string(opts.plan_retries + 1) + " attempts");
}

// ---------------------------------------------------------------------------
// operator (Eq. 4-5)

Decision decide_action(const std::string& goal, const SubGoal& subgoal,
                       const std::string& step_goal, int subgoal_step,
                       const env::Observation& obs, const AgentContext& context,
                       const llm::Provider& reasoner,
                       const std::vector<RejectedCandidate>& rejected) {
    std::vector<prompts::RejectedAttempt> attempts;
    for (const auto& r : rejected) attempts.push_back({r.decision.description, r.score});
    auto request = prompts::action_decision(
        goal, subgoal.text,
        subgoal.kind == SubGoal::Kind::skill_call ? "skill_call" : "natural_language", step_goal,
        subgoal_step, obs, context.summaries(), attempts);
    auto reply = reasoner.complete(request);
    Decision d;
    d.action = env::Action::from_json(reply.parsed.at("action"));
    d.description = reply.parsed.at("description").get<std::string>();
    d.subgoal_done = reply.parsed.at("subgoal_done").get<bool>();
    return d;
}

std::pair<int, int> ground(const std::string& description, const env::Observation& obs,
                           double threshold) {
    if (obs.elements.empty()) throw GroundingMiss("no elements on screen");
    const env::Element* best = nullptr;
    double best_score = -1.0;
    for (const auto& e : obs.elements) {
        double score =
            util::token_overlap(description, e.text + " " + env::element_role_name(e.role));
        if (score > best_score) {  // strict: first element wins ties
            best_score = score;
            best = &e;
        }
    }
    if (!best || best_score < threshold) {
        std::ostringstream msg;
        msg << "no element matches '" << description << "' (best overlap " << best_score << " < "
            << threshold << ")";
        throw GroundingMiss(msg.str());
    }
    return best->bounds.center();
}

// ---------------------------------------------------------------------------
// reflector (Eq. 6)

ReflectionVerdict reflect(const std::string& goal, const std::string& subgoal,
                          const env::Observation& obs, const env::Action& action,
                          const std::string& description, const AgentContext& context,
                          const skills::SkillStore& store, const llm::Provider& reasoner,
                          const AgentOptions& opts) {
    std::vector<skills::ExecutionSkill> exemplars;
    if (opts.use_execution_level) {
        for (auto& [eps, sim] :
             store.retrieve_execution_candidates(goal, static_cast<std::size_t>(opts.exemplar_count)))
            exemplars.push_back(eps);
    }
    try {
        auto reply = reasoner.complete(prompts::reflection(goal, subgoal, obs, action, description,
                                                           context.summaries(), exemplars));
        ReflectionVerdict v;
        v.caption = reply.parsed.at("caption").get<std::string>();
        v.reason = reply.parsed.at("reason").get<std::string>();
        v.state_change = reply.parsed.at("state_change").get<std::string>();
        v.score = reply.parsed.at("score").get<int>();
        return v;
    } catch (const llm::ProviderError&) {
        // Fail open: a broken reflector must not stall the agent.
        ReflectionVerdict v;
        v.score = 5;
        v.fail_open = true;
        v.reason = "reflector provider failure; pass-through";
        return v;
    }
}

// ---------------------------------------------------------------------------
// sub-goal execution with the regeneration gate

std::vector<std::string> instantiate_body(
    const skills::CoreSkill& core, const std::vector<std::pair<std::string, std::string>>& args) {
    std::vector<std::string> out;
    for (const auto& templ : core.body) {
        std::vector<std::string> missing;
        out.push_back(util::substitute_placeholders(templ, args, &missing));
    }
    return out;
}

namespace {

struct StepExecution {
    bool executed = false;
    bool subgoal_done = false;
    bool subgoal_failed = false;
    TrajectoryStep step;
};

// One environment step: decide, ground, reflect, regenerate up to the budget,
// then force the best-scoring surviving candidate.
StepExecution run_one_step(const std::string& goal, const SubGoal& subgoal,
                           const std::string& step_goal, int subgoal_step, env::GuiEnv& environment,
                           AgentContext& context, const skills::SkillStore& store,
                           const llm::Provider& reasoner, const AgentOptions& opts,
                           const TraceSink& trace, int global_step_index) {
    env::Observation obs = environment.observe();
    std::vector<RejectedCandidate> rejected;
    std::optional<Decision> chosen;
    std::optional<ReflectionVerdict> verdict;

    for (int attempt = 0; attempt <= opts.max_regenerations; ++attempt) {
        Decision d = decide_action(goal, subgoal, step_goal, subgoal_step, obs, context, reasoner,
                                   rejected);
        if (d.action.is_interactive() && !d.action.coord) {
            try {
                d.action.coord = ground(d.description, obs, opts.grounding_threshold);
            } catch (const GroundingMiss& miss) {
                if (trace)
                    trace({{"event", "grounding_miss"},
                           {"description", d.description},
                           {"detail", miss.what()}});
                rejected.push_back({d, -1});
                continue;
            }
        }
        bool reflect_now = opts.reflector_enabled && opts.reflect_every > 0 &&
                           (global_step_index % opts.reflect_every == 0);
        if (reflect_now) {
            ReflectionVerdict v = reflect(goal, subgoal.text, obs, d.action, d.description, context,
                                          store, reasoner, opts);
            if (trace)
                trace({{"event", "reflection"},
                       {"score", v.score},
                       {"fail_open", v.fail_open},
                       {"description", d.description}});
            if (v.score < 5) {  // strictly below 5 regenerates (Eq. 6 gate)
                rejected.push_back({d, v.score});
                continue;
            }
            verdict = v;
        }
        chosen = d;
        break;
    }

    StepExecution result;
    if (!chosen) {
        // Budget exhausted: force the max-q candidate that can actually run.
        const RejectedCandidate* best = nullptr;
        for (const auto& r : rejected) {
            if (r.score < 0) continue;  // grounding misses cannot execute
            if (!best || r.score > best->score) best = &r;
        }
        if (!best) {
            if (trace)
                trace({{"event", "subgoal_step_failed"},
                       {"step_goal", step_goal},
                       {"reason", "no groundable candidate"}});
            result.subgoal_failed = true;
            return result;
        }
        chosen = best->decision;
        if (trace)
            trace({{"event", "regeneration_budget_exhausted"},
                   {"forced_description", chosen->description},
                   {"forced_score", best->score}});
    }

    env::Observation after = environment.step(chosen->action);
    TrajectoryStep step;
    step.observation = obs;
    step.action = chosen->action;
    step.description = chosen->description;
    step.summary = chosen->description;
    step.subgoal_text = subgoal.text;
    step.regenerations = static_cast<int>(rejected.size());
    context.history.emplace_back(chosen->action.to_json(), step.summary);
    if (trace) {
        trace({{"step_index", after.step_index},
               {"observation_digest", obs.digest},
               {"action", chosen->action.to_json()},
               {"description", chosen->description},
               {"state_var_digest", environment.state_digest()},
               {"regenerations", step.regenerations},
               {"reflection_score", verdict ? nlohmann::json(verdict->score) : nlohmann::json(nullptr)}});
    }
    result.executed = true;
    result.subgoal_done = chosen->subgoal_done;
    result.step = std::move(step);
    return result;
}

}  // namespace

SubGoalResult execute_subgoal(const std::string& goal, const SubGoal& subgoal,
                              env::GuiEnv& environment, AgentContext& context,
                              const skills::SkillStore& store, const llm::Provider& reasoner,
                              const AgentOptions& opts, const TraceSink& trace) {
    SubGoalResult result;

    std::vector<std::string> step_goals;
    bool body_driven = false;
    if (subgoal.kind == SubGoal::Kind::skill_call) {
        auto core = store.core_by_id(subgoal.core_skill_id);
        if (!core) throw AgentError("sub-goal references unknown core skill " + subgoal.core_skill_id);
        step_goals = instantiate_body(*core, subgoal.args);
        body_driven = true;
    }

    int steps_this_subgoal = 0;
    std::size_t body_index = 0;
    while (true) {
        if (environment.terminal()) {
            result.episode_terminal = true;
            // A declared completion also closes the current sub-goal.
            result.completed = environment.declared_status() == env::StatusValue::complete;
            return result;
        }
        if (environment.steps_taken() >= opts.max_episode_steps) {
            result.episode_terminal = true;
            return result;
        }
        if (steps_this_subgoal >= opts.max_subgoal_steps) return result;  // starved: not completed
        if (body_driven && body_index >= step_goals.size()) {
            result.completed = true;  // body exhausted = sub-goal complete
            return result;
        }

        std::string step_goal = body_driven ? step_goals[body_index] : subgoal.text;
        auto exec = run_one_step(goal, subgoal, step_goal, steps_this_subgoal, environment, context,
                                 store, reasoner, opts, trace, environment.steps_taken());
        if (exec.subgoal_failed) {
            if (trace) trace({{"event", "subgoal_failed"}, {"subgoal", subgoal.text}});
            return result;  // not completed; caller moves on
        }
        ++steps_this_subgoal;
        if (body_driven) ++body_index;
        result.steps.push_back(exec.step);

        if (exec.step.action.kind == env::ActionKind::status) {
            result.episode_terminal = true;
            result.completed = exec.step.action.status == env::StatusValue::complete;
            return result;
        }
        if (!body_driven && exec.subgoal_done) {
            result.completed = true;
            return result;
        }
    }
}

Trajectory run_episode(const env::TaskSpec& task, env::GuiEnv& environment,
                       const skills::SkillStore& store, const llm::Provider& reasoner,
                       const AgentOptions& opts, std::uint64_t seed, const TraceSink& trace) {
    environment.reset(task, seed);

    Trajectory trajectory;
    trajectory.task_id = task.task_id;
    trajectory.goal = task.instruction;

    AgentContext context;
    context.goal = task.instruction;

    try {
        Plan p = plan(task.instruction, store, reasoner, opts, trace);
        if (trace) trace({{"event", "plan"}, {"plan", p.to_json()}});

        for (std::size_t i = 0; i < p.subgoals.size(); ++i) {
            context.current_subgoal_index = static_cast<int>(i);
            auto sub_result =
                execute_subgoal(task.instruction, p.subgoals[i], environment, context, store,
                                reasoner, opts, trace);
            for (auto& s : sub_result.steps) trajectory.steps.push_back(std::move(s));
            if (!sub_result.completed && trace)
                trace({{"event", "subgoal_incomplete"}, {"subgoal", p.subgoals[i].text}});
            if (sub_result.episode_terminal) break;
            if (environment.steps_taken() >= opts.max_episode_steps) break;
        }
    } catch (const env::EnvError&) {
        trajectory.outcome = environment.verify(task);
        trajectory.outcome.terminal_reason = env::TerminalReason::env_error;
        return trajectory;
    }

    trajectory.outcome = environment.verify(task);
    if (!environment.declared_status() && environment.steps_taken() >= opts.max_episode_steps)
        trajectory.outcome.terminal_reason = env::TerminalReason::max_steps;
    if (trace) trace({{"event", "outcome"}, {"outcome", trajectory.outcome.to_json()}});
    return trajectory;
}

}  // namespace mirage::agent
