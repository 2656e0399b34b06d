#include "mirage/induction.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "mirage/prompts.hpp"
#include "mirage/util.hpp"

namespace fs = std::filesystem;

namespace mirage::induct {

std::string RawTrajectoryRecord::content_digest() const {
    nlohmann::json j;
    j["goal"] = goal;
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& [obs, action] : pairs)
        steps.push_back({{"obs", obs.digest}, {"action", action.to_json()}});
    j["steps"] = steps;
    return util::json_digest(j);
}

nlohmann::json RawTrajectoryRecord::to_json() const {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& [obs, action] : pairs)
        steps.push_back({{"observation", obs.to_json()}, {"action", action.to_json()}});
    return {{"format_version", 1},
            {"goal", goal},
            {"source", skills::source_name(source)},
            {"steps", steps}};
}

RawTrajectoryRecord RawTrajectoryRecord::from_json(const nlohmann::json& j) {
    RawTrajectoryRecord r;
    r.goal = j.at("goal").get<std::string>();
    r.source = skills::parse_source(j.value("source", "offline_corpus"));
    for (const auto& s : j.at("steps"))
        r.pairs.emplace_back(env::Observation::from_json(s.at("observation")),
                             env::Action::from_json(s.at("action")));
    if (r.pairs.empty()) throw InductionError("trajectory record has no steps");
    r.record_id = r.content_digest();
    return r;
}

RawTrajectoryRecord RawTrajectoryRecord::from_trajectory(const agent::Trajectory& t,
                                                         skills::SkillSource src) {
    RawTrajectoryRecord r;
    r.goal = t.goal;
    r.source = src;
    for (const auto& s : t.steps) r.pairs.emplace_back(s.observation, s.action);
    r.record_id = r.content_digest();
    return r;
}

nlohmann::json InductionReport::to_json() const {
    return {{"execution_skills_created", execution_skills_created},
            {"core_skills_created", core_skills_created},
            {"core_skills_attached", core_skills_attached},
            {"meta_skills_created", meta_skills_created},
            {"duplicates_reattached", duplicates_reattached},
            {"failures", failures}};
}

void InductionReport::accumulate(const InductionReport& other) {
    execution_skills_created += other.execution_skills_created;
    core_skills_created += other.core_skills_created;
    core_skills_attached += other.core_skills_attached;
    meta_skills_created += other.meta_skills_created;
    duplicates_reattached += other.duplicates_reattached;
    for (const auto& f : other.failures) failures.push_back(f);
}

skills::ExecutionSkill label_step_goals(const RawTrajectoryRecord& record,
                                        const llm::Provider& reasoner,
                                        const embed::Embedder& embedder) {
    if (record.pairs.empty()) throw InductionError("cannot label an empty record");
    skills::ExecutionSkill eps;
    eps.goal_text = record.goal;
    eps.source_trajectory_id =
        record.record_id.empty() ? record.content_digest() : record.record_id;
    eps.source = record.source;

    for (std::size_t i = 0; i < record.pairs.size(); ++i) {
        const auto& [before, action] = record.pairs[i];
        const env::Observation& after =
            (i + 1 < record.pairs.size()) ? record.pairs[i + 1].first : before;

        // Resolve the element the pointer action hit so the labeler can name it.
        std::string hit_text, hit_role;
        if (action.is_interactive() && action.coord) {
            const env::Element* hit = nullptr;
            for (const auto& e : before.elements)
                if (e.bounds.contains(action.coord->first, action.coord->second)) hit = &e;
            if (hit) {
                hit_text = hit->text;
                hit_role = env::element_role_name(hit->role);
            }
        }
        auto reply = reasoner.complete(prompts::step_goal_label(
            record.goal, static_cast<int>(i + 1), before, after, action, hit_text, hit_role));
        skills::ExecutionStep step;
        step.observation_digest = before.digest;
        step.step_goal = reply.parsed.at("step_goal").get<std::string>();
        step.action = action.to_json();
        eps.steps.push_back(std::move(step));
    }
    eps.final_observation_digest = record.pairs.back().first.digest;
    eps.embedding = embedder.embed(eps.goal_text);
    eps.check_valid();
    return eps;
}

InductionReport induct_record(const RawTrajectoryRecord& record, skills::SkillStore& store,
                              const llm::Provider& reasoner) {
    InductionReport report;
    std::string digest = record.record_id.empty() ? record.content_digest() : record.record_id;
    if (auto existing = store.execution_id_for_trajectory(digest)) {
        // Already inducted: re-run the attachment pass only.
        store.reattach_execution_skill(*existing, reasoner);
        report.duplicates_reattached = 1;
        return report;
    }
    auto eps = label_step_goals(record, reasoner, store.embedder());
    std::size_t metas_before = store.meta_count();
    std::size_t cores_before = store.core_count();
    auto insertion = store.insert_execution_skill(eps, reasoner);
    report.execution_skills_created = 1;
    report.meta_skills_created = static_cast<int>(store.meta_count() - metas_before);
    if (insertion.core_decision == skills::InsertionReport::Decision::created)
        report.core_skills_created = 1;
    else
        report.core_skills_attached = 1;
    (void)cores_before;
    return report;
}

InductionReport bootstrap(const std::string& corpus_dir, skills::SkillStore& store,
                          const llm::Provider& reasoner, int limit) {
    if (!fs::is_directory(corpus_dir))
        throw InductionError("corpus directory not found: " + corpus_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(corpus_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    InductionReport report;
    int processed = 0;
    for (const auto& path : files) {
        if (limit >= 0 && processed >= limit) break;
        RawTrajectoryRecord record;
        try {
            std::ifstream in(path);
            record = RawTrajectoryRecord::from_json(nlohmann::json::parse(in));
        } catch (const std::exception& e) {
            report.failures.push_back(path.filename().string() + ": " + e.what());
            continue;
        }
        ++processed;
        try {
            report.accumulate(induct_record(record, store, reasoner));
        } catch (const std::exception& e) {
            report.failures.push_back(path.filename().string() + ": " + e.what());
        }
    }
    return report;
}

InductionReport induct_from_buffer(search::ReplayBuffer& buffer, skills::SkillStore& store,
                                   const llm::Provider& reasoner) {
    InductionReport report;
    for (const auto& trajectory : buffer.drain()) {
        auto record =
            RawTrajectoryRecord::from_trajectory(trajectory, skills::SkillSource::online_exploration);
        try {
            report.accumulate(induct_record(record, store, reasoner));
        } catch (const std::exception& e) {
            report.failures.push_back(trajectory.task_id + ": " + e.what());
        }
    }
    return report;
}

search::RefineHook make_refine_hook(skills::SkillStore& store, const llm::Provider& reasoner,
                                    InductionReport* accumulator) {
    return [&store, &reasoner, accumulator](search::ReplayBuffer& buffer) {
        InductionReport report = induct_from_buffer(buffer, store, reasoner);
        if (accumulator) accumulator->accumulate(report);
        search::RefineOutcome outcome;
        outcome.execution_skills_created = report.execution_skills_created;
        outcome.core_skills_created = report.core_skills_created;
        outcome.meta_skills_created = report.meta_skills_created;
        return outcome;
    };
}

GeneratedTasks generate_exploration_tasks(
    const std::vector<std::pair<std::string, std::string>>& app_descriptions,
    const llm::Provider& reasoner, int count) {
    GeneratedTasks result;
    if (count == 0) return result;
    if (app_descriptions.empty())
        throw InductionError("task generation needs at least one app description");

    auto names_app = [&](const std::string& instruction) {
        std::string lower = util::to_lower(instruction);
        for (const auto& [app, description] : app_descriptions)
            if (lower.find(util::to_lower(app)) != std::string::npos) return true;
        return false;
    };

    auto reply = reasoner.complete(prompts::task_generation(app_descriptions, count, {}));
    std::vector<std::string> offenders;
    std::set<std::string> seen;
    for (const auto& t : reply.parsed.at("tasks")) {
        std::string instruction = t.get<std::string>();
        if (!seen.insert(instruction).second) continue;
        if (names_app(instruction))
            result.instructions.push_back(instruction);
        else
            offenders.push_back(instruction);
    }
    if (!offenders.empty()) {
        // One regeneration round for instructions missing a registered app.
        auto retry = reasoner.complete(
            prompts::task_generation(app_descriptions, static_cast<int>(offenders.size()), offenders));
        for (const auto& t : retry.parsed.at("tasks")) {
            std::string instruction = t.get<std::string>();
            if (!seen.insert(instruction).second) continue;
            if (names_app(instruction))
                result.instructions.push_back(instruction);
            else
                result.dropped.push_back(instruction);
        }
    }
    if (static_cast<int>(result.instructions.size()) > count)
        result.instructions.resize(count);
    return result;
}

}  // namespace mirage::induct
