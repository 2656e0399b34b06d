#include "mirage/bench.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mirage/util.hpp"

namespace fs = std::filesystem;

namespace mirage::bench {

nlohmann::json AblationSpec::to_json() const {
    return {{"name", name},
            {"offline_skills", offline_skills},
            {"online_skills", online_skills},
            {"execution_level", execution_level},
            {"core_level", core_level},
            {"meta_level", meta_level},
            {"reflector", reflector},
            {"mode", search::mode_name(mode)}};
}

AblationSpec AblationSpec::from_json(const nlohmann::json& j) {
    AblationSpec s;
    s.name = j.value("name", "custom");
    s.offline_skills = j.value("offline_skills", true);
    s.online_skills = j.value("online_skills", true);
    s.execution_level = j.value("execution_level", true);
    s.core_level = j.value("core_level", true);
    s.meta_level = j.value("meta_level", true);
    s.reflector = j.value("reflector", true);
    s.mode = search::parse_mode(j.value("mode", "direct"));
    return s;
}

AblationSpec AblationSpec::preset(const std::string& name) {
    AblationSpec s;
    s.name = name;
    if (name == "all-on") return s;
    if (name == "all-off") {
        s.offline_skills = s.online_skills = false;
        s.execution_level = s.core_level = s.meta_level = false;
        s.reflector = false;
        return s;
    }
    if (name == "no-skills") {
        s.offline_skills = s.online_skills = false;
        s.execution_level = s.core_level = s.meta_level = false;
        return s;
    }
    if (name == "levels-all") return s;
    if (name == "levels-core-meta") {
        s.execution_level = false;
        return s;
    }
    if (name == "levels-execution") {
        s.core_level = s.meta_level = false;
        return s;
    }
    if (name == "levels-none") {
        s.execution_level = s.core_level = s.meta_level = false;
        return s;
    }
    if (name == "sources-both") return s;
    if (name == "sources-offline") {
        s.online_skills = false;
        return s;
    }
    if (name == "sources-online") {
        s.offline_skills = false;
        return s;
    }
    if (name == "sources-none") {
        s.offline_skills = s.online_skills = false;
        return s;
    }
    if (name == "reflector-on") return s;
    if (name == "reflector-off") {
        s.reflector = false;
        return s;
    }
    throw BenchError("unknown ablation preset: " + name);
}

std::vector<std::string> AblationSpec::preset_names() {
    return {"all-on",          "all-off",         "no-skills",      "levels-all",
            "levels-core-meta", "levels-execution", "levels-none",    "sources-both",
            "sources-offline",  "sources-online",   "sources-none",   "reflector-on",
            "reflector-off"};
}

agent::AgentOptions AblationSpec::apply(agent::AgentOptions base) const {
    base.use_execution_level = execution_level;
    base.use_core_level = core_level;
    base.use_meta_level = meta_level;
    base.reflector_enabled = reflector;
    return base;
}

nlohmann::json SuiteResult::to_json() const {
    nlohmann::json tasks_json = nlohmann::json::array();
    for (const auto& t : tasks)
        tasks_json.push_back(
            {{"task_id", t.task_id}, {"outcome", t.outcome.to_json()}, {"error", t.error}});
    return {{"tasks", tasks_json},
            {"sr", sr},
            {"cr", cr},
            {"skills_acquired", skills_acquired},
            {"expansions_total", expansions_total},
            {"config", config_echo}};
}

SuiteResult SuiteResult::from_json(const nlohmann::json& j) {
    SuiteResult r;
    for (const auto& t : j.at("tasks")) {
        TaskResult tr;
        tr.task_id = t.at("task_id").get<std::string>();
        tr.outcome = env::EpisodeOutcome::from_json(t.at("outcome"));
        tr.error = t.value("error", "");
        r.tasks.push_back(std::move(tr));
    }
    r.sr = j.at("sr").get<double>();
    r.cr = j.at("cr").get<double>();
    r.skills_acquired = j.at("skills_acquired").get<int>();
    r.expansions_total = j.at("expansions_total").get<int>();
    r.config_echo = j.value("config", nlohmann::json::object());
    return r;
}

namespace {

void finalize_metrics(SuiteResult& result) {
    if (result.tasks.empty()) return;
    int successes = 0;
    double fraction_sum = 0.0;
    for (const auto& t : result.tasks) {
        if (t.outcome.success) ++successes;
        fraction_sum += t.checkpoint_fraction();
    }
    result.sr = static_cast<double>(successes) / result.tasks.size();
    result.cr = fraction_sum / result.tasks.size();
}

}  // namespace

SuiteResult run_suite(const env::Suite& suite, const skills::SkillStore& store,
                      const llm::Provider& reasoner, const RunOptions& options,
                      const AblationSpec& ablation) {
    if (suite.tasks.empty()) throw BenchError("suite has no tasks");
    auto started = std::chrono::steady_clock::now();

    skills::SkillStore view = store.filtered_by_source(ablation.offline_skills,
                                                       ablation.online_skills);
    agent::AgentOptions agent_opts = ablation.apply(options.agent);

    SuiteResult result;
    result.config_echo = {{"seed", options.seed},
                          {"mode", search::mode_name(ablation.mode)},
                          {"ablation", ablation.to_json()},
                          {"k", agent_opts.k},
                          {"grounding_threshold", agent_opts.grounding_threshold},
                          {"reflect_every", agent_opts.reflect_every},
                          {"max_regenerations", agent_opts.max_regenerations}};

    if (!options.trace_dir.empty()) fs::create_directories(options.trace_dir);

    for (const auto& task : suite.tasks) {
        TaskResult task_result;
        task_result.task_id = task.task_id;
        task_result.outcome.checkpoints_total = static_cast<int>(task.checkpoints.size());

        std::ofstream trace_stream;
        agent::TraceSink sink = nullptr;
        if (!options.trace_dir.empty()) {
            trace_stream.open(fs::path(options.trace_dir) / (task.task_id + ".jsonl"));
            sink = [&trace_stream](const nlohmann::json& record) {
                trace_stream << record.dump() << "\n";
            };
        }

        try {
            if (ablation.mode == search::Mode::direct) {
                env::GuiEnv environment(suite.apps);
                auto trajectory =
                    agent::run_episode(task, environment, view, reasoner, agent_opts,
                                       util::split_seed(options.seed, task.task_id), sink);
                task_result.outcome = trajectory.outcome;
            } else {
                search::SearchDriver driver(
                    view, reasoner, [&suite]() { return env::GuiEnv(suite.apps); },
                    options.search, agent_opts, options.seed);
                if (sink) driver.set_trace(sink);
                auto report = driver.run_search(task);
                result.expansions_total += report.expansions;
                if (report.best_trajectory) {
                    task_result.outcome = report.best_trajectory->outcome;
                } else {
                    task_result.outcome.success = false;
                    task_result.outcome.terminal_reason = env::TerminalReason::max_steps;
                }
                if (sink && report.best_trajectory)
                    sink({{"event", "best_trajectory"},
                          {"steps", report.best_trajectory->steps.size()}});
            }
        } catch (const std::exception& e) {
            task_result.error = e.what();
            task_result.outcome.success = false;
            task_result.outcome.terminal_reason = env::TerminalReason::env_error;
        }
        if (sink) sink({{"event", "outcome"}, {"outcome", task_result.outcome.to_json()}});
        result.tasks.push_back(std::move(task_result));
    }

    finalize_metrics(result);
    result.wallclock_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                              std::chrono::steady_clock::now() - started)
                              .count();
    return result;
}

AblationTable run_ablation_matrix(const env::Suite& suite, const skills::SkillStore& store,
                                  const llm::Provider& reasoner, const RunOptions& options,
                                  const std::vector<AblationSpec>& specs) {
    if (specs.empty()) throw BenchError("ablation matrix needs at least one spec");
    AblationTable table;
    for (const auto& spec : specs) {
        RunOptions row_options = options;
        if (!options.trace_dir.empty())
            row_options.trace_dir = (fs::path(options.trace_dir) / spec.name).string();
        SuiteResult row;
        try {
            row = run_suite(suite, store, reasoner, row_options, spec);
        } catch (const std::exception& e) {
            row.config_echo = {{"error", e.what()}, {"ablation", spec.to_json()}};
        }
        table.rows.emplace_back(spec, std::move(row));
    }
    return table;
}

nlohmann::json AblationTable::to_json() const {
    nlohmann::json rows_json = nlohmann::json::array();
    for (const auto& [spec, result] : rows)
        rows_json.push_back({{"spec", spec.to_json()}, {"result", result.to_json()}});
    return {{"rows", rows_json}};
}

std::string AblationTable::render() const {
    std::ostringstream out;
    out << "ablation                     SR       CR       tasks\n";
    for (const auto& [spec, result] : rows) {
        out << spec.name;
        for (std::size_t i = spec.name.size(); i < 28; ++i) out << ' ';
        out << " " << format_percent(result.sr) << "   " << format_percent(result.cr) << "   "
            << result.tasks.size() << "\n";
    }
    return out.str();
}

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f%%", fraction * 100.0);
    return buf;
}

std::string report(const SuiteResult& result) {
    std::ostringstream out;
    out << "tasks: " << result.tasks.size() << "\n";
    out << "SR: " << format_percent(result.sr) << "\n";
    out << "CR: " << format_percent(result.cr) << "\n";
    out << "skills_acquired: " << result.skills_acquired << "\n";
    out << "expansions_total: " << result.expansions_total << "\n";
    out << "wallclock_ms: " << result.wallclock_ms << "\n";
    out << "config: " << result.config_echo.dump() << "\n";
    int shown = 0;
    for (const auto& t : result.tasks) {
        out << "  " << t.task_id << ": " << (t.outcome.success ? "pass" : "FAIL") << " ("
            << t.outcome.checkpoints_completed << "/" << t.outcome.checkpoints_total
            << " checkpoints, " << t.outcome.steps_taken << " steps)";
        if (!t.error.empty()) out << " error: " << t.error;
        out << "\n";
        ++shown;
    }
    (void)shown;
    return out.str();
}

TraceMetrics recompute_from_traces(const std::string& trace_dir) {
    TraceMetrics metrics;
    if (!fs::is_directory(trace_dir)) throw BenchError("trace directory not found: " + trace_dir);
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(trace_dir))
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());

    int successes = 0;
    double fraction_sum = 0.0;
    for (const auto& path : files) {
        std::ifstream in(path);
        std::string line;
        std::optional<nlohmann::json> outcome;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            auto record = nlohmann::json::parse(line);
            if (record.value("event", "") == "outcome") outcome = record.at("outcome");
        }
        if (!outcome) throw BenchError("trace " + path.string() + " has no outcome record");
        ++metrics.tasks;
        if (outcome->at("success").get<bool>()) ++successes;
        int total = outcome->at("checkpoints_total").get<int>();
        int done = outcome->at("checkpoints_completed").get<int>();
        fraction_sum += total == 0 ? 0.0 : static_cast<double>(done) / total;
    }
    if (metrics.tasks > 0) {
        metrics.sr = static_cast<double>(successes) / metrics.tasks;
        metrics.cr = fraction_sum / metrics.tasks;
    }
    return metrics;
}

}  // namespace mirage::bench
