// mirage: skill bootstrap, online exploration, benchmarking and inspection
// over the simulated phone environment.
//
// Exit codes: 0 ok, 2 input problem, 3 provider failure, 4 store lock held,
// 5 output-safety refusal.

#include <fcntl.h>
#include <unistd.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "mirage/bench.hpp"
#include "mirage/config.hpp"
#include "mirage/fixtures.hpp"
#include "mirage/induction.hpp"
#include "mirage/search.hpp"
#include "mirage/util.hpp"

namespace fs = std::filesystem;
using namespace mirage;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitProvider = 3;
constexpr int kExitLock = 4;
constexpr int kExitOutputSafety = 5;

struct CliError : std::runtime_error {
    CliError(int exit_code, const std::string& message)
        : std::runtime_error(message), code(exit_code) {}
    int code;
};

// O_EXCL lock file next to the store; removed on scope exit.
class StoreLock {
public:
    explicit StoreLock(const std::string& store_path) : path_(store_path + ".lock") {
        int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
        if (fd < 0)
            throw CliError(kExitLock, "store is locked by another process (" + path_ +
                                          " exists); remove it if stale");
        ::close(fd);
    }
    ~StoreLock() { ::unlink(path_.c_str()); }

private:
    std::string path_;
};

skills::SkillStore load_or_create_store(const config::GlobalConfig& cfg) {
    auto embedder = cfg.make_embedder();
    if (!cfg.paths.store.empty() && fs::exists(cfg.paths.store))
        return skills::SkillStore::load(cfg.paths.store, embedder);
    return skills::SkillStore(embedder);
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << text;
}

void write_json_file(const fs::path& path, const nlohmann::json& doc) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << doc.dump(2) << "\n";
}

std::string timestamp_suffix() {
    auto now = std::chrono::system_clock::now();
    auto t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", std::localtime(&t));
    return buf;
}

env::Suite load_suite_checked(const std::string& dir, std::uint64_t seed) {
    if (dir.empty()) throw CliError(kExitInput, "--suite is required");
    if (!fs::is_directory(dir)) throw CliError(kExitInput, "suite directory not found: " + dir);
    env::Suite suite = env::load_suite(dir, seed);
    if (suite.tasks.empty()) throw CliError(kExitInput, "suite has no tasks: " + dir);
    return suite;
}

int cmd_init_skills(const config::GlobalConfig& cfg, int limit) {
    if (cfg.paths.corpus.empty()) throw CliError(kExitInput, "--corpus is required");
    if (!fs::is_directory(cfg.paths.corpus))
        throw CliError(kExitInput, "corpus directory not found: " + cfg.paths.corpus);
    if (cfg.paths.store.empty()) throw CliError(kExitInput, "--store is required");

    auto provider = cfg.make_provider();
    skills::SkillStore store(cfg.make_embedder());
    auto report = induct::bootstrap(cfg.paths.corpus, store, *provider, limit);
    store.save(cfg.paths.store);
    std::cout << "bootstrapped " << store.execution_count() << " execution / "
              << store.core_count() << " core / " << store.meta_count() << " meta skills\n";
    std::cout << report.to_json().dump(2) << "\n";
    std::cout << "store written to " << cfg.paths.store << "\n";
    return kExitOk;
}

int cmd_explore(const config::GlobalConfig& cfg, bool interactive_approval,
                const std::string& buffer_dir) {
    if (cfg.paths.store.empty()) throw CliError(kExitInput, "--store is required");
    if (!fs::exists(cfg.paths.store))
        throw CliError(kExitInput, "store file not found: " + cfg.paths.store);
    env::Suite suite = load_suite_checked(cfg.paths.suite, cfg.seed);

    StoreLock lock(cfg.paths.store);
    fs::copy_file(cfg.paths.store, cfg.paths.store + "." + timestamp_suffix() + ".bak",
                  fs::copy_options::overwrite_existing);

    auto provider = cfg.make_provider();
    auto store = skills::SkillStore::load(cfg.paths.store, cfg.make_embedder());
    std::uint64_t revision_before = store.revision();

    search::SearchDriver driver(
        store, *provider, [&suite]() { return env::GuiEnv(suite.apps); }, cfg.search, cfg.agent,
        cfg.seed);
    induct::InductionReport induction_totals;
    driver.set_refine_hook(induct::make_refine_hook(store, *provider, &induction_totals));
    driver.set_merge_threshold(cfg.merge_threshold);
    if (interactive_approval)
        driver.set_approval(search::ApprovalMode::interactive, &std::cin, &std::cout);

    std::ofstream trace_stream;
    if (!cfg.paths.out.empty()) {
        fs::create_directories(cfg.paths.out);
        trace_stream.open(fs::path(cfg.paths.out) / "explore_trace.jsonl");
        driver.set_trace([&trace_stream](const nlohmann::json& record) {
            trace_stream << record.dump() << "\n";
        });
    }

    int exit_code = kExitOk;
    std::vector<search::SearchReport> reports;
    try {
        reports = driver.explore(suite.tasks);
    } catch (const llm::ProviderError& e) {
        std::cerr << "provider exhausted mid-exploration: " << e.what() << "\n";
        exit_code = kExitProvider;
    }

    store.save(cfg.paths.store);  // partial results still saved on provider failure

    if (!buffer_dir.empty()) {
        search::ReplayBuffer keep;
        for (const auto& r : reports)
            for (const auto& t : r.skill_candidates) keep.add(t, {true, "explore"});
        keep.persist(buffer_dir);
    }

    int successes = 0, expansions = 0;
    for (const auto& r : reports) {
        if (r.success) ++successes;
        expansions += r.expansions;
    }
    nlohmann::json summary{{"mode", search::mode_name(cfg.search.mode)},
                           {"tasks", suite.tasks.size()},
                           {"task_successes", successes},
                           {"expansions", expansions},
                           {"skills_acquired", driver.refine_totals().execution_skills_created},
                           {"core_skills_created", driver.refine_totals().core_skills_created},
                           {"meta_skills_created", driver.refine_totals().meta_skills_created},
                           {"store_revision_before", revision_before},
                           {"store_revision_after", store.revision()}};
    if (!cfg.paths.out.empty()) write_json_file(fs::path(cfg.paths.out) / "explore.json", summary);
    std::cout << summary.dump(2) << "\n";
    return exit_code;
}

int cmd_run_bench(const config::GlobalConfig& cfg, const std::string& ablation_arg, bool force) {
    env::Suite suite = load_suite_checked(cfg.paths.suite, cfg.seed);
    if (cfg.paths.out.empty()) throw CliError(kExitInput, "--out is required");
    if (fs::exists(cfg.paths.out) && !fs::is_empty(cfg.paths.out) && !force)
        throw CliError(kExitOutputSafety,
                       "output directory " + cfg.paths.out + " is not empty (use --force)");
    fs::create_directories(cfg.paths.out);

    auto provider = cfg.make_provider();
    auto embedder = cfg.make_embedder();
    skills::SkillStore store =
        (!cfg.paths.store.empty() && fs::exists(cfg.paths.store))
            ? skills::SkillStore::load(cfg.paths.store, embedder)
            : skills::SkillStore(embedder);

    bench::RunOptions options;
    options.agent = cfg.agent;
    options.search = cfg.search;
    options.seed = cfg.seed;
    options.trace_dir = (fs::path(cfg.paths.out) / "traces").string();

    // The ablation argument is a preset name or a JSON file of specs.
    std::vector<bench::AblationSpec> specs;
    if (fs::exists(ablation_arg) && fs::is_regular_file(ablation_arg)) {
        std::ifstream in(ablation_arg);
        auto doc = nlohmann::json::parse(in);
        for (const auto& s : doc.at("specs")) specs.push_back(bench::AblationSpec::from_json(s));
        if (specs.empty()) throw CliError(kExitInput, "ablation file has no specs");
    } else {
        bench::AblationSpec spec = bench::AblationSpec::preset(ablation_arg);
        spec.mode = cfg.search.mode;
        specs.push_back(spec);
    }

    if (specs.size() == 1) {
        auto result = bench::run_suite(suite, store, *provider, options, specs.front());
        write_json_file(fs::path(cfg.paths.out) / "result.json", result.to_json());
        write_text(fs::path(cfg.paths.out) / "report.txt", bench::report(result));
        std::cout << bench::report(result);
    } else {
        auto table = bench::run_ablation_matrix(suite, store, *provider, options, specs);
        write_json_file(fs::path(cfg.paths.out) / "result.json", table.to_json());
        write_text(fs::path(cfg.paths.out) / "report.txt", table.render());
        std::cout << table.render();
    }
    return kExitOk;
}

int cmd_inspect_skills(const config::GlobalConfig& cfg) {
    if (cfg.paths.store.empty()) throw CliError(kExitInput, "--store is required");
    if (!fs::exists(cfg.paths.store))
        throw CliError(kExitInput, "store file not found: " + cfg.paths.store);
    auto store = skills::SkillStore::load(cfg.paths.store, cfg.make_embedder());

    std::cout << "store: " << store.meta_count() << " meta / " << store.core_count() << " core / "
              << store.execution_count() << " execution skills (revision " << store.revision()
              << ")\n";
    for (const auto& meta : store.metas()) {
        std::cout << "meta " << meta.name << " [" << meta.id << "]: " << meta.description << "\n";
        for (const auto& core : store.core_skills_of(meta.id)) {
            std::cout << "  core " << core.signature() << " [" << core.id << "] ("
                      << core.execution_skill_ids.size() << " executions)\n";
            for (const auto& eid : core.execution_skill_ids) {
                auto eps = store.execution_by_id(eid);
                if (eps)
                    std::cout << "    " << eid << ": " << eps->goal_text << " ("
                              << eps->steps.size() << " steps)\n";
            }
        }
    }
    return kExitOk;
}

int cmd_gen_tasks(const config::GlobalConfig& cfg, int count) {
    if (cfg.paths.out.empty()) throw CliError(kExitInput, "--out is required");
    auto provider = cfg.make_provider();

    std::vector<std::pair<std::string, std::string>> app_descriptions;
    for (const auto& [name, app] : fixtures::builtin_apps())
        app_descriptions.emplace_back(name, "phone app with " + std::to_string(app.screens.size()) +
                                                " screens");
    auto generated = induct::generate_exploration_tasks(app_descriptions, *provider, count);

    auto templates = fixtures::primitive_templates();
    fixtures::write_apps(cfg.paths.out);
    int written = 0;
    std::vector<std::string> unresolved;
    for (const auto& instruction : generated.instructions) {
        char task_id[32];
        std::snprintf(task_id, sizeof(task_id), "gen_%03d", written);
        auto task = env::resolve_instruction(instruction, templates, task_id);
        if (!task) {
            unresolved.push_back(instruction);
            continue;
        }
        env::TaskTemplate concrete;
        concrete.template_name = task->task_id;
        concrete.instruction = task->instruction;
        concrete.apps_involved = task->apps_involved;
        concrete.checkpoints = task->checkpoints;
        concrete.initial_state = task->initial_state;
        concrete.max_steps = task->max_steps;
        char file_name[48];
        std::snprintf(file_name, sizeof(file_name), "task_%03d.json", written);
        write_json_file(fs::path(cfg.paths.out) / file_name, concrete.to_json());
        ++written;
    }
    std::cout << "wrote " << written << " tasks to " << cfg.paths.out << "\n";
    for (const auto& d : generated.dropped)
        std::cerr << "dropped (no registered app): " << d << "\n";
    for (const auto& u : unresolved)
        std::cerr << "dropped (no template match): " << u << "\n";
    return kExitOk;
}

int cmd_gen_corpus(const config::GlobalConfig& cfg) {
    if (cfg.paths.out.empty()) throw CliError(kExitInput, "--out is required");
    fixtures::write_corpus(cfg.paths.out, cfg.seed);
    int count = 0;
    for (const auto& entry : fs::directory_iterator(cfg.paths.out))
        if (entry.path().extension() == ".json") ++count;
    std::cout << "wrote " << count << " trajectories to " << cfg.paths.out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mirage agent benchmark: hierarchical skills + skill-augmented tree search over a "
                 "simulated phone"};
    app.require_subcommand(0, 1);

    std::string config_path, provider_type, mock_script, endpoint, model, store_path, suite_dir,
        corpus_dir, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false, trace = false, config_dump = false, show_version = false;

    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--provider", provider_type, "Provider type: mock | http (default mock)");
    app.add_option("--mock-script", mock_script, "Mock provider script (JSON rules)");
    app.add_option("--endpoint", endpoint, "HTTP provider endpoint (http://host:port)");
    app.add_option("--model", model, "HTTP provider model name (default gpt-4o)");
    app.add_option("--store", store_path, "Skill store file");
    app.add_option("--suite", suite_dir, "Suite directory (apps + tasks)");
    app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", seed, "Master seed (default 0)")->each([&](const std::string&) {
        seed_set = true;
    });
    app.add_flag("--trace", trace, "Log provider traffic to stderr");
    app.add_flag("--config-dump", config_dump, "Print the effective config as JSON and exit");
    app.add_flag("--version", show_version, "Print version and exit");

    int limit = -1;
    auto* init = app.add_subcommand("init-skills", "Bootstrap the skill store from a corpus");
    init->add_option("--corpus", corpus_dir, "Trajectory corpus directory");
    init->add_option("--limit", limit, "Process at most N corpus records (default all)");

    bool interactive_approval = false;
    std::string buffer_dir, mode_arg;
    int iterations = 0, depth = 0, branch = 0;
    auto* explore = app.add_subcommand("explore", "Run search over a suite to acquire skills");
    explore->add_option("--mode", mode_arg, "direct | mcts | sa-mcts");
    explore->add_option("--iterations", iterations, "Outer refinement iterations (N)");
    explore->add_option("--depth", depth, "Tree loop budget per task (T)");
    explore->add_option("--branch", branch, "Sub-goals sampled per expansion (S)");
    explore->add_flag("--interactive-approval", interactive_approval,
                      "Ask on stdin before admitting each trajectory");
    explore->add_option("--buffer-dir", buffer_dir, "Persist approved trajectories here");

    std::string ablation_arg = "all-on";
    bool force = false;
    auto* run_bench = app.add_subcommand("run-bench", "Execute a task suite and report SR/CR");
    run_bench->add_option("--mode", mode_arg, "direct | mcts | sa-mcts");
    run_bench->add_option("--ablation", ablation_arg, "Ablation preset name or spec file");
    run_bench->add_flag("--force", force, "Allow writing into a non-empty output directory");

    auto* inspect = app.add_subcommand("inspect-skills", "Print the meta/core/execution tree");

    int gen_count = 30;
    auto* gen_tasks = app.add_subcommand("gen-tasks", "Generate exploration tasks into a suite");
    gen_tasks->add_option("--count", gen_count, "Number of tasks to request (default 30)");

    auto* gen_corpus = app.add_subcommand("gen-corpus", "Write the synthetic offline corpus");

    CLI11_PARSE(app, argc, argv);

    if (show_version) {
        std::cout << "mirage 0.1.0 (store schema v" << skills::SkillStore::kSchemaVersion << ")\n";
        return kExitOk;
    }

    try {
        config::GlobalConfig cfg = config::GlobalConfig::load(config_path);
        if (!provider_type.empty()) cfg.provider.type = provider_type;
        if (!mock_script.empty()) cfg.provider.mock_script = mock_script;
        if (!endpoint.empty()) {
            cfg.provider.endpoint = endpoint;
            if (provider_type.empty()) cfg.provider.type = "http";
        }
        if (!model.empty()) cfg.provider.model = model;
        if (!store_path.empty()) cfg.paths.store = store_path;
        if (!suite_dir.empty()) cfg.paths.suite = suite_dir;
        if (!corpus_dir.empty()) cfg.paths.corpus = corpus_dir;
        if (!out_dir.empty()) cfg.paths.out = out_dir;
        if (seed_set) cfg.seed = seed;
        if (trace) cfg.trace = true;
        if (!mode_arg.empty()) cfg.search.mode = search::parse_mode(mode_arg);
        if (iterations > 0) cfg.search.iterations = iterations;
        if (depth > 0) cfg.search.depth = depth;
        if (branch > 0) cfg.search.branch = branch;

        if (config_dump) {
            std::cout << cfg.dump().dump(2) << "\n";
            return kExitOk;
        }

        if (init->parsed()) return cmd_init_skills(cfg, limit);
        if (explore->parsed()) return cmd_explore(cfg, interactive_approval, buffer_dir);
        if (run_bench->parsed()) return cmd_run_bench(cfg, ablation_arg, force);
        if (inspect->parsed()) return cmd_inspect_skills(cfg);
        if (gen_tasks->parsed()) return cmd_gen_tasks(cfg, gen_count);
        if (gen_corpus->parsed()) return cmd_gen_corpus(cfg);

        std::cout << app.help() << "\n";
        return kExitOk;
    } catch (const CliError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code;
    } catch (const llm::ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const config::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }
}
