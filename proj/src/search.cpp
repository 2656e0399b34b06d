#include "mirage/search.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mirage/prompts.hpp"
#include "mirage/util.hpp"

namespace fs = std::filesystem;

namespace mirage::search {

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::direct: return "direct";
        case Mode::mcts: return "mcts";
        case Mode::sa_mcts: return "sa-mcts";
    }
    return "direct";
}

Mode parse_mode(const std::string& name) {
    if (name == "direct") return Mode::direct;
    if (name == "mcts") return Mode::mcts;
    if (name == "sa-mcts" || name == "sa_mcts") return Mode::sa_mcts;
    throw SearchError("unknown search mode: " + name);
}

void SearchConfig::check_valid() const {
    if (iterations < 1) throw SearchError("iterations must be >= 1");
    if (depth < 1) throw SearchError("depth must be >= 1");
    if (branch < 1) throw SearchError("branch must be >= 1");
    if (!(c_exp > 0)) throw SearchError("c_exp must be > 0");
}

std::vector<const SearchNode*> SearchNode::path_from_root() const {
    std::vector<const SearchNode*> path;
    for (const SearchNode* n = this; n; n = n->parent) path.push_back(n);
    std::reverse(path.begin(), path.end());
    return path;
}

// ---------------------------------------------------------------------------
// tree primitives

SearchNode* select_leaf(SearchNode* root, double c_exp) {
    SearchNode* node = root;
    while (node->expanded && !node->children.empty()) {
        SearchNode* best = nullptr;
        double best_score = 0.0;
        // Ordered map iteration + strict '>' gives the ascending-text tie-break.
        for (auto& [text, child] : node->children) {
            double exploration =
                std::sqrt(std::log(static_cast<double>(std::max(node->visit_count, 1))) /
                          (1.0 + child->visit_count));
            double score = child->value + c_exp * exploration;
            if (!best || score > best_score) {
                best = child.get();
                best_score = score;
            }
        }
        node = best;
    }
    return node;
}

const SubGoalProposal& best_subgoal(const std::vector<SubGoalProposal>& proposals) {
    if (proposals.empty()) throw SearchError("best_subgoal: empty proposal list");
    const SubGoalProposal* best = &proposals.front();
    for (const auto& p : proposals) {
        if (p.estimated_value > best->estimated_value ||
            (p.estimated_value == best->estimated_value && p.prior_rank < best->prior_rank) ||
            (p.estimated_value == best->estimated_value && p.prior_rank == best->prior_rank &&
             p.text < best->text)) {
            best = &p;
        }
    }
    return *best;
}

void backpropagate(SearchNode* leaf, int reward) {
    for (SearchNode* node = leaf; node; node = node->parent) {
        node->value = (node->value * node->visit_count + reward) / (node->visit_count + 1);
        node->visit_count += 1;
    }
}

std::string tree_digest(const SearchNode* root) {
    std::function<nlohmann::json(const SearchNode*)> encode = [&](const SearchNode* n) {
        nlohmann::json j;
        j["subgoal"] = n->subgoal_text;
        j["N"] = n->visit_count;
        j["Q"] = n->value;
        j["terminal"] = n->terminal;
        j["rolled_out"] = n->rolled_out;
        j["state_digest"] = n->state_digest;
        nlohmann::json kids = nlohmann::json::array();
        for (const auto& [text, child] : n->children) kids.push_back(encode(child.get()));
        j["children"] = kids;
        return j;
    };
    return util::json_digest(encode(root));
}

// ---------------------------------------------------------------------------
// approval and replay buffer

ApprovalDecision approve(const agent::Trajectory& trajectory, ApprovalMode mode, std::istream& in,
                         std::ostream& out) {
    if (mode == ApprovalMode::automatic) {
        return {trajectory.outcome.success,
                trajectory.outcome.success ? "verifier succeeded" : "verifier failed"};
    }
    out << "Trajectory for task " << trajectory.task_id << " (" << trajectory.steps.size()
        << " steps):\n";
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i)
        out << "  " << (i + 1) << ". " << trajectory.steps[i].summary << "\n";
    out << "Accept into the replay buffer? [y/n] " << std::flush;
    std::string line;
    if (!std::getline(in, line))
        throw SearchError("interactive approval: input stream closed");
    std::string lower = util::to_lower(util::trim(line));
    bool yes = (lower == "y" || lower == "yes");
    return {yes, yes ? "accepted interactively" : "rejected interactively"};
}

bool ReplayBuffer::add(agent::Trajectory trajectory, const ApprovalDecision& decision) {
    if (!decision.approved || !trajectory.outcome.success) return false;
    entries_.push_back(std::move(trajectory));
    return true;
}

std::vector<agent::Trajectory> ReplayBuffer::drain() {
    std::vector<agent::Trajectory> out;
    out.swap(entries_);
    return out;
}

void ReplayBuffer::persist(const std::string& dir) const {
    fs::create_directories(dir);
    for (const auto& t : entries_) {
        std::ofstream out(fs::path(dir) / (t.content_digest() + ".json"));
        out << t.to_json().dump(2) << "\n";
    }
}

ReplayBuffer ReplayBuffer::load(const std::string& dir) {
    ReplayBuffer buffer;
    if (!fs::is_directory(dir)) return buffer;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
        std::ifstream in(f);
        auto t = agent::Trajectory::from_json(nlohmann::json::parse(in));
        if (t.outcome.success) buffer.entries_.push_back(std::move(t));
    }
    return buffer;
}

nlohmann::json SearchReport::to_json() const {
    return {{"task_id", task_id},
            {"mode", mode_name(mode)},
            {"success", success},
            {"expansions", expansions},
            {"rollouts", rollouts},
            {"skill_candidates", skill_candidates.size()}};
}

// ---------------------------------------------------------------------------
// driver

SearchDriver::SearchDriver(skills::SkillStore& store, const llm::Provider& reasoner,
                           EnvFactory env_factory, SearchConfig config,
                           agent::AgentOptions agent_opts, std::uint64_t seed)
    : store_(store),
      reasoner_(reasoner),
      env_factory_(std::move(env_factory)),
      config_(config),
      agent_opts_(agent_opts),
      seed_(seed) {
    config_.check_valid();
}

void SearchDriver::set_approval(ApprovalMode mode, std::istream* in, std::ostream* out) {
    approval_mode_ = mode;
    approval_in_ = in;
    approval_out_ = out;
}

agent::Trajectory SearchDriver::run_direct(const env::TaskSpec& task) {
    env::GuiEnv environment = env_factory_();
    return agent::run_episode(task, environment, store_, reasoner_, agent_opts_,
                              util::split_seed(seed_, task.task_id), trace_);
}

std::vector<SubGoalProposal> SearchDriver::expand(SearchNode* leaf, const env::TaskSpec& task,
                                                  TreeStats& stats) {
    // Skill conditioning mirrors the planner's retrieval when in sa_mcts mode.
    std::vector<skills::CoreSkill> available;
    bool include_skills = config_.mode == Mode::sa_mcts;
    if (include_skills && agent_opts_.use_meta_level && store_.meta_count() > 0) {
        std::set<std::string> seen;
        for (const auto& [meta, sim] :
             store_.retrieve_meta_candidates(task.instruction, agent_opts_.k))
            for (const auto& core : store_.core_skills_of(meta.id))
                if (seen.insert(core.id).second) available.push_back(core);
    } else if (include_skills && store_.core_count() > 0) {
        for (auto& [core, sim] : store_.retrieve_core_candidates(task.instruction, agent_opts_.k))
            available.push_back(core);
    }

    int depth = static_cast<int>(leaf->path_from_root().size()) - 1;
    int steps_so_far = 0;
    for (const SearchNode* n : leaf->path_from_root())
        steps_so_far += static_cast<int>(n->segment.size());

    const env::Observation& obs = leaf->final_observation;

    auto request = prompts::expansion(task.instruction, config_.branch, depth, steps_so_far, obs,
                                      available, include_skills);
    auto reply = reasoner_.complete(request);

    std::vector<SubGoalProposal> proposals;
    std::set<std::string> seen_text;
    bool duplicates = false;
    for (const auto& sg : reply.parsed.at("subgoals")) {
        SubGoalProposal p;
        p.text = sg.at("text").get<std::string>();
        if (!seen_text.insert(p.text).second) {
            duplicates = true;
            continue;
        }
        std::string core_name = sg.at("core_skill").get<std::string>();
        if (include_skills && sg.at("kind").get<std::string>() == "skill_call" &&
            !core_name.empty()) {
            if (auto core = store_.core_by_name(core_name)) p.source_core_skill = core->id;
        }
        for (const auto& [k, v] : sg.at("args").items()) p.args.emplace_back(k, v.get<std::string>());
        proposals.push_back(std::move(p));
        if (static_cast<int>(proposals.size()) >= config_.branch) break;
    }
    if (proposals.empty()) return {};
    if (duplicates && trace_)
        trace_({{"event", "duplicate_proposals"}, {"task", task.task_id}});

    // Utility ranking (Appendix E.1); the rank maps to r = (n - rank + 1)/n.
    std::vector<std::string> texts;
    for (const auto& p : proposals) texts.push_back(p.text);
    auto rank_reply = reasoner_.complete(prompts::ranking(task.instruction, texts));
    auto order = rank_reply.parsed.at("ranking").get<std::vector<int>>();
    std::vector<bool> covered(proposals.size(), false);
    int n = static_cast<int>(proposals.size());
    int next_rank = 1;
    for (int idx : order) {
        if (idx < 0 || idx >= n || covered[idx])
            throw llm::DecodeError("ranking is not a permutation of candidate indices",
                                   {rank_reply.parsed.dump()});
        proposals[idx].prior_rank = next_rank++;
        covered[idx] = true;
    }
    for (int i = 0; i < n; ++i)
        if (!covered[i]) proposals[i].prior_rank = next_rank++;
    for (auto& p : proposals)
        p.estimated_value = static_cast<double>(n - p.prior_rank + 1) / n;

    // Attach every proposal as an unvisited child; Q starts at zero.
    for (const auto& p : proposals) {
        if (leaf->children.count(p.text)) continue;
        auto child = std::make_unique<SearchNode>();
        child->subgoal_text = p.text;
        child->parent = leaf;
        child->proposal = p;
        leaf->children[p.text] = std::move(child);
    }
    leaf->expanded = true;
    leaf->proposals = proposals;
    stats.expansions += 1;
    return proposals;
}

std::pair<agent::Trajectory, int> SearchDriver::rollout(SearchNode* parent,
                                                        const SubGoalProposal& proposal,
                                                        const env::TaskSpec& task,
                                                        TreeStats& stats) {
    env::GuiEnv environment = env_factory_();
    std::uint64_t task_seed = util::split_seed(seed_, task.task_id);
    env::Observation obs = environment.reset(task, task_seed);

    agent::AgentContext context;
    context.goal = task.instruction;

    // Replay the action prefix along the path; digests must reproduce.
    std::vector<agent::TrajectoryStep> prefix_steps;
    for (const SearchNode* node : parent->path_from_root()) {
        for (const auto& step : node->segment) {
            if (obs.digest != step.observation.digest)
                throw ReplayDivergence("replay diverged before action '" + step.summary +
                                       "' at task " + task.task_id);
            obs = environment.step(step.action);
            context.history.emplace_back(step.action.to_json(), step.summary);
            prefix_steps.push_back(step);
        }
    }
    if (!parent->state_digest.empty() && obs.digest != parent->state_digest)
        throw ReplayDivergence("replayed prefix does not reproduce node state for task " +
                               task.task_id);

    agent::SubGoal subgoal;
    subgoal.text = proposal.text;
    subgoal.args = proposal.args;
    if (proposal.source_core_skill) {
        subgoal.kind = agent::SubGoal::Kind::skill_call;
        subgoal.core_skill_id = *proposal.source_core_skill;
    }

    auto result = agent::execute_subgoal(task.instruction, subgoal, environment, context, store_,
                                         reasoner_, agent_opts_, trace_);
    stats.rollouts += 1;

    // Fill in (or create) the child for this sub-goal.
    auto it = parent->children.find(proposal.text);
    if (it == parent->children.end()) {
        auto child = std::make_unique<SearchNode>();
        child->subgoal_text = proposal.text;
        child->parent = parent;
        child->proposal = proposal;
        it = parent->children.emplace(proposal.text, std::move(child)).first;
    }
    SearchNode* child = it->second.get();
    child->segment = result.steps;
    child->final_observation = environment.observe();
    child->state_digest = child->final_observation.digest;
    child->has_state = true;
    child->rolled_out = true;
    int reward = result.completed ? 1 : 0;
    child->stored_reward = reward;

    env::EpisodeOutcome outcome = environment.verify(task);
    child->terminal = result.episode_terminal || outcome.success ||
                      environment.steps_taken() >= task.max_steps;

    agent::Trajectory full;
    full.task_id = task.task_id;
    full.goal = task.instruction;
    full.steps = prefix_steps;
    for (const auto& s : result.steps) full.steps.push_back(s);
    full.outcome = outcome;
    if (trace_)
        trace_({{"event", "rollout"},
                {"task", task.task_id},
                {"subgoal", proposal.text},
                {"reward", reward},
                {"task_success", outcome.success}});
    return {std::move(full), reward};
}

std::vector<agent::Trajectory> SearchDriver::run_tree(const env::TaskSpec& task, TreeStats& stats,
                                                      std::optional<agent::Trajectory>& best) {
    SearchNode root;
    {
        env::GuiEnv environment = env_factory_();
        auto obs = environment.reset(task, util::split_seed(seed_, task.task_id));
        root.final_observation = obs;
        root.state_digest = obs.digest;
        root.has_state = true;
        root.rolled_out = true;
    }

    std::vector<agent::Trajectory> approved;
    std::set<std::string> seen_digests;

    auto consider = [&](const agent::Trajectory& trajectory) {
        if (!trajectory.outcome.success) return;
        if (!best || trajectory.steps.size() < best->steps.size()) best = trajectory;
        if (!seen_digests.insert(trajectory.content_digest()).second) return;
        std::istream& in = approval_in_ ? *approval_in_ : std::cin;
        std::ostream& out = approval_out_ ? *approval_out_ : std::cout;
        auto decision = approve(trajectory, approval_mode_, in, out);
        if (trace_)
            trace_({{"event", "approval"},
                    {"task", trajectory.task_id},
                    {"approved", decision.approved},
                    {"reason", decision.reason}});
        if (decision.approved) approved.push_back(trajectory);
    };

    for (int t = 0; t < config_.depth; ++t) {
        SearchNode* leaf = select_leaf(&root, config_.c_exp);
        if (leaf->terminal) {
            backpropagate(leaf, leaf->stored_reward);
            continue;
        }
        if (!leaf->has_state && leaf->proposal) {
            // Frontier child attached at expansion but never executed.
            auto [trajectory, reward] = rollout(leaf->parent, *leaf->proposal, task, stats);
            backpropagate(leaf, reward);
            consider(trajectory);
            continue;
        }
        auto proposals = expand(leaf, task, stats);
        if (proposals.empty()) {
            leaf->terminal = true;
            backpropagate(leaf, 0);
            continue;
        }
        const SubGoalProposal& chosen = best_subgoal(proposals);
        auto [trajectory, reward] = rollout(leaf, chosen, task, stats);
        backpropagate(leaf->children.at(chosen.text).get(), reward);
        consider(trajectory);
    }
    if (trace_)
        trace_({{"event", "tree_done"}, {"task", task.task_id}, {"digest", tree_digest(&root)}});
    return approved;
}

SearchReport SearchDriver::run_search(const env::TaskSpec& task) {
    std::vector<env::TaskSpec> single{task};
    auto reports = explore(single);
    return reports.front();
}

std::vector<SearchReport> SearchDriver::explore(const std::vector<env::TaskSpec>& tasks) {
    std::map<std::string, SearchReport> reports;
    for (const auto& task : tasks) {
        SearchReport r;
        r.task_id = task.task_id;
        r.mode = config_.mode;
        reports[task.task_id] = r;
    }

    for (int iteration = 0; iteration < config_.iterations; ++iteration) {
        ReplayBuffer buffer;
        for (const auto& task : tasks) {
            SearchReport& report = reports[task.task_id];
            if (config_.mode == Mode::direct) {
                agent::Trajectory trajectory = run_direct(task);
                report.rollouts += 1;
                if (trajectory.outcome.success) {
                    report.success = true;
                    if (!report.best_trajectory ||
                        trajectory.steps.size() < report.best_trajectory->steps.size())
                        report.best_trajectory = trajectory;
                    std::istream& in = approval_in_ ? *approval_in_ : std::cin;
                    std::ostream& out = approval_out_ ? *approval_out_ : std::cout;
                    auto decision = approve(trajectory, approval_mode_, in, out);
                    if (decision.approved) {
                        buffer.add(trajectory, decision);
                        report.skill_candidates.push_back(std::move(trajectory));
                    }
                }
                continue;
            }
            TreeStats stats;
            std::optional<agent::Trajectory> best = report.best_trajectory;
            auto approved = run_tree(task, stats, best);
            report.expansions += stats.expansions;
            report.rollouts += stats.rollouts;
            report.best_trajectory = best;
            if (best && best->outcome.success) report.success = true;
            for (auto& trajectory : approved) {
                buffer.add(trajectory, {true, "approved during search"});
                report.skill_candidates.push_back(std::move(trajectory));
            }
        }
        if (refine_hook_ && buffer.size() > 0) {
            RefineOutcome outcome = refine_hook_(buffer);
            refine_totals_.execution_skills_created += outcome.execution_skills_created;
            refine_totals_.core_skills_created += outcome.core_skills_created;
            refine_totals_.meta_skills_created += outcome.meta_skills_created;
            store_.merge_core_skills(merge_threshold_, reasoner_);
        }
    }

    std::vector<SearchReport> out;
    for (const auto& task : tasks) out.push_back(std::move(reports[task.task_id]));
    return out;
}

}  // namespace mirage::search
