#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mirage/agent.hpp"
#include "mirage/env.hpp"
#include "mirage/provider.hpp"
#include "mirage/skills.hpp"

namespace mirage::search {

struct SearchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Replaying a node's action prefix no longer reproduces its recorded
// observation digest; the tree is invalid.
struct ReplayDivergence : SearchError {
    using SearchError::SearchError;
};

enum class Mode { direct, mcts, sa_mcts };
std::string mode_name(Mode m);
Mode parse_mode(const std::string& name);

struct SubGoalProposal {
    std::string text;
    std::optional<std::string> source_core_skill;  // set in sa_mcts mode
    std::vector<std::pair<std::string, std::string>> args;
    int prior_rank = 1;        // 1 = best per provider ranking
    double estimated_value = 0;  // r = (n - rank + 1) / n
};

struct SearchNode {
    std::string subgoal_text;  // edge label from the parent ("" at the root)
    SearchNode* parent = nullptr;

    int visit_count = 0;   // N
    double value = 0.0;    // Q, running mean of binary rewards
    bool expanded = false;
    bool terminal = false;

    // State handle: the action prefix from reset, plus the observation digest
    // it must reproduce. has_state is false for attached-but-unrolled
    // proposal children.
    bool has_state = false;
    std::vector<agent::TrajectoryStep> segment;  // steps taken by this node's rollout
    std::string state_digest;
    env::Observation final_observation;  // state this node's rollout ended in

    std::optional<SubGoalProposal> proposal;  // the edge's proposal, when known
    std::vector<SubGoalProposal> proposals;   // proposals generated at this node
    int stored_reward = 0;                    // R of this node's rollout
    bool rolled_out = false;

    std::map<std::string, std::unique_ptr<SearchNode>> children;  // ordered by sub-goal text

    std::vector<const SearchNode*> path_from_root() const;
};

struct SearchConfig {
    int iterations = 1;   // N: outer refinement iterations
    int depth = 4;        // T: tree loop budget per (iteration, task)
    int branch = 3;       // S: sub-goals sampled per expansion
    double c_exp = 1.4142135623730951;
    Mode mode = Mode::sa_mcts;

    void check_valid() const;  // counts >= 1, c_exp > 0
};

// UCB1 descent (Appendix E.1): from the root, at each expanded level pick
// argmax[Q + c*sqrt(log N(parent) / (1 + N(child)))]; unvisited children use
// the exploration term with denominator 1; ties break on ascending sub-goal
// text. Returns the first node that is unexpanded (or childless).
SearchNode* select_leaf(SearchNode* root, double c_exp);

// argmax by estimated value; ties by better (smaller) prior_rank, then text.
// Throws SearchError on an empty list.
const SubGoalProposal& best_subgoal(const std::vector<SubGoalProposal>& proposals);

// Q <- (Q*N + R)/(N+1); N <- N+1, applied leaf-to-root (Appendix E.3).
void backpropagate(SearchNode* leaf, int reward);

struct ApprovalDecision {
    bool approved = false;
    std::string reason;
};

enum class ApprovalMode { automatic, interactive };

// Auto mode approves iff the environment verifier succeeded; interactive mode
// prints the step-goal sequence and reads accept/reject from `in`.
ApprovalDecision approve(const agent::Trajectory& trajectory, ApprovalMode mode, std::istream& in,
                         std::ostream& out);

// Only approved successful trajectories are admitted.
class ReplayBuffer {
public:
    bool add(agent::Trajectory trajectory, const ApprovalDecision& decision);
    const std::vector<agent::Trajectory>& entries() const { return entries_; }
    std::vector<agent::Trajectory> drain();
    std::size_t size() const { return entries_.size(); }

    void persist(const std::string& dir) const;  // one JSON file per trajectory
    static ReplayBuffer load(const std::string& dir);

private:
    std::vector<agent::Trajectory> entries_;
};

struct SearchReport {
    std::string task_id;
    Mode mode = Mode::direct;
    bool success = false;
    std::optional<agent::Trajectory> best_trajectory;
    int expansions = 0;
    int rollouts = 0;
    std::vector<agent::Trajectory> skill_candidates;  // approved, awaiting induction

    nlohmann::json to_json() const;
};

using EnvFactory = std::function<env::GuiEnv()>;

// Counts returned by the refine hook (skill induction after each iteration).
struct RefineOutcome {
    int execution_skills_created = 0;
    int core_skills_created = 0;
    int meta_skills_created = 0;
};

using RefineHook = std::function<RefineOutcome(ReplayBuffer&)>;

class SearchDriver {
public:
    SearchDriver(skills::SkillStore& store, const llm::Provider& reasoner, EnvFactory env_factory,
                 SearchConfig config, agent::AgentOptions agent_opts, std::uint64_t seed);

    void set_trace(agent::TraceSink trace) { trace_ = std::move(trace); }
    void set_approval(ApprovalMode mode, std::istream* in, std::ostream* out);
    void set_refine_hook(RefineHook hook) { refine_hook_ = std::move(hook); }
    void set_merge_threshold(double threshold) { merge_threshold_ = threshold; }

    // Algorithm 1 for a single task: N iterations of (fresh tree, T-step
    // loop, approval, refine).
    SearchReport run_search(const env::TaskSpec& task);

    // Algorithm 1 over a task pool: for each iteration, every task grows its
    // own tree; approved trajectories land in the buffer; the refine hook
    // runs after each iteration.
    std::vector<SearchReport> explore(const std::vector<env::TaskSpec>& tasks);

    const RefineOutcome& refine_totals() const { return refine_totals_; }

private:
    struct TreeStats {
        int expansions = 0;
        int rollouts = 0;
    };

    // One T-step tree loop; returns approved trajectories gathered.
    std::vector<agent::Trajectory> run_tree(const env::TaskSpec& task, TreeStats& stats,
                                            std::optional<agent::Trajectory>& best);
    std::vector<SubGoalProposal> expand(SearchNode* leaf, const env::TaskSpec& task,
                                        TreeStats& stats);
    // Replays the parent prefix, executes the proposal sub-goal, fills in the
    // child node, and returns (full trajectory so far, R).
    std::pair<agent::Trajectory, int> rollout(SearchNode* parent, const SubGoalProposal& proposal,
                                              const env::TaskSpec& task, TreeStats& stats);
    agent::Trajectory run_direct(const env::TaskSpec& task);

    skills::SkillStore& store_;
    const llm::Provider& reasoner_;
    EnvFactory env_factory_;
    SearchConfig config_;
    agent::AgentOptions agent_opts_;
    std::uint64_t seed_;
    agent::TraceSink trace_;
    ApprovalMode approval_mode_ = ApprovalMode::automatic;
    std::istream* approval_in_ = nullptr;
    std::ostream* approval_out_ = nullptr;
    RefineHook refine_hook_;
    RefineOutcome refine_totals_;
    double merge_threshold_ = 0.92;
};

// Deterministic digest over tree structure and statistics.
std::string tree_digest(const SearchNode* root);

}  // namespace mirage::search
