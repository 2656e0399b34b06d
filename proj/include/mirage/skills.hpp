#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mirage/embedding.hpp"
#include "mirage/provider.hpp"

namespace mirage::skills {

// Where a skill's source trajectory came from; drives the source ablations.
enum class SkillSource { offline_corpus, online_exploration };

std::string source_name(SkillSource s);
SkillSource parse_source(const std::string& name);

struct ExecutionStep {
    std::string observation_digest;
    std::string step_goal;
    nlohmann::json action;
};

// One formalized trajectory: a concrete sub-goal plus its labeled steps.
struct ExecutionSkill {
    std::string id;
    std::string goal_text;
    std::vector<ExecutionStep> steps;
    std::string final_observation_digest;
    std::string source_trajectory_id;
    SkillSource source = SkillSource::offline_corpus;
    embed::EmbeddingVector embedding;  // over goal_text

    void check_valid() const;  // throws std::invalid_argument
    nlohmann::json to_json() const;
};

struct CoreParam {
    std::string name;
    std::string description;
};

// A named, parameterized function abstracting several execution skills. The
// body is an ordered list of step-goal templates with {param} placeholders.
struct CoreSkill {
    std::string id;
    std::string name;
    std::vector<CoreParam> params;
    std::string docstring;
    std::vector<std::string> body;
    std::set<std::string> execution_skill_ids;
    embed::EmbeddingVector embedding;  // over name + docstring

    void check_valid() const;
    std::string signature() const;  // "name(p1, p2)"
    nlohmann::json to_json() const;
};

struct MetaSkill {
    std::string id;
    std::string name;
    std::string description;
    std::set<std::string> core_skill_ids;
    embed::EmbeddingVector embedding;  // over name + description

    void check_valid() const;
    nlohmann::json to_json() const;
};

struct InsertionReport {
    enum class Decision { attached, created };
    Decision meta_decision = Decision::attached;
    Decision core_decision = Decision::attached;
    std::string meta_id;
    std::string core_id;
};

struct MergedPair {
    std::string survivor_id;
    std::string absorbed_id;
    double similarity = 0.0;
};

struct MergeReport {
    std::vector<MergedPair> merged;
    std::vector<std::string> skipped;  // provider failures, pair still consistent
};

struct StoreError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegrityError : StoreError {
    using StoreError::StoreError;
};

// The Hierarchical Multimodal Skills store. Starts empty. Many concurrent
// readers, one writer; every mutation bumps `revision`.
class SkillStore {
public:
    explicit SkillStore(std::shared_ptr<const embed::Embedder> embedder);

    // Movable (fresh mutex); copy via clone().
    SkillStore(SkillStore&& other) noexcept;
    SkillStore& operator=(SkillStore&& other) noexcept;
    SkillStore(const SkillStore&) = delete;
    SkillStore& operator=(const SkillStore&) = delete;

    // --- read side -----------------------------------------------------
    std::size_t meta_count() const;
    std::size_t core_count() const;
    std::size_t execution_count() const;
    std::uint64_t revision() const;
    std::size_t dimension() const { return embedder_->dimension(); }

    std::vector<MetaSkill> metas() const;          // ascending id
    std::vector<CoreSkill> cores() const;          // ascending id
    std::vector<ExecutionSkill> executions() const;

    std::optional<MetaSkill> meta_by_id(const std::string& id) const;
    std::optional<CoreSkill> core_by_id(const std::string& id) const;
    std::optional<CoreSkill> core_by_name(const std::string& name) const;
    std::optional<ExecutionSkill> execution_by_id(const std::string& id) const;
    bool has_trajectory_digest(const std::string& digest) const;
    std::optional<std::string> execution_id_for_trajectory(const std::string& digest) const;

    // Top-k meta skills by cosine to the goal embedding, descending; ties by
    // ascending id. Empty store gives an empty list.
    std::vector<std::pair<MetaSkill, double>> retrieve_meta_candidates(const std::string& goal,
                                                                       std::size_t k) const;

    // Direct core retrieval (used when the meta level is ablated away).
    std::vector<std::pair<CoreSkill, double>> retrieve_core_candidates(const std::string& goal,
                                                                       std::size_t k) const;

    // Top-k execution skills by goal similarity (reflector exemplars).
    std::vector<std::pair<ExecutionSkill, double>> retrieve_execution_candidates(
        const std::string& goal, std::size_t k) const;

    // All core skills whose id is in meta.core_skill_ids, ordered by id.
    // Throws StoreError on an unknown meta id.
    std::vector<CoreSkill> core_skills_of(const std::string& meta_id) const;

    // Structural digest over the full serialized store (revision excluded, so
    // two stores with equal content but different histories compare equal).
    std::string content_digest() const;

    // Throws IntegrityError naming the first dangling reference.
    void check_integrity() const;

    // --- write side ----------------------------------------------------

    // §3.3 insertion: the execution skill is analyzed at the meta level
    // (classification prompt), then the core level (synthesis prompt), links
    // are set and the revision bumps exactly once. Atomic: on any error the
    // store content is unchanged.
    InsertionReport insert_execution_skill(const ExecutionSkill& eps, const llm::Provider& reasoner);

    // Re-run classification/synthesis for an existing execution skill (used
    // when re-inducting a known trajectory). Never creates skills; bumps
    // revision once.
    InsertionReport reattach_execution_skill(const std::string& execution_id,
                                             const llm::Provider& reasoner);

    // Consolidates every pair of core skills with cosine >= threshold and
    // identical parameter arity. The survivor inherits execution links and
    // meta memberships. Provider failure on a pair skips that pair only.
    MergeReport merge_core_skills(double threshold, const llm::Provider& reasoner);

    // --- persistence -----------------------------------------------------
    void save(const std::string& path) const;
    static SkillStore load(const std::string& path, std::shared_ptr<const embed::Embedder> embedder);

    nlohmann::json to_json() const;
    static SkillStore from_json(const nlohmann::json& doc,
                                std::shared_ptr<const embed::Embedder> embedder);

    // Copy retaining only skills supported by the allowed trajectory sources;
    // cores/metas left without members are dropped. Feeds the source ablation.
    SkillStore filtered_by_source(bool keep_offline, bool keep_online) const;

    SkillStore clone() const;

    const embed::Embedder& embedder() const { return *embedder_; }
    std::shared_ptr<const embed::Embedder> embedder_ptr() const { return embedder_; }

    static constexpr int kSchemaVersion = 1;

private:
    SkillStore() = default;

    void bump_revision_locked();
    void check_integrity_locked() const;
    nlohmann::json to_json_locked() const;
    std::string next_id_locked(const std::string& prefix);

    // Classification/synthesis helpers; operate on a scratch copy for atomicity.
    friend struct InsertScratch;

    std::shared_ptr<const embed::Embedder> embedder_;
    std::map<std::string, MetaSkill> metas_;
    std::map<std::string, CoreSkill> cores_;
    std::map<std::string, ExecutionSkill> executions_;
    std::map<std::string, std::string> trajectory_digest_to_execution_;
    std::uint64_t revision_ = 0;
    std::uint64_t id_counter_ = 0;
    mutable std::shared_mutex mutex_;
};

}  // namespace mirage::skills
