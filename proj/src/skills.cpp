#include "mirage/skills.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <regex>
#include <sstream>

#include "mirage/prompts.hpp"
#include "mirage/util.hpp"

namespace mirage::skills {

std::string source_name(SkillSource s) {
    return s == SkillSource::offline_corpus ? "offline_corpus" : "online_exploration";
}

SkillSource parse_source(const std::string& name) {
    if (name == "offline_corpus") return SkillSource::offline_corpus;
    if (name == "online_exploration") return SkillSource::online_exploration;
    throw StoreError("unknown skill source: " + name);
}

// ---------------------------------------------------------------------------
// record validation / serialization

void ExecutionSkill::check_valid() const {
    if (goal_text.empty()) throw std::invalid_argument("execution skill: empty goal");
    if (steps.empty()) throw std::invalid_argument("execution skill: no steps");
    for (const auto& s : steps)
        if (s.step_goal.empty()) throw std::invalid_argument("execution skill: empty step goal");
}

nlohmann::json ExecutionSkill::to_json() const {
    nlohmann::json steps_json = nlohmann::json::array();
    int index = 1;
    for (const auto& s : steps)
        steps_json.push_back({{"index", index++},
                              {"observation_digest", s.observation_digest},
                              {"step_goal", s.step_goal},
                              {"action", s.action}});
    return {{"id", id},
            {"goal_text", goal_text},
            {"steps", steps_json},
            {"final_observation_digest", final_observation_digest},
            {"source_trajectory_id", source_trajectory_id},
            {"source", source_name(source)},
            {"embedding", embedding.values()}};
}

namespace {

bool is_identifier(const std::string& name) {
    static const std::regex re("^[a-z][a-z0-9_]*$");
    return std::regex_match(name, re);
}

}  // namespace

void CoreSkill::check_valid() const {
    if (!is_identifier(name))
        throw std::invalid_argument("core skill: name '" + name + "' is not a snake_case identifier");
    if (execution_skill_ids.empty())
        throw std::invalid_argument("core skill " + name + ": no execution skills");
    if (body.empty()) throw std::invalid_argument("core skill " + name + ": empty body");
    for (const auto& templ : body) {
        for (const auto& ph : util::placeholder_names(templ)) {
            bool known = false;
            for (const auto& p : params)
                if (p.name == ph) { known = true; break; }
            if (!known)
                throw std::invalid_argument("core skill " + name + ": body placeholder {" + ph +
                                            "} is not a parameter");
        }
    }
}

std::string CoreSkill::signature() const {
    std::string sig = name + "(";
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i) sig += ", ";
        sig += params[i].name;
    }
    return sig + ")";
}

nlohmann::json CoreSkill::to_json() const {
    nlohmann::json params_json = nlohmann::json::array();
    for (const auto& p : params)
        params_json.push_back({{"name", p.name}, {"description", p.description}});
    return {{"id", id},
            {"name", name},
            {"params", params_json},
            {"docstring", docstring},
            {"body", body},
            {"execution_skill_ids", std::vector<std::string>(execution_skill_ids.begin(),
                                                             execution_skill_ids.end())},
            {"embedding", embedding.values()}};
}

void MetaSkill::check_valid() const {
    if (!is_identifier(name))
        throw std::invalid_argument("meta skill: name '" + name + "' is not a snake_case identifier");
    if (description.empty()) throw std::invalid_argument("meta skill " + name + ": empty description");
}

nlohmann::json MetaSkill::to_json() const {
    return {{"id", id},
            {"name", name},
            {"description", description},
            {"core_skill_ids",
             std::vector<std::string>(core_skill_ids.begin(), core_skill_ids.end())},
            {"embedding", embedding.values()}};
}

// ---------------------------------------------------------------------------
// store basics

SkillStore::SkillStore(std::shared_ptr<const embed::Embedder> embedder)
    : embedder_(std::move(embedder)) {
    if (!embedder_) throw StoreError("skill store needs an embedder");
}

SkillStore::SkillStore(SkillStore&& other) noexcept {
    std::unique_lock lock(other.mutex_);
    embedder_ = std::move(other.embedder_);
    metas_ = std::move(other.metas_);
    cores_ = std::move(other.cores_);
    executions_ = std::move(other.executions_);
    trajectory_digest_to_execution_ = std::move(other.trajectory_digest_to_execution_);
    revision_ = other.revision_;
    id_counter_ = other.id_counter_;
}

SkillStore& SkillStore::operator=(SkillStore&& other) noexcept {
    if (this == &other) return *this;
    std::scoped_lock locks(mutex_, other.mutex_);
    embedder_ = std::move(other.embedder_);
    metas_ = std::move(other.metas_);
    cores_ = std::move(other.cores_);
    executions_ = std::move(other.executions_);
    trajectory_digest_to_execution_ = std::move(other.trajectory_digest_to_execution_);
    revision_ = other.revision_;
    id_counter_ = other.id_counter_;
    return *this;
}

std::size_t SkillStore::meta_count() const {
    std::shared_lock lock(mutex_);
    return metas_.size();
}

std::size_t SkillStore::core_count() const {
    std::shared_lock lock(mutex_);
    return cores_.size();
}

std::size_t SkillStore::execution_count() const {
    std::shared_lock lock(mutex_);
    return executions_.size();
}

std::uint64_t SkillStore::revision() const {
    std::shared_lock lock(mutex_);
    return revision_;
}

std::vector<MetaSkill> SkillStore::metas() const {
    std::shared_lock lock(mutex_);
    std::vector<MetaSkill> out;
    for (const auto& [id, m] : metas_) out.push_back(m);
    return out;
}

std::vector<CoreSkill> SkillStore::cores() const {
    std::shared_lock lock(mutex_);
    std::vector<CoreSkill> out;
    for (const auto& [id, c] : cores_) out.push_back(c);
    return out;
}

std::vector<ExecutionSkill> SkillStore::executions() const {
    std::shared_lock lock(mutex_);
    std::vector<ExecutionSkill> out;
    for (const auto& [id, e] : executions_) out.push_back(e);
    return out;
}

std::optional<MetaSkill> SkillStore::meta_by_id(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = metas_.find(id);
    if (it == metas_.end()) return std::nullopt;
    return it->second;
}

std::optional<CoreSkill> SkillStore::core_by_id(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = cores_.find(id);
    if (it == cores_.end()) return std::nullopt;
    return it->second;
}

std::optional<CoreSkill> SkillStore::core_by_name(const std::string& name) const {
    std::shared_lock lock(mutex_);
    for (const auto& [id, c] : cores_)
        if (c.name == name) return c;
    return std::nullopt;
}

std::optional<ExecutionSkill> SkillStore::execution_by_id(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = executions_.find(id);
    if (it == executions_.end()) return std::nullopt;
    return it->second;
}

bool SkillStore::has_trajectory_digest(const std::string& digest) const {
    std::shared_lock lock(mutex_);
    return trajectory_digest_to_execution_.count(digest) > 0;
}

std::optional<std::string> SkillStore::execution_id_for_trajectory(const std::string& digest) const {
    std::shared_lock lock(mutex_);
    auto it = trajectory_digest_to_execution_.find(digest);
    if (it == trajectory_digest_to_execution_.end()) return std::nullopt;
    return it->second;
}

namespace {

template <typename Record>
std::vector<std::pair<Record, double>> rank_by_similarity(
    const std::map<std::string, Record>& records, const embed::EmbeddingVector& query,
    std::size_t k) {
    std::vector<std::pair<Record, double>> scored;
    scored.reserve(records.size());
    for (const auto& [id, record] : records)
        scored.emplace_back(record, embed::cosine(query, record.embedding));
    // Map iteration is ascending id; stable_sort keeps that as the tie-break.
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

}  // namespace

std::vector<std::pair<MetaSkill, double>> SkillStore::retrieve_meta_candidates(
    const std::string& goal, std::size_t k) const {
    if (k < 1) throw StoreError("retrieve_meta_candidates: k must be >= 1");
    std::shared_lock lock(mutex_);
    if (metas_.empty()) return {};
    return rank_by_similarity(metas_, embedder_->embed(goal), k);
}

std::vector<std::pair<CoreSkill, double>> SkillStore::retrieve_core_candidates(
    const std::string& goal, std::size_t k) const {
    if (k < 1) throw StoreError("retrieve_core_candidates: k must be >= 1");
    std::shared_lock lock(mutex_);
    if (cores_.empty()) return {};
    return rank_by_similarity(cores_, embedder_->embed(goal), k);
}

std::vector<std::pair<ExecutionSkill, double>> SkillStore::retrieve_execution_candidates(
    const std::string& goal, std::size_t k) const {
    if (k < 1) throw StoreError("retrieve_execution_candidates: k must be >= 1");
    std::shared_lock lock(mutex_);
    if (executions_.empty()) return {};
    return rank_by_similarity(executions_, embedder_->embed(goal), k);
}

std::vector<CoreSkill> SkillStore::core_skills_of(const std::string& meta_id) const {
    std::shared_lock lock(mutex_);
    auto it = metas_.find(meta_id);
    if (it == metas_.end()) throw StoreError("unknown meta skill id: " + meta_id);
    std::vector<CoreSkill> out;
    for (const auto& cid : it->second.core_skill_ids) {
        auto cit = cores_.find(cid);
        if (cit != cores_.end()) out.push_back(cit->second);
    }
    // set iteration is already ascending id
    return out;
}

std::string SkillStore::content_digest() const {
    std::shared_lock lock(mutex_);
    nlohmann::json j = to_json_locked();
    j.erase("revision");
    j.erase("id_counter");
    return util::json_digest(j);
}

void SkillStore::check_integrity() const {
    std::shared_lock lock(mutex_);
    check_integrity_locked();
}

void SkillStore::check_integrity_locked() const {
    std::vector<std::string> problems;
    for (const auto& [id, meta] : metas_)
        for (const auto& cid : meta.core_skill_ids)
            if (!cores_.count(cid))
                problems.push_back("meta " + id + " references missing core " + cid);
    std::set<std::string> covered_cores;
    for (const auto& [id, core] : cores_) {
        for (const auto& eid : core.execution_skill_ids)
            if (!executions_.count(eid))
                problems.push_back("core " + id + " references missing execution " + eid);
        bool in_meta = false;
        for (const auto& [mid, meta] : metas_)
            if (meta.core_skill_ids.count(id)) { in_meta = true; break; }
        if (!in_meta) problems.push_back("core " + id + " belongs to no meta skill");
        (void)covered_cores;
    }
    for (const auto& [digest, eid] : trajectory_digest_to_execution_)
        if (!executions_.count(eid))
            problems.push_back("trajectory digest " + digest + " references missing execution " + eid);
    if (!problems.empty()) {
        std::string msg = "store integrity violation:";
        for (const auto& p : problems) msg += "\n  " + p;
        throw IntegrityError(msg);
    }
}

void SkillStore::bump_revision_locked() { ++revision_; }

std::string SkillStore::next_id_locked(const std::string& prefix) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%05llu", prefix.c_str(),
                  static_cast<unsigned long long>(++id_counter_));
    return buf;
}

// ---------------------------------------------------------------------------
// insertion (§3.3): meta level first, then core level, atomically

namespace {

struct LevelOutcome {
    bool created = false;
    std::string id;
};

}  // namespace

InsertionReport SkillStore::insert_execution_skill(const ExecutionSkill& eps,
                                                   const llm::Provider& reasoner) {
    eps.check_valid();
    std::unique_lock lock(mutex_);
    if (executions_.count(eps.id)) throw StoreError("duplicate execution-skill id: " + eps.id);
    if (!eps.source_trajectory_id.empty() &&
        trajectory_digest_to_execution_.count(eps.source_trajectory_id))
        throw StoreError("trajectory already inducted: " + eps.source_trajectory_id);

    // Scratch copies give atomicity: nothing below touches the live maps
    // until every provider call and validation has succeeded.
    auto metas = metas_;
    auto cores = cores_;
    auto executions = executions_;
    auto digests = trajectory_digest_to_execution_;
    std::uint64_t id_counter = id_counter_;
    auto next_id = [&id_counter](const char* prefix) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%s%05llu", prefix,
                      static_cast<unsigned long long>(++id_counter));
        return std::string(buf);
    };

    ExecutionSkill stored = eps;
    if (stored.id.empty()) stored.id = next_id("e");
    if (stored.embedding.dimension() == 0)
        stored.embedding = embedder_->embed(stored.goal_text);

    // Meta level.
    std::vector<MetaSkill> existing_metas;
    for (const auto& [id, m] : metas) existing_metas.push_back(m);
    auto meta_reply = reasoner.complete(prompts::meta_classification(stored.goal_text, existing_metas));
    LevelOutcome meta_outcome;
    {
        const auto& parsed = meta_reply.parsed;
        bool is_new = parsed.at("is_new").get<bool>();
        std::string wanted = is_new ? parsed.at("name").get<std::string>()
                                    : parsed.at("category").get<std::string>();
        std::string found_id;
        for (const auto& [id, m] : metas)
            if (m.name == wanted) { found_id = id; break; }
        if (!found_id.empty()) {
            meta_outcome = {false, found_id};
        } else if (is_new) {
            MetaSkill m;
            m.id = next_id("m");
            m.name = wanted;
            m.description = parsed.at("description").get<std::string>();
            m.check_valid();
            m.embedding = embedder_->embed(m.name + " " + m.description);
            metas[m.id] = m;
            meta_outcome = {true, m.id};
        } else {
            throw StoreError("meta classification named unknown category '" + wanted + "'");
        }
    }

    // Core level: review the skills already under that meta.
    std::vector<CoreSkill> meta_cores;
    for (const auto& cid : metas.at(meta_outcome.id).core_skill_ids)
        if (cores.count(cid)) meta_cores.push_back(cores.at(cid));
    auto core_reply = reasoner.complete(
        prompts::core_synthesis(stored, meta_cores, metas.at(meta_outcome.id).name));
    LevelOutcome core_outcome;
    {
        const auto& parsed = core_reply.parsed;
        std::string decision = parsed.at("decision").get<std::string>();
        std::string name = parsed.at("name").get<std::string>();
        std::string found_id;
        for (const auto& [id, c] : cores)
            if (c.name == name) { found_id = id; break; }
        if (decision == "reuse") {
            if (found_id.empty())
                throw StoreError("core synthesis reused unknown skill '" + name + "'");
            core_outcome = {false, found_id};
        } else if (!found_id.empty()) {
            // "create" colliding with an existing name attaches instead;
            // names are unique within the store.
            core_outcome = {false, found_id};
        } else {
            CoreSkill c;
            c.id = next_id("c");
            c.name = name;
            for (const auto& p : parsed.at("params"))
                c.params.push_back({p.at("name").get<std::string>(),
                                    p.at("description").get<std::string>()});
            c.docstring = parsed.at("docstring").get<std::string>();
            c.body = parsed.at("body").get<std::vector<std::string>>();
            c.execution_skill_ids.insert(stored.id);
            c.check_valid();  // throws on malformed bodies; insertion aborts
            c.embedding = embedder_->embed(c.name + " " + c.docstring);
            cores[c.id] = c;
            core_outcome = {true, c.id};
        }
    }

    cores.at(core_outcome.id).execution_skill_ids.insert(stored.id);
    metas.at(meta_outcome.id).core_skill_ids.insert(core_outcome.id);
    executions[stored.id] = stored;
    if (!stored.source_trajectory_id.empty())
        digests[stored.source_trajectory_id] = stored.id;

    metas_ = std::move(metas);
    cores_ = std::move(cores);
    executions_ = std::move(executions);
    trajectory_digest_to_execution_ = std::move(digests);
    id_counter_ = id_counter;
    bump_revision_locked();
    check_integrity_locked();

    InsertionReport report;
    report.meta_decision = meta_outcome.created ? InsertionReport::Decision::created
                                                : InsertionReport::Decision::attached;
    report.core_decision = core_outcome.created ? InsertionReport::Decision::created
                                                : InsertionReport::Decision::attached;
    report.meta_id = meta_outcome.id;
    report.core_id = core_outcome.id;
    return report;
}

InsertionReport SkillStore::reattach_execution_skill(const std::string& execution_id,
                                                     const llm::Provider& reasoner) {
    std::unique_lock lock(mutex_);
    auto it = executions_.find(execution_id);
    if (it == executions_.end()) throw StoreError("unknown execution skill: " + execution_id);
    const ExecutionSkill& eps = it->second;

    std::vector<MetaSkill> existing_metas;
    for (const auto& [id, m] : metas_) existing_metas.push_back(m);
    auto meta_reply = reasoner.complete(prompts::meta_classification(eps.goal_text, existing_metas));
    std::string wanted = meta_reply.parsed.at("is_new").get<bool>()
                             ? meta_reply.parsed.at("name").get<std::string>()
                             : meta_reply.parsed.at("category").get<std::string>();
    std::string meta_id;
    for (const auto& [id, m] : metas_)
        if (m.name == wanted) { meta_id = id; break; }
    if (meta_id.empty()) throw StoreError("reattach: unknown meta '" + wanted + "'");

    std::vector<CoreSkill> meta_cores;
    for (const auto& cid : metas_.at(meta_id).core_skill_ids)
        if (cores_.count(cid)) meta_cores.push_back(cores_.at(cid));
    auto core_reply =
        reasoner.complete(prompts::core_synthesis(eps, meta_cores, metas_.at(meta_id).name));
    std::string core_name = core_reply.parsed.at("name").get<std::string>();
    std::string core_id;
    for (const auto& [id, c] : cores_)
        if (c.name == core_name) { core_id = id; break; }
    if (core_id.empty()) throw StoreError("reattach: unknown core '" + core_name + "'");

    cores_.at(core_id).execution_skill_ids.insert(execution_id);
    metas_.at(meta_id).core_skill_ids.insert(core_id);
    bump_revision_locked();
    check_integrity_locked();

    InsertionReport report;
    report.meta_decision = InsertionReport::Decision::attached;
    report.core_decision = InsertionReport::Decision::attached;
    report.meta_id = meta_id;
    report.core_id = core_id;
    return report;
}

// ---------------------------------------------------------------------------
// core-skill merging (§3.3 "regularly refined")

MergeReport SkillStore::merge_core_skills(double threshold, const llm::Provider& reasoner) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw StoreError("merge threshold must be in (0, 1]");
    std::unique_lock lock(mutex_);
    MergeReport report;

    std::vector<std::string> ids;
    for (const auto& [id, c] : cores_) ids.push_back(id);
    std::set<std::string> absorbed;
    bool mutated = false;

    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (absorbed.count(ids[i])) continue;
        for (std::size_t j = i + 1; j < ids.size(); ++j) {
            if (absorbed.count(ids[i])) break;
            if (absorbed.count(ids[j])) continue;
            const CoreSkill& a = cores_.at(ids[i]);
            const CoreSkill& b = cores_.at(ids[j]);
            if (a.params.size() != b.params.size()) continue;
            double sim = embed::cosine(a.embedding, b.embedding);
            if (sim < threshold) continue;

            nlohmann::json parsed;
            try {
                parsed = reasoner.complete(prompts::core_merge(a, b)).parsed;
            } catch (const llm::ProviderError& e) {
                report.skipped.push_back(a.name + "+" + b.name + ": " + e.what());
                continue;
            }
            std::string decision = parsed.at("decision").get<std::string>();
            std::string name = parsed.at("name").get<std::string>();
            std::string survivor_id, absorbed_id;
            if (decision == "reuse" && (name == a.name || name == b.name)) {
                survivor_id = (name == a.name) ? a.id : b.id;
                absorbed_id = (name == a.name) ? b.id : a.id;
            } else if (decision == "create") {
                // Replace both with a merged definition under the first id.
                CoreSkill merged;
                merged.id = a.id;
                merged.name = name;
                for (const auto& p : parsed.at("params"))
                    merged.params.push_back({p.at("name").get<std::string>(),
                                             p.at("description").get<std::string>()});
                merged.docstring = parsed.at("docstring").get<std::string>();
                merged.body = parsed.at("body").get<std::vector<std::string>>();
                merged.execution_skill_ids = a.execution_skill_ids;
                try {
                    merged.check_valid();
                } catch (const std::invalid_argument& e) {
                    report.skipped.push_back(a.name + "+" + b.name + ": " + e.what());
                    continue;
                }
                merged.embedding = embedder_->embed(merged.name + " " + merged.docstring);
                cores_.at(a.id) = merged;
                survivor_id = a.id;
                absorbed_id = b.id;
            } else {
                report.skipped.push_back(a.name + "+" + b.name + ": unusable consolidation reply");
                continue;
            }

            CoreSkill& survivor = cores_.at(survivor_id);
            const CoreSkill& victim = cores_.at(absorbed_id);
            for (const auto& eid : victim.execution_skill_ids)
                survivor.execution_skill_ids.insert(eid);
            for (auto& [mid, meta] : metas_) {
                if (meta.core_skill_ids.erase(absorbed_id)) meta.core_skill_ids.insert(survivor_id);
            }
            report.merged.push_back({survivor_id, absorbed_id, sim});
            absorbed.insert(absorbed_id);
            cores_.erase(absorbed_id);
            mutated = true;
        }
    }
    if (mutated) {
        bump_revision_locked();
        check_integrity_locked();
    }
    return report;
}

// ---------------------------------------------------------------------------
// persistence

nlohmann::json SkillStore::to_json_locked() const {
    nlohmann::json metas_json = nlohmann::json::array();
    for (const auto& [id, m] : metas_) metas_json.push_back(m.to_json());
    nlohmann::json cores_json = nlohmann::json::array();
    for (const auto& [id, c] : cores_) cores_json.push_back(c.to_json());
    nlohmann::json execs_json = nlohmann::json::array();
    for (const auto& [id, e] : executions_) execs_json.push_back(e.to_json());
    nlohmann::json digests = nlohmann::json::object();
    for (const auto& [k, v] : trajectory_digest_to_execution_) digests[k] = v;
    return {{"schema_version", kSchemaVersion},
            {"dimension", embedder_->dimension()},
            {"meta_skills", metas_json},
            {"core_skills", cores_json},
            {"execution_skills", execs_json},
            {"trajectory_digests", digests},
            {"revision", revision_},
            {"id_counter", id_counter_}};
}

nlohmann::json SkillStore::to_json() const {
    std::shared_lock lock(mutex_);
    return to_json_locked();
}

SkillStore SkillStore::from_json(const nlohmann::json& doc,
                                 std::shared_ptr<const embed::Embedder> embedder) {
    int version = doc.at("schema_version").get<int>();
    if (version != kSchemaVersion)
        throw StoreError("store schema-version mismatch: file has v" + std::to_string(version) +
                         ", this build supports v" + std::to_string(kSchemaVersion));
    std::size_t dimension = doc.at("dimension").get<std::size_t>();
    if (dimension != embedder->dimension())
        throw StoreError("store dimension " + std::to_string(dimension) +
                         " does not match embedder dimension " +
                         std::to_string(embedder->dimension()));

    SkillStore store(std::move(embedder));
    for (const auto& j : doc.at("meta_skills")) {
        MetaSkill m;
        m.id = j.at("id").get<std::string>();
        m.name = j.at("name").get<std::string>();
        m.description = j.at("description").get<std::string>();
        for (const auto& cid : j.at("core_skill_ids")) m.core_skill_ids.insert(cid.get<std::string>());
        m.embedding = embed::EmbeddingVector::from_unit(j.at("embedding").get<std::vector<double>>());
        store.metas_[m.id] = std::move(m);
    }
    for (const auto& j : doc.at("core_skills")) {
        CoreSkill c;
        c.id = j.at("id").get<std::string>();
        c.name = j.at("name").get<std::string>();
        for (const auto& p : j.at("params"))
            c.params.push_back({p.at("name").get<std::string>(), p.at("description").get<std::string>()});
        c.docstring = j.at("docstring").get<std::string>();
        c.body = j.at("body").get<std::vector<std::string>>();
        for (const auto& eid : j.at("execution_skill_ids"))
            c.execution_skill_ids.insert(eid.get<std::string>());
        c.embedding = embed::EmbeddingVector::from_unit(j.at("embedding").get<std::vector<double>>());
        store.cores_[c.id] = std::move(c);
    }
    for (const auto& j : doc.at("execution_skills")) {
        ExecutionSkill e;
        e.id = j.at("id").get<std::string>();
        e.goal_text = j.at("goal_text").get<std::string>();
        for (const auto& s : j.at("steps"))
            e.steps.push_back({s.at("observation_digest").get<std::string>(),
                               s.at("step_goal").get<std::string>(), s.at("action")});
        e.final_observation_digest = j.at("final_observation_digest").get<std::string>();
        e.source_trajectory_id = j.at("source_trajectory_id").get<std::string>();
        e.source = parse_source(j.at("source").get<std::string>());
        e.embedding = embed::EmbeddingVector::from_unit(j.at("embedding").get<std::vector<double>>());
        store.executions_[e.id] = std::move(e);
    }
    if (doc.contains("trajectory_digests"))
        for (const auto& [k, v] : doc.at("trajectory_digests").items())
            store.trajectory_digest_to_execution_[k] = v.get<std::string>();
    store.revision_ = doc.at("revision").get<std::uint64_t>();
    store.id_counter_ = doc.at("id_counter").get<std::uint64_t>();
    store.check_integrity_locked();
    return store;
}

void SkillStore::save(const std::string& path) const {
    nlohmann::json doc = to_json();
    std::ofstream out(path);
    if (!out) throw StoreError("cannot write store file: " + path);
    out << doc.dump(2) << "\n";
}

SkillStore SkillStore::load(const std::string& path,
                            std::shared_ptr<const embed::Embedder> embedder) {
    std::ifstream in(path);
    if (!in) throw StoreError("cannot read store file: " + path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw StoreError("store file is not valid JSON: " + std::string(e.what()));
    }
    return from_json(doc, std::move(embedder));
}

SkillStore SkillStore::filtered_by_source(bool keep_offline, bool keep_online) const {
    std::shared_lock lock(mutex_);
    SkillStore out(embedder_);
    for (const auto& [id, e] : executions_) {
        bool keep = (e.source == SkillSource::offline_corpus) ? keep_offline : keep_online;
        if (keep) out.executions_[id] = e;
    }
    for (const auto& [id, c] : cores_) {
        CoreSkill copy = c;
        for (auto it = copy.execution_skill_ids.begin(); it != copy.execution_skill_ids.end();) {
            if (!out.executions_.count(*it))
                it = copy.execution_skill_ids.erase(it);
            else
                ++it;
        }
        if (!copy.execution_skill_ids.empty()) out.cores_[id] = std::move(copy);
    }
    for (const auto& [id, m] : metas_) {
        MetaSkill copy = m;
        for (auto it = copy.core_skill_ids.begin(); it != copy.core_skill_ids.end();) {
            if (!out.cores_.count(*it))
                it = copy.core_skill_ids.erase(it);
            else
                ++it;
        }
        if (!copy.core_skill_ids.empty()) out.metas_[id] = std::move(copy);
    }
    for (const auto& [digest, eid] : trajectory_digest_to_execution_)
        if (out.executions_.count(eid)) out.trajectory_digest_to_execution_[digest] = eid;
    out.revision_ = revision_;
    out.id_counter_ = id_counter_;
    out.check_integrity_locked();
    return out;
}

SkillStore SkillStore::clone() const { return filtered_by_source(true, true); }

}  // namespace mirage::skills
