#include "promptkg/kg/graph.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <set>

#include "promptkg/common/error.hpp"

namespace promptkg::kg {

std::size_t TripleHash::operator()(const Triple& t) const noexcept {
    std::uint64_t h = (std::uint64_t{t.subject.value} << 32) ^ t.relation.value;
    std::uint64_t o = std::holds_alternative<EntityId>(t.object)
                          ? std::get<EntityId>(t.object).value
                          : std::bit_cast<std::uint64_t>(std::get<double>(t.object)) ^ 0x8000000000000001ULL;
    h ^= o + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return static_cast<std::size_t>(h);
}

EntityId Vocabulary::intern_entity(std::string_view name) {
    auto [it, inserted] = entity_index_.try_emplace(std::string(name), static_cast<std::uint32_t>(entities_.size()));
    if (inserted) entities_.push_back({std::string(name), std::nullopt});
    return EntityId{it->second};
}

RelationId Vocabulary::intern_relation(std::string_view name, RelationKind kind) {
    auto [it, inserted] = relation_index_.try_emplace(std::string(name), static_cast<std::uint32_t>(relations_.size()));
    if (inserted) {
        relations_.push_back({std::string(name), std::nullopt, kind});
    } else if (relations_[it->second].kind != kind) {
        throw ParseError("relation '" + std::string(name) + "' used both with entity and literal objects");
    }
    return RelationId{it->second};
}

std::optional<EntityId> Vocabulary::find_entity(std::string_view name) const {
    auto it = entity_index_.find(std::string(name));
    if (it == entity_index_.end()) return std::nullopt;
    return EntityId{it->second};
}

std::optional<RelationId> Vocabulary::find_relation(std::string_view name) const {
    auto it = relation_index_.find(std::string(name));
    if (it == relation_index_.end()) return std::nullopt;
    return RelationId{it->second};
}

const std::string& Vocabulary::entity_name(EntityId id) const { return entities_.at(id.value).name; }
const std::string& Vocabulary::relation_name(RelationId id) const { return relations_.at(id.value).name; }
const std::optional<std::string>& Vocabulary::entity_label(EntityId id) const { return entities_.at(id.value).label; }
const std::optional<std::string>& Vocabulary::relation_label(RelationId id) const {
    return relations_.at(id.value).label;
}
RelationKind Vocabulary::relation_kind(RelationId id) const { return relations_.at(id.value).kind; }

const std::string& Vocabulary::entity_text(EntityId id) const {
    const auto& e = entities_.at(id.value);
    return e.label ? *e.label : e.name;
}

const std::string& Vocabulary::relation_text(RelationId id) const {
    const auto& r = relations_.at(id.value);
    return r.label ? *r.label : r.name;
}

void Vocabulary::set_entity_label(EntityId id, std::string label) {
    if (label.empty()) throw ContractViolation("entity label must be non-empty");
    entities_.at(id.value).label = std::move(label);
}

void Vocabulary::set_relation_label(RelationId id, std::string label) {
    if (label.empty()) throw ContractViolation("relation label must be non-empty");
    relations_.at(id.value).label = std::move(label);
}

KnowledgeGraph::KnowledgeGraph() : vocab_(std::make_shared<Vocabulary>()) {}

KnowledgeGraph::KnowledgeGraph(std::shared_ptr<const Vocabulary> vocab, std::vector<Triple> triples, Split split)
    : vocab_(std::move(vocab)), split_(split) {
    if (!vocab_) throw ContractViolation("graph requires a vocabulary");
    triples_.reserve(triples.size());
    lookup_.reserve(triples.size());
    for (auto& t : triples) {
        if (t.subject.value >= vocab_->entity_count() || t.relation.value >= vocab_->relation_count() ||
            (!t.is_literal() && t.object_entity().value >= vocab_->entity_count()))
            throw ContractViolation("triple references an id outside the vocabulary");
        const bool literal_relation = vocab_->relation_kind(t.relation) == RelationKind::DataProperty;
        if (literal_relation != t.is_literal())
            throw ContractViolation("object kind does not match relation kind for '" +
                                    vocab_->relation_name(t.relation) + "'");
        if (!lookup_.insert(t).second) continue;
        const std::size_t pos = triples_.size();
        triples_.push_back(t);
        by_subject_[t.subject.value].push_back(pos);
        by_relation_[t.relation.value].push_back(pos);
        sp_to_objects_[{t.subject.value, t.relation.value}].push_back(t.object);
    }
}

std::span<const std::size_t> KnowledgeGraph::by_subject(EntityId s) const {
    auto it = by_subject_.find(s.value);
    if (it == by_subject_.end()) return {};
    return it->second;
}

std::span<const std::size_t> KnowledgeGraph::by_relation(RelationId r) const {
    auto it = by_relation_.find(r.value);
    if (it == by_relation_.end()) return {};
    return it->second;
}

std::span<const Object> KnowledgeGraph::objects(EntityId s, RelationId r) const {
    auto it = sp_to_objects_.find({s.value, r.value});
    if (it == sp_to_objects_.end()) return {};
    return it->second;
}

std::vector<EntityId> KnowledgeGraph::entities() const {
    std::set<EntityId> seen;
    for (const auto& t : triples_) {
        seen.insert(t.subject);
        if (!t.is_literal()) seen.insert(t.object_entity());
    }
    return {seen.begin(), seen.end()};
}

std::vector<RelationId> KnowledgeGraph::relations() const {
    std::vector<RelationId> out;
    out.reserve(by_relation_.size());
    for (const auto& [r, _] : by_relation_) out.push_back(RelationId{r});
    std::sort(out.begin(), out.end());
    return out;
}

KnowledgeGraph KnowledgeGraph::with_vocabulary(std::shared_ptr<const Vocabulary> vocab) const {
    KnowledgeGraph copy = *this;
    copy.vocab_ = std::move(vocab);
    return copy;
}

std::vector<KvsAllGroup> kvsall_groups(const KnowledgeGraph& g) {
    std::vector<KvsAllGroup> out;
    out.reserve(g.sp_index().size());
    for (const auto& [key, objs] : g.sp_index())
        out.push_back({EntityId{key.first}, RelationId{key.second}, objs});
    return out;
}

std::vector<Triple> neighborhood(const KnowledgeGraph& g, EntityId s, std::optional<RelationId> exclude) {
    std::vector<Triple> out;
    for (std::size_t pos : g.by_subject(s)) {
        const Triple& t = g.triples()[pos];
        if (exclude && t.relation == *exclude) continue;
        out.push_back(t);
    }
    return out;
}

KnowledgeGraph merge(std::span<const KnowledgeGraph* const> graphs, Split split) {
    if (graphs.empty()) return KnowledgeGraph{};
    std::vector<Triple> all;
    for (const KnowledgeGraph* g : graphs) {
        if (g->vocab_ptr() != graphs.front()->vocab_ptr())
            throw ContractViolation("merge requires graphs over one vocabulary");
        all.insert(all.end(), g->triples().begin(), g->triples().end());
    }
    return KnowledgeGraph(graphs.front()->vocab_ptr(), std::move(all), split);
}

std::string format_number(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string render_object(const Vocabulary& v, const Object& o, bool use_labels) {
    if (const auto* e = std::get_if<EntityId>(&o)) return use_labels ? v.entity_text(*e) : v.entity_name(*e);
    return format_number(std::get<double>(o));
}

}  // namespace promptkg::kg
