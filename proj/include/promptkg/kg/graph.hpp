#pragma once
// Indexed triple store over entities, relations and numeric literals.
//
// Ids are interned integers; the string tables live in a Vocabulary that is
// shared by the train/valid/test splits of one dataset so ids agree across
// splits. A KnowledgeGraph is immutable once constructed.

#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace promptkg::kg {

struct EntityId {
    std::uint32_t value = 0;
    auto operator<=>(const EntityId&) const = default;
};

struct RelationId {
    std::uint32_t value = 0;
    auto operator<=>(const RelationId&) const = default;
};

enum class RelationKind { ObjectProperty, DataProperty };
enum class Split { Train, Valid, Test, Other };

// Either an entity or a numeric literal.
using Object = std::variant<EntityId, double>;

struct Triple {
    EntityId subject;
    RelationId relation;
    Object object;

    bool is_literal() const noexcept { return std::holds_alternative<double>(object); }
    EntityId object_entity() const { return std::get<EntityId>(object); }
    double object_value() const { return std::get<double>(object); }
    bool operator==(const Triple&) const = default;
};

struct TripleHash {
    std::size_t operator()(const Triple& t) const noexcept;
};

class Vocabulary {
public:
    EntityId intern_entity(std::string_view name);
    // Throws ParseError if the relation was already interned with another kind.
    RelationId intern_relation(std::string_view name, RelationKind kind);

    std::optional<EntityId> find_entity(std::string_view name) const;
    std::optional<RelationId> find_relation(std::string_view name) const;

    const std::string& entity_name(EntityId id) const;
    const std::string& relation_name(RelationId id) const;
    const std::optional<std::string>& entity_label(EntityId id) const;
    const std::optional<std::string>& relation_label(RelationId id) const;
    RelationKind relation_kind(RelationId id) const;

    // Label when present, otherwise the raw id string.
    const std::string& entity_text(EntityId id) const;
    const std::string& relation_text(RelationId id) const;

    void set_entity_label(EntityId id, std::string label);
    void set_relation_label(RelationId id, std::string label);

    std::size_t entity_count() const noexcept { return entities_.size(); }
    std::size_t relation_count() const noexcept { return relations_.size(); }

private:
    struct EntityEntry {
        std::string name;
        std::optional<std::string> label;
    };
    struct RelationEntry {
        std::string name;
        std::optional<std::string> label;
        RelationKind kind;
    };
    std::vector<EntityEntry> entities_;
    std::vector<RelationEntry> relations_;
    std::unordered_map<std::string, std::uint32_t> entity_index_;
    std::unordered_map<std::string, std::uint32_t> relation_index_;
};

class KnowledgeGraph {
public:
    KnowledgeGraph();
    // Duplicates in `triples` are dropped, first occurrence wins.
    KnowledgeGraph(std::shared_ptr<const Vocabulary> vocab, std::vector<Triple> triples,
                   Split split = Split::Other);

    const Vocabulary& vocab() const noexcept { return *vocab_; }
    const std::shared_ptr<const Vocabulary>& vocab_ptr() const noexcept { return vocab_; }
    Split split() const noexcept { return split_; }

    std::span<const Triple> triples() const noexcept { return triples_; }
    std::size_t size() const noexcept { return triples_.size(); }
    bool empty() const noexcept { return triples_.empty(); }
    bool contains(const Triple& t) const { return lookup_.contains(t); }
    bool contains(EntityId s, RelationId r, EntityId o) const { return contains(Triple{s, r, o}); }

    // Positions into triples().
    std::span<const std::size_t> by_subject(EntityId s) const;
    std::span<const std::size_t> by_relation(RelationId r) const;
    // Objects of (s, r) in insertion order; empty span when the pair is absent.
    std::span<const Object> objects(EntityId s, RelationId r) const;
    const std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<Object>>& sp_index() const noexcept {
        return sp_to_objects_;
    }

    // Entities occurring as subject or entity object, ascending by id.
    std::vector<EntityId> entities() const;
    // Relations occurring in the graph, ascending by id.
    std::vector<RelationId> relations() const;

    // Same triples bound to another vocabulary (ids must be compatible).
    KnowledgeGraph with_vocabulary(std::shared_ptr<const Vocabulary> vocab) const;

private:
    std::shared_ptr<const Vocabulary> vocab_;
    Split split_ = Split::Other;
    std::vector<Triple> triples_;
    std::unordered_set<Triple, TripleHash> lookup_;
    std::unordered_map<std::uint32_t, std::vector<std::size_t>> by_subject_;
    std::unordered_map<std::uint32_t, std::vector<std::size_t>> by_relation_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<Object>> sp_to_objects_;
};

// KvsAll grouping: one entry per distinct (subject, relation).
struct KvsAllGroup {
    EntityId subject;
    RelationId relation;
    std::vector<Object> objects;
};

// Ordered by (subject id, relation id). The groups partition the triple set.
std::vector<KvsAllGroup> kvsall_groups(const KnowledgeGraph& g);

// Triples with subject `s`, skipping relation `exclude` when given. Unknown
// entities yield an empty result.
std::vector<Triple> neighborhood(const KnowledgeGraph& g, EntityId s,
                                 std::optional<RelationId> exclude = std::nullopt);

// Union of several graphs over one vocabulary, in argument order.
KnowledgeGraph merge(std::span<const KnowledgeGraph* const> graphs, Split split = Split::Other);

std::string render_object(const Vocabulary& v, const Object& o, bool use_labels);
std::string format_number(double value);

}  // namespace promptkg::kg
