#pragma once
// Closed-world instance retrieval over a finite ABox.
//
// The domain is the set of individuals: entities that occur as a subject, or
// as the object of a non-type triple. Class membership is read from triples
// whose relation is a type relation. Everything not asserted is false, so
// Not is the complement within the domain and Forall holds vacuously for
// individuals without successors.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "promptkg/kg/graph.hpp"
#include "promptkg/owl/expression.hpp"

namespace promptkg::owl {

using EntitySet = std::set<kg::EntityId>;

struct ReasonerOptions {
    std::vector<std::string> type_relations{"type", "rdf:type", "http://www.w3.org/1999/02/22-rdf-syntax-ns#type"};
    // (sub, super) pairs; an edge of `sub` also counts for every transitive super-role.
    std::vector<std::pair<std::string, std::string>> subroles;
};

// Reads "sub<TAB>super" lines ('#' comments, blank lines skipped).
std::vector<std::pair<std::string, std::string>> parse_subrole_table(std::string_view text);

class ClosedWorldReasoner {
public:
    explicit ClosedWorldReasoner(const kg::KnowledgeGraph& g, ReasonerOptions opts = {});

    // Ascending by id.
    const std::vector<kg::EntityId>& individuals() const noexcept { return domain_; }
    const std::vector<std::string>& class_names() const noexcept { return class_names_; }
    const std::vector<std::string>& role_names() const noexcept { return role_names_; }
    bool is_type_relation(kg::RelationId r) const;

    // Unknown class, role or individual names contribute nothing; each adds
    // one warning when `warnings` is given.
    EntitySet retrieve(const ClassExpression& e, std::vector<std::string>* warnings = nullptr) const;

    // Exact entity name, then the name without namespace.
    std::optional<kg::EntityId> find_individual(std::string_view name) const;

private:
    using Mask = std::vector<char>;
    struct Edges {
        std::vector<std::vector<std::size_t>> forward;   // distinct successors per domain index
        std::vector<std::vector<std::size_t>> backward;  // distinct predecessors
    };

    Mask eval(const ClassExpression& e, std::vector<std::string>* warnings) const;
    const Edges* find_role(const std::string& name) const;

    const kg::KnowledgeGraph* graph_;
    std::set<std::uint32_t> type_relations_;
    std::vector<kg::EntityId> domain_;
    std::unordered_map<std::uint32_t, std::size_t> index_;      // entity id -> domain position
    std::map<std::string, std::size_t> individual_by_name_;      // full and local names
    std::map<std::string, Mask> classes_;                        // full and local names
    std::map<std::string, std::shared_ptr<Edges>> roles_;        // full and local names
    std::vector<std::string> class_names_;
    std::vector<std::string> role_names_;
};

EntitySet oracle_retrieve(const kg::KnowledgeGraph& g, const ClassExpression& e, const ReasonerOptions& opts = {},
                          std::vector<std::string>* warnings = nullptr);

}  // namespace promptkg::owl
