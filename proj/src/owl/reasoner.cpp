#include "promptkg/owl/reasoner.hpp"

#include <algorithm>
#include <deque>
#include <memory>
#include <set>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/owl/render.hpp"

namespace promptkg::owl {

std::vector<std::pair<std::string, std::string>> parse_subrole_table(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto parts = split_whitespace(line);
        if (parts.size() != 2) throw ParseError("subrole table: expected 'sub<TAB>super'", line_no);
        out.emplace_back(parts[0], parts[1]);
    }
    return out;
}

ClosedWorldReasoner::ClosedWorldReasoner(const kg::KnowledgeGraph& g, ReasonerOptions opts) : graph_(&g) {
    const auto& v = g.vocab();
    const std::set<std::string> type_names(opts.type_relations.begin(), opts.type_relations.end());
    for (auto r : g.relations()) {
        std::string name = v.relation_name(r);
        if (name.size() >= 2 && name.front() == '<' && name.back() == '>') name = name.substr(1, name.size() - 2);
        if (type_names.contains(name)) type_relations_.insert(r.value);
    }

    std::set<std::uint32_t> members;
    for (const auto& t : g.triples()) {
        if (t.is_literal()) continue;
        members.insert(t.subject.value);
        if (!type_relations_.contains(t.relation.value)) members.insert(t.object_entity().value);
    }
    for (auto id : members) {
        index_.emplace(id, domain_.size());
        domain_.push_back(kg::EntityId{id});
    }
    const std::size_t n = domain_.size();
    for (std::size_t i = 0; i < n; ++i) individual_by_name_.emplace(v.entity_name(domain_[i]), i);
    for (std::size_t i = 0; i < n; ++i) individual_by_name_.emplace(local_name(v.entity_name(domain_[i])), i);

    // super-role closure over role names
    std::map<std::string, std::vector<std::string>> supers;
    for (const auto& [sub, sup] : opts.subroles) supers[sub].push_back(sup);
    auto closure = [&](const std::string& r) {
        std::set<std::string> seen{r};
        std::deque<std::string> todo{r};
        while (!todo.empty()) {
            const auto cur = todo.front();
            todo.pop_front();
            if (auto it = supers.find(cur); it != supers.end())
                for (const auto& s : it->second)
                    if (seen.insert(s).second) todo.push_back(s);
        }
        return seen;
    };

    std::map<std::string, std::shared_ptr<Edges>> by_full;
    auto edges_for = [&](const std::string& name) -> Edges& {
        auto& slot = by_full[name];
        if (!slot) {
            slot = std::make_shared<Edges>();
            slot->forward.resize(n);
            slot->backward.resize(n);
        }
        return *slot;
    };
    std::map<std::string, Mask> class_full;
    for (const auto& t : g.triples()) {
        if (t.is_literal()) continue;
        const auto s = index_.at(t.subject.value);
        const auto& rname = v.relation_name(t.relation);
        if (type_relations_.contains(t.relation.value)) {
            auto& mask = class_full[v.entity_name(t.object_entity())];
            mask.resize(n, 0);
            mask[s] = 1;
            continue;
        }
        const auto o = index_.at(t.object_entity().value);
        for (const auto& r : closure(rname)) {
            auto& e = edges_for(r);
            e.forward[s].push_back(o);
            e.backward[o].push_back(s);
        }
    }
    for (const auto& [sub, sup] : opts.subroles) {
        edges_for(sub);
        edges_for(sup);
    }
    for (auto& [name, e] : by_full) {
        for (auto* lists : {&e->forward, &e->backward})
            for (auto& l : *lists) {
                std::sort(l.begin(), l.end());
                l.erase(std::unique(l.begin(), l.end()), l.end());
            }
        role_names_.push_back(name);
    }
    for (const auto& [name, m] : class_full) class_names_.push_back(name);

    for (const auto& [name, e] : by_full) roles_.emplace(name, e);
    for (const auto& [name, e] : by_full) roles_.emplace(local_name(name), e);
    for (const auto& [name, m] : class_full) classes_.emplace(name, m);
    for (const auto& [name, m] : class_full) classes_.emplace(local_name(name), m);
}

bool ClosedWorldReasoner::is_type_relation(kg::RelationId r) const { return type_relations_.contains(r.value); }

std::optional<kg::EntityId> ClosedWorldReasoner::find_individual(std::string_view name) const {
    auto it = individual_by_name_.find(std::string(name));
    if (it == individual_by_name_.end()) it = individual_by_name_.find(local_name(name));
    if (it == individual_by_name_.end()) return std::nullopt;
    return domain_[it->second];
}

const ClosedWorldReasoner::Edges* ClosedWorldReasoner::find_role(const std::string& name) const {
    auto it = roles_.find(name);
    if (it == roles_.end()) it = roles_.find(local_name(name));
    return it == roles_.end() ? nullptr : it->second.get();
}

ClosedWorldReasoner::Mask ClosedWorldReasoner::eval(const ClassExpression& e, std::vector<std::string>* warnings) const {
    const std::size_t n = domain_.size();
    Mask out(n, 0);
    switch (e.kind()) {
        case Kind::Atomic: {
            auto it = classes_.find(e.name());
            if (it == classes_.end()) it = classes_.find(local_name(e.name()));
            if (it == classes_.end()) {
                if (warnings) warnings->push_back("unknown class '" + e.name() + "'");
                return out;
            }
            return it->second;
        }
        case Kind::Not: {
            const auto inner = eval(e.operand(), warnings);
            for (std::size_t i = 0; i < n; ++i) out[i] = !inner[i];
            return out;
        }
        case Kind::And:
        case Kind::Or: {
            const auto a = eval(e.left(), warnings);
            const auto b = eval(e.right(), warnings);
            const bool both = e.kind() == Kind::And;
            for (std::size_t i = 0; i < n; ++i) out[i] = both ? (a[i] && b[i]) : (a[i] || b[i]);
            return out;
        }
        case Kind::Exists:
        case Kind::Forall:
        case Kind::MinCard:
        case Kind::MaxCard: {
            const auto filler = eval(e.filler(), warnings);
            const Edges* edges = find_role(e.role().name);
            if (!edges && warnings) warnings->push_back("unknown role '" + e.role().name + "'");
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t total = 0, in_filler = 0;
                if (edges) {
                    const auto& succ = e.role().inverted ? edges->backward[i] : edges->forward[i];
                    total = succ.size();
                    for (auto j : succ) in_filler += filler[j] ? 1 : 0;
                }
                switch (e.kind()) {
                    case Kind::Exists: out[i] = in_filler >= 1; break;
                    case Kind::Forall: out[i] = in_filler == total; break;
                    case Kind::MinCard: out[i] = in_filler >= e.cardinality(); break;
                    default: out[i] = in_filler <= e.cardinality(); break;
                }
            }
            return out;
        }
        case Kind::OneOf:
            for (const auto& name : e.individuals()) {
                auto it = individual_by_name_.find(name);
                if (it == individual_by_name_.end()) it = individual_by_name_.find(local_name(name));
                if (it == individual_by_name_.end()) {
                    if (warnings) warnings->push_back("unknown individual '" + name + "'");
                    continue;
                }
                out[it->second] = 1;
            }
            return out;
    }
    return out;
}

EntitySet ClosedWorldReasoner::retrieve(const ClassExpression& e, std::vector<std::string>* warnings) const {
    const auto mask = eval(e, warnings);
    EntitySet out;
    for (std::size_t i = 0; i < domain_.size(); ++i)
        if (mask[i]) out.insert(domain_[i]);
    return out;
}

EntitySet oracle_retrieve(const kg::KnowledgeGraph& g, const ClassExpression& e, const ReasonerOptions& opts,
                          std::vector<std::string>* warnings) {
    return ClosedWorldReasoner(g, opts).retrieve(e, warnings);
}

}  // namespace promptkg::owl
