#include "promptkg/owl/expression.hpp"

#include <algorithm>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::owl {

namespace {

ExprPtr need(ExprPtr e) {
    if (!e) throw ContractViolation("class expression child is null");
    return e;
}

Role need(Role r) {
    if (r.name.empty()) throw ContractViolation("role name is empty");
    return r;
}

}  // namespace

std::size_t ClassExpression::depth() const {
    std::size_t d = 0;
    if (left_) d = std::max(d, left_->depth());
    if (right_) d = std::max(d, right_->depth());
    return d + 1;
}

bool operator==(const ClassExpression& a, const ClassExpression& b) {
    if (a.kind_ != b.kind_) return false;
    switch (a.kind_) {
        case Kind::Atomic: return a.name_ == b.name_;
        case Kind::Not: return *a.left_ == *b.left_;
        case Kind::And:
        case Kind::Or: return *a.left_ == *b.left_ && *a.right_ == *b.right_;
        case Kind::Exists:
        case Kind::Forall: return a.role_ == b.role_ && *a.left_ == *b.left_;
        case Kind::MinCard:
        case Kind::MaxCard:
            return a.cardinality_ == b.cardinality_ && a.role_ == b.role_ && *a.left_ == *b.left_;
        case Kind::OneOf: return a.individuals_ == b.individuals_;
    }
    return false;
}

ExprPtr atomic(std::string name) {
    if (name.empty()) throw ContractViolation("atomic class name is empty");
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::Atomic));
    e->name_ = std::move(name);
    return e;
}

ExprPtr negation(ExprPtr operand) {
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::Not));
    e->left_ = need(std::move(operand));
    return e;
}

ExprPtr conjunction(ExprPtr a, ExprPtr b) {
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::And));
    e->left_ = need(std::move(a));
    e->right_ = need(std::move(b));
    return e;
}

ExprPtr disjunction(ExprPtr a, ExprPtr b) {
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::Or));
    e->left_ = need(std::move(a));
    e->right_ = need(std::move(b));
    return e;
}

ExprPtr exists(Role r, ExprPtr filler) {
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::Exists));
    e->role_ = need(std::move(r));
    e->left_ = need(std::move(filler));
    return e;
}

ExprPtr forall(Role r, ExprPtr filler) {
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::Forall));
    e->role_ = need(std::move(r));
    e->left_ = need(std::move(filler));
    return e;
}

ExprPtr min_card(unsigned n, Role r, ExprPtr filler) {
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::MinCard));
    e->cardinality_ = n;
    e->role_ = need(std::move(r));
    e->left_ = need(std::move(filler));
    return e;
}

ExprPtr max_card(unsigned n, Role r, ExprPtr filler) {
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::MaxCard));
    e->cardinality_ = n;
    e->role_ = need(std::move(r));
    e->left_ = need(std::move(filler));
    return e;
}

ExprPtr one_of(std::vector<std::string> individuals) {
    if (individuals.empty()) throw ContractViolation("nominal list is empty");
    for (const auto& i : individuals)
        if (i.empty()) throw ContractViolation("individual name is empty");
    auto e = std::shared_ptr<ClassExpression>(new ClassExpression(Kind::OneOf));
    e->individuals_ = std::move(individuals);
    return e;
}

const std::vector<ConceptGroup>& all_concept_groups() {
    static const std::vector<ConceptGroup> groups{
        ConceptGroup::Atomic,      ConceptGroup::Negation,  ConceptGroup::Conjunction, ConceptGroup::Disjunction,
        ConceptGroup::Existential, ConceptGroup::Universal, ConceptGroup::AtLeast,     ConceptGroup::AtMost,
        ConceptGroup::Nominals,    ConceptGroup::Inverse};
    return groups;
}

std::string to_string(ConceptGroup g) {
    switch (g) {
        case ConceptGroup::Atomic: return "Atomic";
        case ConceptGroup::Negation: return "Negation";
        case ConceptGroup::Conjunction: return "Conjunction";
        case ConceptGroup::Disjunction: return "Disjunction";
        case ConceptGroup::Existential: return "Existential";
        case ConceptGroup::Universal: return "Universal";
        case ConceptGroup::AtLeast: return "At least restriction";
        case ConceptGroup::AtMost: return "At most restriction";
        case ConceptGroup::Nominals: return "Nominals";
        case ConceptGroup::Inverse: return "Inverse";
    }
    return "?";
}

namespace {

template <class Pred>
bool any_node(const ClassExpression& e, Pred pred) {
    if (pred(e)) return true;
    switch (e.kind()) {
        case Kind::Atomic:
        case Kind::OneOf: return false;
        case Kind::And:
        case Kind::Or: return any_node(e.left(), pred) || any_node(e.right(), pred);
        default: return any_node(e.operand(), pred);
    }
}

}  // namespace

ConceptGroup classify_concept(const ClassExpression& e) {
    if (any_node(e, [](const ClassExpression& n) { return n.is_restriction() && n.role().inverted; }))
        return ConceptGroup::Inverse;
    if (any_node(e, [](const ClassExpression& n) { return n.kind() == Kind::OneOf; })) return ConceptGroup::Nominals;
    switch (e.kind()) {
        case Kind::Atomic: return ConceptGroup::Atomic;
        case Kind::Not: return ConceptGroup::Negation;
        case Kind::And: return ConceptGroup::Conjunction;
        case Kind::Or: return ConceptGroup::Disjunction;
        case Kind::Exists: return ConceptGroup::Existential;
        case Kind::Forall: return ConceptGroup::Universal;
        case Kind::MinCard: return ConceptGroup::AtLeast;
        case Kind::MaxCard: return ConceptGroup::AtMost;
        case Kind::OneOf: return ConceptGroup::Nominals;
    }
    return ConceptGroup::Atomic;
}

std::string to_string(Syntax s) { return s == Syntax::Manchester ? "manchester" : "dl"; }

Syntax parse_syntax(std::string_view text) {
    const auto t = to_lower(trim(text));
    if (t == "manchester" || t == "m") return Syntax::Manchester;
    if (t == "dl") return Syntax::Dl;
    throw ContractViolation("unknown syntax '" + std::string(text) + "' (expected manchester or dl)");
}

}  // namespace promptkg::owl
