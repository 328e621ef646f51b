#pragma once
// ALCQHI class expressions as an immutable tree.

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace promptkg::owl {

struct Role {
    std::string name;  // non-empty
    bool inverted = false;
    bool operator==(const Role&) const = default;
};

enum class Kind { Atomic, Not, And, Or, Exists, Forall, MinCard, MaxCard, OneOf };

class ClassExpression;
using ExprPtr = std::shared_ptr<const ClassExpression>;

// Node fields by kind:
//   Atomic            name
//   Not               left
//   And, Or           left, right
//   Exists, Forall    role, left (filler)
//   MinCard, MaxCard  cardinality, role, left (filler)
//   OneOf             individuals (listed order kept; semantics is a set)
class ClassExpression {
public:
    Kind kind() const noexcept { return kind_; }
    const std::string& name() const noexcept { return name_; }
    const Role& role() const noexcept { return role_; }
    unsigned cardinality() const noexcept { return cardinality_; }
    const ClassExpression& operand() const { return *left_; }
    const ClassExpression& left() const { return *left_; }
    const ClassExpression& right() const { return *right_; }
    const ClassExpression& filler() const { return *left_; }
    const std::vector<std::string>& individuals() const noexcept { return individuals_; }

    bool is_binary() const noexcept { return kind_ == Kind::And || kind_ == Kind::Or; }
    bool is_restriction() const noexcept {
        return kind_ == Kind::Exists || kind_ == Kind::Forall || kind_ == Kind::MinCard || kind_ == Kind::MaxCard;
    }
    std::size_t depth() const;

    friend bool operator==(const ClassExpression& a, const ClassExpression& b);

    friend ExprPtr atomic(std::string name);
    friend ExprPtr negation(ExprPtr e);
    friend ExprPtr conjunction(ExprPtr a, ExprPtr b);
    friend ExprPtr disjunction(ExprPtr a, ExprPtr b);
    friend ExprPtr exists(Role r, ExprPtr filler);
    friend ExprPtr forall(Role r, ExprPtr filler);
    friend ExprPtr min_card(unsigned n, Role r, ExprPtr filler);
    friend ExprPtr max_card(unsigned n, Role r, ExprPtr filler);
    friend ExprPtr one_of(std::vector<std::string> individuals);

private:
    explicit ClassExpression(Kind k) : kind_(k) {}

    Kind kind_;
    std::string name_;
    Role role_;
    unsigned cardinality_ = 0;
    ExprPtr left_;
    ExprPtr right_;
    std::vector<std::string> individuals_;
};

// Constructors throw ContractViolation on empty names, null children or an
// empty individual list.
ExprPtr atomic(std::string name);
ExprPtr negation(ExprPtr e);
ExprPtr conjunction(ExprPtr a, ExprPtr b);
ExprPtr disjunction(ExprPtr a, ExprPtr b);
ExprPtr exists(Role r, ExprPtr filler);
ExprPtr forall(Role r, ExprPtr filler);
ExprPtr min_card(unsigned n, Role r, ExprPtr filler);
ExprPtr max_card(unsigned n, Role r, ExprPtr filler);
ExprPtr one_of(std::vector<std::string> individuals);

inline Role role(std::string name, bool inverted = false) { return Role{std::move(name), inverted}; }

enum class ConceptGroup {
    Atomic,
    Negation,
    Conjunction,
    Disjunction,
    Existential,
    Universal,
    AtLeast,
    AtMost,
    Nominals,
    Inverse
};

// All ten groups in table order.
const std::vector<ConceptGroup>& all_concept_groups();
std::string to_string(ConceptGroup g);

// Inverse if any role is inverted, else Nominals if any OneOf occurs, else
// the outermost constructor.
ConceptGroup classify_concept(const ClassExpression& e);

enum class Syntax { Manchester, Dl };
std::string to_string(Syntax s);
// "manchester" / "m" / "dl"; throws ContractViolation otherwise.
Syntax parse_syntax(std::string_view text);

}  // namespace promptkg::owl
