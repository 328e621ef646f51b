#include "promptkg/owl/render.hpp"

namespace promptkg::owl {

std::string qualify(std::string_view name, std::string_view prefix) {
    if (prefix.empty()) return std::string(name);
    if (prefix.find("://") != std::string_view::npos) return "<" + std::string(prefix) + std::string(name) + ">";
    return std::string(prefix) + std::string(name);
}

std::string local_name(std::string_view name) {
    if (name.size() >= 2 && name.front() == '<' && name.back() == '>') name = name.substr(1, name.size() - 2);
    for (char sep : {'#', '/', ':'}) {
        const auto at = name.rfind(sep);
        if (at != std::string_view::npos && at + 1 < name.size()) return std::string(name.substr(at + 1));
    }
    return std::string(name);
}

namespace {

// 1 = or, 2 = and, 3 = everything that binds tighter
int level(const ClassExpression& e) {
    if (e.kind() == Kind::Or) return 1;
    if (e.kind() == Kind::And) return 2;
    return 3;
}

class Renderer {
public:
    Renderer(Syntax syntax, std::string_view prefix) : m_(syntax == Syntax::Manchester), prefix_(prefix) {}

    void emit(const ClassExpression& e) {
        switch (e.kind()) {
            case Kind::Atomic: out += qualify(e.name(), prefix_); break;
            case Kind::Not:
                out += m_ ? "not " : "¬";
                child(e.operand(), 3);
                break;
            case Kind::And:
            case Kind::Or: {
                const int lv = level(e);
                child(e.left(), lv);
                if (e.kind() == Kind::And)
                    out += m_ ? " and " : " ⊓ ";
                else
                    out += m_ ? " or " : " ⊔ ";
                child(e.right(), lv + 1);
                break;
            }
            case Kind::Exists:
            case Kind::Forall:
                if (m_) {
                    role(e.role());
                    out += e.kind() == Kind::Exists ? " some " : " only ";
                } else {
                    out += e.kind() == Kind::Exists ? "∃" : "∀";
                    role(e.role());
                    out += ".";
                }
                child(e.filler(), 3);
                break;
            case Kind::MinCard:
            case Kind::MaxCard:
                if (m_) {
                    role(e.role());
                    out += (e.kind() == Kind::MinCard ? " min " : " max ") + std::to_string(e.cardinality()) + " ";
                } else {
                    out += (e.kind() == Kind::MinCard ? "≥ " : "≤ ") + std::to_string(e.cardinality()) + " ";
                    role(e.role());
                    out += ".";
                }
                child(e.filler(), 3);
                break;
            case Kind::OneOf:
                out += "{";
                for (std::size_t i = 0; i < e.individuals().size(); ++i)
                    out += (i ? ", " : "") + qualify(e.individuals()[i], prefix_);
                out += "}";
                break;
        }
    }

    std::string out;

private:
    void child(const ClassExpression& e, int min_level) {
        if (level(e) < min_level) {
            out += "(";
            emit(e);
            out += ")";
        } else {
            emit(e);
        }
    }

    void role(const Role& r) {
        if (m_) {
            if (r.inverted) out += "inverse ";
            out += qualify(r.name, prefix_);
        } else {
            out += qualify(r.name, prefix_);
            if (r.inverted) out += "⁻";
        }
    }

    bool m_;
    std::string_view prefix_;
};

}  // namespace

std::string render(const ClassExpression& e, Syntax syntax, std::string_view prefix) {
    Renderer r(syntax, prefix);
    r.emit(e);
    return r.out;
}

}  // namespace promptkg::owl
