#include "promptkg/owl/parser.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <optional>
#include <set>

namespace promptkg::owl {

namespace {

std::string join_expected(const std::vector<std::string>& expected) {
    std::string out;
    for (std::size_t i = 0; i < expected.size(); ++i) out += (i ? ", " : "") + expected[i];
    return out;
}

enum class Tok { Name, Int, Sym, End };

struct Token {
    Tok type = Tok::End;
    std::string text;  // names are prefix-stripped; symbols keep their spelling
    std::size_t pos = 0;
    bool iri = false;  // <...> names are never keywords
};

constexpr std::string_view kDlSymbols[] = {"¬", "⊓", "⊔", "∃", "∀", "≥", "≤", "⁻"};

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':';
}

std::string strip_prefix(std::string name, const std::string& prefix) {
    if (!prefix.empty() && name.size() > prefix.size() && name.compare(0, prefix.size(), prefix) == 0)
        return name.substr(prefix.size());
    return name;
}

std::vector<Token> tokenize(std::string_view text, const ParseOptions& opts) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        Token t;
        t.pos = i;
        if (c == '<') {
            const auto close = text.find('>', i + 1);
            if (close == std::string_view::npos || close == i + 1)
                throw SyntaxError(i, {"IRI"}, std::string(text.substr(i, 1)));
            t.type = Tok::Name;
            t.iri = true;
            t.text = strip_prefix(std::string(text.substr(i + 1, close - i - 1)), opts.prefix);
            i = close + 1;
        } else if (name_start(c)) {
            std::size_t j = i + 1;
            while (j < text.size() && name_char(text[j])) ++j;
            t.type = Tok::Name;
            t.text = strip_prefix(std::string(text.substr(i, j - i)), opts.prefix);
            i = j;
        } else if (std::isdigit(static_cast<unsigned char>(c))) {
            std::size_t j = i;
            while (j < text.size() && std::isdigit(static_cast<unsigned char>(text[j]))) ++j;
            t.type = Tok::Int;
            t.text = std::string(text.substr(i, j - i));
            i = j;
        } else if (c == '(' || c == ')' || c == '{' || c == '}' || c == ',' || c == '.') {
            t.type = Tok::Sym;
            t.text = std::string(1, c);
            ++i;
        } else {
            bool matched = false;
            for (auto sym : kDlSymbols) {
                if (text.substr(i, sym.size()) == sym) {
                    t.type = Tok::Sym;
                    t.text = std::string(sym);
                    i += sym.size();
                    matched = true;
                    break;
                }
            }
            if (!matched) {
                std::size_t len = 1;  // report a whole UTF-8 sequence
                while (i + len < text.size() && (static_cast<unsigned char>(text[i + len]) & 0xC0) == 0x80) ++len;
                throw SyntaxError(i, {"expression"}, std::string(text.substr(i, len)));
            }
        }
        out.push_back(std::move(t));
    }
    out.push_back(Token{Tok::End, "", text.size(), false});
    return out;
}

const std::set<std::string> kManchesterKeywords{"not", "and", "or", "some", "only", "min", "max", "inverse"};

class Parser {
public:
    Parser(std::vector<Token> tokens, Syntax syntax) : toks_(std::move(tokens)), syntax_(syntax) {}

    ExprPtr parse() {
        auto e = parse_or();
        if (peek().type != Tok::End) fail(syntax_ == Syntax::Manchester ? std::vector<std::string>{"'and'", "'or'", "end of input"}
                                                                       : std::vector<std::string>{"'⊓'", "'⊔'", "end of input"});
        return e;
    }

private:
    const Token& peek(std::size_t ahead = 0) const { return toks_[std::min(pos_ + ahead, toks_.size() - 1)]; }
    const Token& next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    bool is_keyword(const Token& t, std::string_view kw) const {
        return syntax_ == Syntax::Manchester && t.type == Tok::Name && !t.iri && t.text == kw;
    }
    bool is_sym(const Token& t, std::string_view s) const { return t.type == Tok::Sym && t.text == s; }
    bool is_plain_name(const Token& t) const {
        if (t.type != Tok::Name) return false;
        return syntax_ == Syntax::Dl || t.iri || !kManchesterKeywords.contains(t.text);
    }

    [[noreturn]] void fail(std::vector<std::string> expected) const {
        const auto& t = peek();
        throw SyntaxError(t.pos, std::move(expected), t.type == Tok::End ? "end of input" : t.text);
    }

    void expect_sym(std::string_view s) {
        if (!is_sym(peek(), s)) fail({"'" + std::string(s) + "'"});
        next();
    }

    std::string expect_name() {
        if (!is_plain_name(peek())) fail({"name"});
        return next().text;
    }

    unsigned expect_int() {
        if (peek().type != Tok::Int) fail({"integer"});
        const auto& t = peek();
        unsigned long long v = 0;
        for (char c : t.text) {
            v = v * 10 + static_cast<unsigned>(c - '0');
            if (v > std::numeric_limits<unsigned>::max()) fail({"integer up to 4294967295"});
        }
        next();
        return static_cast<unsigned>(v);
    }

    bool at_or() const { return syntax_ == Syntax::Manchester ? is_keyword(peek(), "or") : is_sym(peek(), "⊔"); }
    bool at_and() const { return syntax_ == Syntax::Manchester ? is_keyword(peek(), "and") : is_sym(peek(), "⊓"); }

    ExprPtr parse_or() {
        auto e = parse_and();
        while (at_or()) {
            next();
            e = disjunction(e, parse_and());
        }
        return e;
    }

    ExprPtr parse_and() {
        auto e = parse_unary();
        while (at_and()) {
            next();
            e = conjunction(e, parse_unary());
        }
        return e;
    }

    ExprPtr parse_unary() { return syntax_ == Syntax::Manchester ? manchester_unary() : dl_unary(); }

    bool quantifier_ahead(std::size_t ahead) const {
        const auto& t = peek(ahead);
        return is_keyword(t, "some") || is_keyword(t, "only") || is_keyword(t, "min") || is_keyword(t, "max");
    }

    ExprPtr manchester_unary() {
        if (is_keyword(peek(), "not")) {
            next();
            return negation(manchester_unary());
        }
        const bool inverse_role = is_keyword(peek(), "inverse");
        if (inverse_role || (is_plain_name(peek()) && quantifier_ahead(1))) {
            Role r;
            if (inverse_role) {
                next();
                const bool paren = is_sym(peek(), "(");
                if (paren) next();
                r = Role{expect_name(), true};
                if (paren) expect_sym(")");
            } else {
                r = Role{next().text, false};
            }
            const auto& q = peek();
            if (is_keyword(q, "some") || is_keyword(q, "only")) {
                const bool some = q.text == "some";
                next();
                auto filler = manchester_unary();
                return some ? exists(r, filler) : forall(r, filler);
            }
            if (is_keyword(q, "min")) {
                next();
                const unsigned n = expect_int();
                return min_card(n, r, manchester_unary());
            }
            if (is_keyword(q, "max")) {
                next();
                const unsigned n = expect_int();
                return max_card(n, r, manchester_unary());
            }
            fail({"'some'", "'only'", "'min'", "'max'"});
        }
        return primary({"name", "'('", "'{'", "'not'", "'inverse'"});
    }

    Role dl_role() {
        Role r{expect_name(), false};
        if (is_sym(peek(), "⁻")) {
            next();
            r.inverted = true;
        }
        return r;
    }

    ExprPtr dl_unary() {
        const auto& t = peek();
        if (is_sym(t, "¬")) {
            next();
            return negation(dl_unary());
        }
        if (is_sym(t, "∃") || is_sym(t, "∀")) {
            const bool some = t.text == "∃";
            next();
            Role r = dl_role();
            expect_sym(".");
            auto filler = dl_unary();
            return some ? exists(r, filler) : forall(r, filler);
        }
        if (is_sym(t, "≥") || is_sym(t, "≤")) {
            const bool at_least = t.text == "≥";
            next();
            const unsigned n = expect_int();
            Role r = dl_role();
            expect_sym(".");
            auto filler = dl_unary();
            return at_least ? min_card(n, r, filler) : max_card(n, r, filler);
        }
        return primary({"name", "'('", "'{'", "'¬'", "'∃'", "'∀'", "'≥'", "'≤'"});
    }

    ExprPtr primary(std::vector<std::string> expected) {
        const auto& t = peek();
        if (is_plain_name(t)) return atomic(next().text);
        if (is_sym(t, "(")) {
            next();
            auto e = parse_or();
            if (!is_sym(peek(), ")"))
                fail(syntax_ == Syntax::Manchester ? std::vector<std::string>{"')'", "'and'", "'or'"}
                                                   : std::vector<std::string>{"')'", "'⊓'", "'⊔'"});
            next();
            return e;
        }
        if (is_sym(t, "{")) {
            next();
            std::vector<std::string> names{expect_name()};
            while (is_sym(peek(), ",")) {
                next();
                names.push_back(expect_name());
            }
            if (!is_sym(peek(), "}")) fail({"','", "'}'"});
            next();
            return one_of(std::move(names));
        }
        fail(std::move(expected));
    }

    std::vector<Token> toks_;
    Syntax syntax_;
    std::size_t pos_ = 0;
};

}  // namespace

SyntaxError::SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found)
    : ParseError("syntax error at position " + std::to_string(position) + ": expected " +
                 join_expected(expected) + ", found '" + found + "'"),
      position_(position),
      expected_(std::move(expected)) {}

ExprPtr parse_class_expression(std::string_view text, Syntax syntax, const ParseOptions& opts) {
    if (text.find_first_not_of(" \t\r\n") == std::string_view::npos)
        throw ContractViolation("class expression text is empty");
    Parser p(tokenize(text, opts), syntax);
    return p.parse();
}

}  // namespace promptkg::owl
