#pragma once
// Parsers for class expressions in Manchester and DL syntax.
//
// Manchester                        DL
//   or    := and ('or' and)*          and ('⊔' and)*
//   and   := unary ('and' unary)*     unary ('⊓' unary)*
//   unary := 'not' unary              '¬' unary
//          | role 'some' unary        '∃' role '.' unary
//          | role 'only' unary        '∀' role '.' unary
//          | role 'min' INT unary     '≥' INT role '.' unary
//          | role 'max' INT unary     '≤' INT role '.' unary
//          | primary                  primary
//   role  := ['inverse'] NAME         NAME ['⁻']
//   primary := NAME | '(' or ')' | '{' NAME (',' NAME)* '}'
//
// NAME is [A-Za-z_][A-Za-z0-9_:-]* or an IRI in angle brackets. Binary
// operators associate to the left.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "promptkg/common/error.hpp"
#include "promptkg/owl/expression.hpp"

namespace promptkg::owl {

class SyntaxError : public ParseError {
public:
    SyntaxError(std::size_t position, std::vector<std::string> expected, const std::string& found);
    std::size_t position() const noexcept { return position_; }  // byte offset
    const std::vector<std::string>& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::vector<std::string> expected_;
};

struct ParseOptions {
    // Stripped from names that start with it ("ns:", or an IRI base such as
    // "http://example.com/family#" for <...> names).
    std::string prefix;
};

// Throws SyntaxError; text must be non-empty (ContractViolation otherwise).
ExprPtr parse_class_expression(std::string_view text, Syntax syntax, const ParseOptions& opts = {});

}  // namespace promptkg::owl
