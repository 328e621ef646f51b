#pragma once

#include <string>
#include <string_view>

#include "promptkg/owl/expression.hpp"

namespace promptkg::owl {

// Empty prefix renders bare names. A prefix containing "://" is an IRI base
// and names render as <base+name>; any other prefix is prepended verbatim.
std::string qualify(std::string_view name, std::string_view prefix);

// Inverse of the parser with the same prefix. Parentheses are emitted only
// where precedence or left associativity requires them.
std::string render(const ClassExpression& e, Syntax syntax, std::string_view prefix = "");

// Name without an IRI base, angle brackets or "prefix:" part.
std::string local_name(std::string_view name);

}  // namespace promptkg::owl
