#pragma once
// Structured-output parsing for LM answers.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptkg/common/error.hpp"

namespace promptkg::prompt {

// The LM answer could not be read; carries the raw text.
class OutputParseError : public ParseError {
public:
    OutputParseError(const std::string& what, std::string raw)
        : ParseError(what + ": " + raw.substr(0, 300)), raw_(std::move(raw)) {}
    const std::string& raw_text() const noexcept { return raw_; }

private:
    std::string raw_;
};

struct NamedScore {
    std::string name;
    std::optional<double> score;
    std::string rationale;
};

// Splits "[a, 'b', \"c\"]" / "a, b" into trimmed, unquoted names.
std::vector<std::string> parse_name_list(std::string_view text);

// Composer answer. Accepted, in order of preference:
//   a "candidates: [a, b]" line (the last one wins; the list may span lines),
//   a "candidates:" label followed by a fenced block or bullet lines,
//   any fenced block with one entity per line ("name<TAB>score" allowed).
// Throws OutputParseError when none is found.
std::vector<NamedScore> parse_candidates(std::string_view text, std::string_view label = "candidates");

// Scorer answer: "entity<TAB>score<TAB>rationale" lines (fenced or not),
// falling back to "name: score" pairs. Unreadable text yields an empty list.
std::vector<NamedScore> parse_scores(std::string_view text);

// All numbers in the text; thousands separators inside digit groups are
// ignored ("14,622,880" -> 14622880).
std::vector<double> extract_numbers(std::string_view text);

// Number following "label:" / "label =" on some line (last occurrence).
std::optional<double> labeled_number(std::string_view text, std::string_view label);

}  // namespace promptkg::prompt
