#pragma once

#include <map>
#include <span>
#include <string>

#include "promptkg/prompt/state.hpp"

namespace promptkg::prompt {

struct RenderedPrompt {
    std::string text;
    std::size_t demos_used = 0;
    std::size_t tokens = 0;
};

// Builds the prompt: instruction and field format, then demos, then the
// query's input fields followed by the first output label. Demos are dropped
// from the end of the list until the estimate fits `token_cap`; the query is
// never dropped. Demo fields absent from a demo are omitted; query fields
// that are absent or blank render as "(none)". Throws SizeError when even
// the demo-free prompt is too long.
RenderedPrompt initialize_prompt(const Signature& sig, std::span<const Demo> demos,
                                 const std::map<std::string, std::string>& query, std::size_t token_cap,
                                 double chars_per_token = 4.0);

// "known_facts" -> "Known Facts"
std::string field_label(const std::string& name);

// Value of "<Label>: value" in a rendered prompt (last occurrence, rest of
// line). Used by scripted backends to read the query back.
std::string extract_field(const std::string& prompt, const std::string& field_name);

}  // namespace promptkg::prompt
