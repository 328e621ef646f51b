#pragma once
// The learnable string parameter: instructions and few-shot demos for the
// composer and scorer stages, plus the token cap c.

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace promptkg::prompt {

struct Field {
    std::string name;
    std::string description;
};

struct Signature {
    std::string name;
    std::vector<Field> inputs;
    std::vector<Field> outputs;
    std::string instruction;

    // Throws ContractViolation on duplicate field names or empty instruction.
    void validate() const;
};

// One worked example: field name -> text.
struct Demo {
    std::map<std::string, std::string> inputs;
    std::map<std::string, std::string> outputs;
    bool operator==(const Demo&) const = default;
};

struct PromptState {
    std::string composer_instruction;
    std::string scorer_instruction;
    std::vector<Demo> composer_demos;
    std::vector<Demo> scorer_demos;
    std::size_t token_cap = 32768;

    bool operator==(const PromptState&) const = default;
};

// Human-readable, line-oriented text format:
//
//   @prompt-state v1
//   @token_cap 32768
//   @composer_instruction
//   ...instruction lines...
//   @scorer_instruction
//   ...
//   @composer_demo
//   input subject: germany
//   output candidates: [europe]
//   @end
//
// Lines of an instruction that start with '@' are written as "@@...".
// Demo values escape newlines as \n and backslashes as \\.
std::string serialize(const PromptState& state);
PromptState parse_prompt_state(std::string_view text);

// Short content hash used in trial logs.
std::string state_hash(const PromptState& state);

// Named presets from the shipped default-prompt resource:
// "generic", "countries", "numeric", "owl".
PromptState default_prompt_state(std::string_view preset = "generic");
std::vector<std::string> prompt_presets();

// Raw resource text (generated at build time).
std::string_view default_prompts_resource();

}  // namespace promptkg::prompt
