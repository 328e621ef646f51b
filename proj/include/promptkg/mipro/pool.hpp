#pragma once
// Discrete search space for prompt optimisation: instruction variants per
// stage and few-shot demo subsets.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "promptkg/kg/graph.hpp"
#include "promptkg/lm/gateway.hpp"
#include "promptkg/prompt/state.hpp"

namespace promptkg::mipro {

// One few-shot example, rendered for both stages.
struct FewShotExample {
    prompt::Demo composer;
    prompt::Demo scorer;
    bool operator==(const FewShotExample&) const = default;
};

using DemoSubset = std::vector<FewShotExample>;

struct CandidatePool {
    std::vector<std::string> composer_instructions;
    std::vector<std::string> scorer_instructions;
    std::vector<DemoSubset> demo_subsets;  // [0] is the zero-shot arm

    // Throws ContractViolation when any dimension is empty.
    void validate() const;
    std::size_t size() const noexcept {
        return composer_instructions.size() * scorer_instructions.size() * demo_subsets.size();
    }
};

// Position in the categorical product.
struct CandidateIndex {
    std::size_t composer = 0;
    std::size_t scorer = 0;
    std::size_t demos = 0;
    auto operator<=>(const CandidateIndex&) const = default;
};

// Assembles the PromptState for a pool position; token cap from `base`.
prompt::PromptState materialize(const CandidatePool& pool, CandidateIndex idx, const prompt::PromptState& base);

enum class Stage { Composer, Scorer };

struct ProposalResult {
    std::vector<std::string> instructions;  // [0] is the seed instruction
    std::vector<std::string> warnings;
};

// n distinct instruction variants for one stage. The LM is asked once for
// n - 1 rewrites of the seed; duplicates and shortfalls are padded with
// tagged copies of the seed. An LM failure yields the seed plus padding
// and a warning.
ProposalResult propose_instruction_candidates(lm::LmGateway& gateway, const prompt::PromptState& seed, Stage stage,
                                              std::size_t n, const std::string& task_summary);

// Meta-prompt text (exposed for scripted backends and tests).
std::string proposal_prompt(const std::string& seed_instruction, Stage stage, std::size_t n_variants,
                            const std::string& task_summary);
std::vector<std::string> parse_proposals(const std::string& answer);

// m subsets of k examples each, sampled without replacement within a subset.
// Subset 0 is empty. Throws SizeError when k > |examples| and m > 1.
std::vector<DemoSubset> sample_demo_subsets(const std::vector<FewShotExample>& examples, std::size_t m,
                                            std::size_t k, std::uint64_t seed);

// Up to `limit` (s, r) groups of `train` as worked examples. Scorer demos mix
// the true tails with up to two sampled distractors.
std::vector<FewShotExample> build_few_shot_examples(const kg::KnowledgeGraph& train, std::size_t limit,
                                                    std::uint64_t seed);

// Short description of a graph for the proposal meta-prompt.
std::string task_summary(const kg::KnowledgeGraph& g);

}  // namespace promptkg::mipro
