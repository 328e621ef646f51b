#pragma once
// Offline LM stand-in that answers every prompt family of the project from
// reference data, so whole pipelines run deterministically without a model.
//
//   composer   -> the reference tails of (subject, relation)
//   scorer     -> 0.9 for reference tails, 0.1 otherwise
//   numeric    -> min / median / max of the property over other subjects
//   owl        -> the closed-world answer for the query concept
//   proposals  -> numbered variants of the seed instruction
//   other      -> a fixed sentence

#include <memory>
#include <string>

#include "promptkg/kg/graph.hpp"
#include "promptkg/lm/scripted.hpp"
#include "promptkg/owl/reasoner.hpp"

namespace promptkg::cli {

struct ScriptedReference {
    const kg::KnowledgeGraph* links = nullptr;     // link-prediction answers
    const kg::KnowledgeGraph* literals = nullptr;  // numeric answers
    const owl::ClosedWorldReasoner* reasoner = nullptr;
    const kg::KnowledgeGraph* abox = nullptr;      // names for owl answers
    std::string owl_prefix;                        // namespace stripped from concepts
};

// The referenced objects must outlive the backend.
std::shared_ptr<lm::ScriptedLm> make_scripted_backend(const ScriptedReference& ref);

}  // namespace promptkg::cli
