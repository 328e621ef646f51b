#pragma once
// LM instance retrieval. Step one writes worked examples for concepts with
// known instance sets; step two asks for the instances of a new concept with
// those examples in the prompt. Predictions are scored by Jaccard similarity
// against the closed-world reasoner.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptkg/kg/graph.hpp"
#include "promptkg/lm/gateway.hpp"
#include "promptkg/owl/expression.hpp"
#include "promptkg/owl/parser.hpp"
#include "promptkg/owl/reasoner.hpp"
#include "promptkg/prompt/render.hpp"
#include "promptkg/prompt/state.hpp"

namespace promptkg::owl {

// |a ∩ b| / |a ∪ b|; 1.0 when both are empty.
double jaccard(const EntitySet& a, const EntitySet& b);

// How concepts and graph names are shown to the LM.
struct Presentation {
    Syntax syntax = Syntax::Manchester;
    bool with_namespace = false;
    bool operator==(const Presentation&) const = default;
};

// "m_ns", "dl_ns", "m_no_ns", "dl_no_ns"
std::string label(const Presentation& p);
// Table column order: M and DL with namespace, then without.
const std::vector<Presentation>& table_presentations();

// Plain-language description of every constructor used in `e`, in the
// given syntax. Deterministic.
std::string syntax_note(const ClassExpression& e, Syntax syntax);

prompt::Signature fewshot_signature(const std::string& instruction);
prompt::Signature retrieval_signature(const std::string& instruction);

struct FewShotExample {
    std::string concept_text;  // as presented
    std::string syntax_note;
    std::string reasoning;     // worked solution
    std::vector<std::string> answer;  // presented names of the truth set, sorted
    bool fallback = false;     // template text used instead of the LM's
};

struct RetrievalPrediction {
    EntitySet entities;
    std::vector<std::string> warnings;  // dropped names
    std::string raw;
};

struct RetrievalOptions {
    std::string namespace_prefix = "http://example.com/family#";
    int max_tokens = 1024;
    std::size_t excerpt_triples = 12;  // graph lines in fallback examples
};

class InstanceRetriever {
public:
    // `g` must outlive the retriever. Uses the state's composer instruction
    // for example generation and its scorer instruction for retrieval.
    InstanceRetriever(std::shared_ptr<lm::LmGateway> gateway, const kg::KnowledgeGraph& g, prompt::PromptState state,
                      ReasonerOptions reasoner = {}, RetrievalOptions opts = {});

    const ClosedWorldReasoner& reasoner() const noexcept { return reasoner_; }
    const RetrievalOptions& options() const noexcept { return opts_; }
    std::string prefix(const Presentation& p) const { return p.with_namespace ? opts_.namespace_prefix : ""; }

    EntitySet truth(const ClassExpression& c, std::vector<std::string>* warnings = nullptr) const {
        return reasoner_.retrieve(c, warnings);
    }

    // Graph as "(s, r, o)" lines with presented names; type triples use
    // "rdf:type" with a namespace and "type" without.
    std::string graph_text(const Presentation& p) const;
    std::string entity_text(kg::EntityId e, const Presentation& p) const;

    // One LM call. The answer is always `truth`; LM failure or an empty
    // answer yields the template example.
    FewShotExample generate_fewshot(const ClassExpression& c, const EntitySet& truth, const Presentation& p) const;
    FewShotExample fallback_example(const ClassExpression& c, const EntitySet& truth, const Presentation& p) const;

    prompt::RenderedPrompt render_fewshot_prompt(const ClassExpression& c, const EntitySet& truth,
                                                 const Presentation& p) const;
    prompt::RenderedPrompt render_retrieval_prompt(const ClassExpression& c,
                                                   std::span<const FewShotExample> examples,
                                                   const Presentation& p) const;

    // One LM call. Throws prompt::OutputParseError when no instance list is found.
    RetrievalPrediction llm_retrieve(const ClassExpression& c, std::span<const FewShotExample> examples,
                                     const Presentation& p) const;

    // Case-insensitive, namespace-stripped match against the individuals.
    std::optional<kg::EntityId> resolve(std::string_view name) const;

private:
    std::size_t render_cap() const;

    std::shared_ptr<lm::LmGateway> gateway_;
    const kg::KnowledgeGraph* graph_;
    prompt::PromptState state_;
    ClosedWorldReasoner reasoner_;
    RetrievalOptions opts_;
    std::map<std::string, kg::EntityId> by_key_;
};

// Reads the answer's instance list ("instances: [a, b]", "{a, b}", bullets,
// or a fenced block). "none" / "[]" / "∅" give an empty list.
std::vector<std::string> parse_instance_list(const std::string& answer);

// Concept list: one "<syntax><TAB><expression>" per line, syntax being
// "manchester" or "dl"; '#' comments and blank lines skipped.
struct ConceptEntry {
    std::size_t line = 0;
    Syntax syntax = Syntax::Manchester;
    std::string text;
    ExprPtr expr;
};
std::vector<ConceptEntry> parse_concept_list(std::string_view text, const ParseOptions& opts = {});
std::vector<ConceptEntry> load_concept_list(const std::filesystem::path& path, const ParseOptions& opts = {});

struct OwlRunOptions {
    std::uint64_t seed = 0;
    std::size_t examples = 2;  // concepts used for few-shot generation, excluded from scoring
    std::size_t workers = 1;
    std::vector<Presentation> presentations = table_presentations();
};

struct OwlRecord {
    std::size_t concept_index = 0;
    ConceptGroup group = ConceptGroup::Atomic;
    Presentation presentation;
    EntitySet truth;
    EntitySet predicted;
    double jaccard = 0.0;
    bool ok = false;  // false: LM failure, scored as an empty prediction
    std::string error;
    std::vector<std::string> warnings;
};

struct OwlGroupRow {
    ConceptGroup group = ConceptGroup::Atomic;
    std::size_t count = 0;
    std::vector<std::optional<double>> mean_jaccard;  // one per presentation; empty when count == 0
};

struct OwlRun {
    std::vector<Presentation> presentations;
    std::vector<std::size_t> example_concepts;
    std::vector<OwlRecord> records;  // presentation-major, then concept order
    std::vector<OwlGroupRow> rows;   // all ten groups in table order
    std::size_t failures = 0;
};

// Picks the example concepts (non-empty truth, seeded), writes their worked
// examples once per presentation, then retrieves every other concept.
OwlRun run_owl(const InstanceRetriever& retriever, std::span<const ConceptEntry> concepts,
               const OwlRunOptions& opts);

// group,count,<one column per presentation>; "na" for empty groups.
void write_owl_table(std::ostream& out, const OwlRun& run);
// concept,group,presentation,truth,predicted,jaccard,status (set sizes)
void write_owl_records(std::ostream& out, const OwlRun& run, std::span<const ConceptEntry> concepts);

}  // namespace promptkg::owl
