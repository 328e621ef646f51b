#pragma once
// Mining high-confidence missing triples from a training graph.

#include <filesystem>
#include <string>
#include <vector>

#include "promptkg/kg/graph.hpp"
#include "promptkg/prompt/pipeline.hpp"

namespace promptkg::enrich {

struct EnrichmentConfig {
    double theta = 0.51;  // must exceed 0.5
    std::size_t max_candidates_per_pair = 25;
    std::size_t workers = 1;

    // Throws ContractViolation unless theta > 0.5 and the cap is positive.
    void validate() const;
};

struct ScoredTriple {
    kg::Triple triple;
    double score = 0.0;
};

// Sorted by (s, p, o); disjoint from the source graph; every score > theta.
struct MissingTripleSet {
    std::vector<ScoredTriple> triples;
    std::size_t size() const noexcept { return triples.size(); }
    bool empty() const noexcept { return triples.empty(); }
};

struct EnrichmentReport {
    std::size_t pairs = 0;           // distinct (s, p) swept
    std::size_t failed_pairs = 0;    // LM or parse failure, skipped
    std::size_t candidates = 0;      // composer candidates across pairs
    std::size_t known = 0;           // candidates above theta already in the graph
    std::size_t below_threshold = 0;
    std::vector<std::string> errors; // one per failed pair
};

struct EnrichmentResult {
    MissingTripleSet missing;
    EnrichmentReport report;
};

// One compose/score round per distinct (s, p) of `train` with an entity
// object; (s, p, o') is kept iff score(o') > theta and it is not in `train`.
// `predictor` must use `train` as its context graph.
EnrichmentResult enrich(const kg::KnowledgeGraph& train, const prompt::LinkPredictor& predictor,
                        const EnrichmentConfig& cfg);

// train ∪ missing as a graph over the same vocabulary.
kg::KnowledgeGraph augmented_graph(const kg::KnowledgeGraph& train, const MissingTripleSet& missing);

// Writes train's triples in their original order, then the missing triples
// in (s, p, o) order, as tab-separated names.
void write_augmented_split(const kg::KnowledgeGraph& train, const MissingTripleSet& missing,
                           const std::filesystem::path& path);

// "subject\trelation\tobject\tscore" per missing triple.
void write_missing_report(const kg::KnowledgeGraph& train, const MissingTripleSet& missing,
                          const std::filesystem::path& path);

}  // namespace promptkg::enrich
