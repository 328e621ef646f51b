#pragma once
// Context retrieval for numeric-literal queries (s, r) with r a data
// property: the subject's other facts first, then other subjects' values of r.

#include <cstdint>
#include <string>
#include <vector>

#include "promptkg/kg/graph.hpp"

namespace promptkg::numeric {

struct NumericQuery {
    kg::EntityId subject;
    kg::RelationId property;
};

struct ContextBundle {
    std::vector<kg::Triple> subject_context;   // subject = s, relation != r
    std::vector<kg::Triple> relation_context;  // relation = r, subject != s
    std::size_t token_cost = 0;                // sum of per-line estimates
};

struct ContextOptions {
    std::size_t budget = 2048;  // tokens
    double chars_per_token = 4.0;
    // Drop relation-context values with leave-one-out |z| above this; 0 = off.
    double outlier_z = 0.0;
};

// Number as shown in prompts: at most 6 significant digits, fixed notation,
// no thousands separators, trailing zeros removed.
std::string prompt_number(double value);

// "(subject, relation, object)" with labels and prompt_number objects.
std::string render_fact(const kg::Vocabulary& v, const kg::Triple& t);

// Both candidate sets, unsampled, in graph order.
std::vector<kg::Triple> subject_set(const kg::KnowledgeGraph& g, const NumericQuery& q);
std::vector<kg::Triple> relation_set(const kg::KnowledgeGraph& g, const NumericQuery& q);

// Order in which relation-context triples are offered to the budget (a
// seeded permutation of relation_set, after outlier filtering if enabled).
std::vector<kg::Triple> relation_sampling_trace(const kg::KnowledgeGraph& g, const NumericQuery& q,
                                                std::uint64_t seed, double outlier_z = 0.0);

// Subject facts are taken in graph order while they fit; the remaining
// budget is filled from the sampling trace, skipping lines that do not fit.
ContextBundle retrieve_context(const kg::KnowledgeGraph& g, const NumericQuery& q, const ContextOptions& opts,
                               std::uint64_t seed);

// Cost of one rendered line (with its newline).
std::size_t line_cost(const kg::Vocabulary& v, const kg::Triple& t, double chars_per_token);

}  // namespace promptkg::numeric
