#pragma once
// One LM call per numeric query: point estimate plus interval.

#include <memory>
#include <string>
#include <vector>

#include "promptkg/kg/graph.hpp"
#include "promptkg/lm/gateway.hpp"
#include "promptkg/numeric/context.hpp"
#include "promptkg/numeric/metrics.hpp"
#include "promptkg/prompt/state.hpp"

namespace promptkg::numeric {

struct NumericPrediction {
    IntervalPrediction interval;
    std::vector<std::string> warnings;  // repairs applied
    std::string raw;
};

prompt::Signature numeric_signature(const std::string& instruction);

// Prompt for a query; uses the state's scorer instruction and demos.
std::string render_numeric_prompt(const prompt::PromptState& state, const kg::Vocabulary& v, const NumericQuery& q,
                                  const ContextBundle& ctx, std::size_t token_cap, double chars_per_token = 4.0);

// Reads y_min / y_hat / y_max from an answer. Labeled values win; otherwise
// the last three numbers are taken as (y_min, y_hat, y_max). Swaps inverted
// bounds and clamps y_hat into them, recording a warning for each repair.
// Throws prompt::OutputParseError when fewer than three numbers are found.
NumericPrediction parse_interval(const std::string& answer);

NumericPrediction predict_numeric(lm::LmGateway& gateway, const prompt::PromptState& state,
                                  const kg::Vocabulary& v, const NumericQuery& q, const ContextBundle& ctx,
                                  int max_tokens = 1024);

struct NumericRecord {
    NumericQuery query;
    double truth = 0.0;
    bool ok = false;
    NumericPrediction prediction;
    std::string error;
};

struct NumericRunOptions {
    ContextOptions context;
    std::uint64_t seed = 0;
    std::size_t properties = 10;  // |R'|; clipped to the number available
    std::size_t max_queries_per_property = 0;  // 0 = all
    std::size_t workers = 1;
    int max_tokens = 1024;
};

struct NumericRun {
    std::vector<kg::RelationId> properties;
    std::vector<NumericRecord> records;
    std::vector<PropertyRow> rows;  // one per property with at least one prediction
    std::size_t failures = 0;
};

// `literals` holds the (s, r, value) queries; `context` is the graph the
// context sets are drawn from (usually literals ∪ object triples).
NumericRun run_numeric(lm::LmGateway& gateway, const prompt::PromptState& state, const kg::KnowledgeGraph& literals,
                       const kg::KnowledgeGraph& context, const NumericRunOptions& opts);

}  // namespace promptkg::numeric
