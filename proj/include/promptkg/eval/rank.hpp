#pragma once
// Tail-query ranking metrics: mean-rank ties, raw and filtered settings.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "promptkg/kg/graph.hpp"

namespace promptkg::eval {

enum class RankSetting { Raw, Filtered };

std::string to_string(RankSetting s);
RankSetting parse_rank_setting(std::string_view s);

struct RankResult {
    kg::EntityId subject;
    kg::RelationId relation;
    kg::EntityId truth;
    RankSetting setting = RankSetting::Filtered;
    // Mean rank 1 + greater + ties/2 stored doubled, so it stays integral.
    std::int64_t doubled_rank = 2;
    std::int64_t rank() const noexcept { return (doubled_rank + 1) / 2; }  // half-up
    double exact_rank() const noexcept { return static_cast<double>(doubled_rank) / 2.0; }
};

// `scores` is indexed by entity id. In the filtered setting every entity of
// `known_positives` other than `truth` is removed before counting.
// Throws ContractViolation when truth lies outside the score domain or any
// score is NaN.
RankResult rank_true_entity(std::span<const double> scores, kg::EntityId truth,
                            std::span<const kg::EntityId> known_positives, RankSetting setting);

struct MetricsReport {
    double mrr = 0.0;
    std::map<int, double> hits;  // k -> fraction of ranks <= k, k in {1, 3, 10}
    std::size_t n_queries = 0;
};

// Throws ContractViolation on an empty list or a rank < 1.
MetricsReport compute_metrics(std::span<const std::int64_t> ranks);
MetricsReport compute_metrics(std::span<const RankResult> ranks);

struct EvaluationResult {
    std::vector<RankResult> raw;
    std::vector<RankResult> filtered;
    MetricsReport raw_metrics;
    MetricsReport filtered_metrics;
    const MetricsReport& metrics(RankSetting s) const { return s == RankSetting::Raw ? raw_metrics : filtered_metrics; }
};

// Scores all entities for a tail query (s, r, ?).
using TailScorer = std::function<std::vector<double>(kg::EntityId, kg::RelationId)>;

// Ranks every entity-object triple of `queries`. The scorer runs once per
// distinct (s, r); `filter` supplies the known positives (usually
// train ∪ valid ∪ test). Groups are scored on up to `workers` threads.
EvaluationResult evaluate_tail_queries(const kg::KnowledgeGraph& queries, const kg::KnowledgeGraph& filter,
                                       const TailScorer& scorer, std::size_t workers = 1);

// "model,setting,n,mrr,hits@1,hits@3,hits@10"
std::string csv_header();
std::string csv_row(const std::string& model, RankSetting setting, const MetricsReport& m);
// Aligned table with one row per (model, setting), columns MRR @1 @3 @10.
void write_table(std::ostream& out,
                 const std::vector<std::tuple<std::string, RankSetting, MetricsReport>>& rows);

}  // namespace promptkg::eval
