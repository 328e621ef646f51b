#pragma once
// Mini-batch Adam training of an embedding model under cross-entropy, and
// filtered tail-ranking evaluation of the result.

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptkg/common/error.hpp"
#include "promptkg/eval/rank.hpp"
#include "promptkg/kg/graph.hpp"
#include "promptkg/kge/model.hpp"

namespace promptkg::kge {

// KvsAll: one multi-label example per (s, r) with every entity as a target.
// NegSample: each triple against `negatives` uniformly corrupted tails.
enum class Strategy { KvsAll, NegSample };
std::string to_string(Strategy s);
Strategy parse_strategy(std::string_view s);

struct TrainConfig {
    std::string model = "distmult";
    std::size_t dim = 32;
    double lr = 0.1;
    std::size_t epochs = 256;
    std::size_t batch_size = 1024;
    double dropout = 0.3;  // on head and relation rows, training only
    Strategy strategy = Strategy::KvsAll;
    std::size_t negatives = 8;
    std::uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    // Throws ContractViolation: lr > 0, epochs ≥ 1, batch ≥ 1, dropout in [0, 1).
    void validate() const;
};

// Non-finite loss during training; the message names epoch, batch and lr.
class NumericalError : public Error {
public:
    using Error::Error;
};

struct KvsAllExample {
    kg::EntityId head;
    kg::RelationId relation;
    std::vector<kg::EntityId> tails;
};
// Entity-object groups of g in (s, r) order.
std::vector<KvsAllExample> kvsall_examples(const kg::KnowledgeGraph& g);

struct Sample {
    kg::EntityId head;
    kg::RelationId relation;
    kg::EntityId tail;
    double label = 1.0;
};

// Same shape as the table.
struct Gradient {
    std::vector<double> entity;
    std::vector<double> relation;
    explicit Gradient(const EmbeddingTable& t) : entity(t.entity_data().size()), relation(t.relation_data().size()) {}
    void zero();
};

// Per-example multiplicative masks for the head and relation rows, each
// example's mask `dim` long. Null means no dropout.
struct DropoutMasks {
    std::vector<double> head;
    std::vector<double> relation;
};

// Mean binary cross-entropy of σ(score) over batch × all entities.
// Adds the gradient to `grad` when given.
double kvsall_loss(const EmbeddingTable& table, const ScoringModel& model, std::span<const KvsAllExample> batch,
                   Gradient* grad = nullptr, const DropoutMasks* masks = nullptr);
// Mean binary cross-entropy of σ(score) over the samples.
double sample_loss(const EmbeddingTable& table, const ScoringModel& model, std::span<const Sample> batch,
                   Gradient* grad = nullptr, const DropoutMasks* masks = nullptr);

class Adam {
public:
    Adam(const EmbeddingTable& table, const TrainConfig& cfg);
    void step(EmbeddingTable& table, const Gradient& grad);
    std::size_t steps() const noexcept { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<double> m_entity_, v_entity_, m_relation_, v_relation_;
};

struct TrainResult {
    EmbeddingTable table;
    std::vector<double> epoch_loss;  // mean batch loss per epoch
    std::size_t steps = 0;
};

// Table rows cover the whole vocabulary so every split can be scored.
// Deterministic under cfg.seed. Throws NumericalError on a non-finite loss.
TrainResult train(const kg::KnowledgeGraph& g, const TrainConfig& cfg);
TrainResult train(const kg::KnowledgeGraph& g, const TrainConfig& cfg, std::size_t n_entities, std::size_t n_relations);

struct KgeEvaluation {
    eval::EvaluationResult result;
    std::vector<std::string> warnings;  // one per skipped query
};

// Ranks every tail of `test` among all entities; `filter` supplies the
// known positives. Queries with ids outside the table are skipped.
KgeEvaluation evaluate_kge(const EmbeddingTable& table, const ScoringModel& model, const kg::KnowledgeGraph& test,
                           const kg::KnowledgeGraph& filter, std::size_t workers = 1);

}  // namespace promptkg::kge
