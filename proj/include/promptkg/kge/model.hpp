#pragma once
// Embedding tables and triple scoring models.

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "promptkg/common/util.hpp"
#include "promptkg/kg/graph.hpp"

namespace promptkg::kge {

// Row-major |E|×d and |R|×d matrices.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t n_entities, std::size_t n_relations, std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t entity_count() const noexcept { return n_entities_; }
    std::size_t relation_count() const noexcept { return n_relations_; }

    // Throw ContractViolation on out-of-range ids.
    std::span<double> entity(kg::EntityId e);
    std::span<const double> entity(kg::EntityId e) const;
    std::span<double> relation(kg::RelationId r);
    std::span<const double> relation(kg::RelationId r) const;

    std::vector<double>& entity_data() noexcept { return entities_; }
    const std::vector<double>& entity_data() const noexcept { return entities_; }
    std::vector<double>& relation_data() noexcept { return relations_; }
    const std::vector<double>& relation_data() const noexcept { return relations_; }

    bool all_finite() const;
    bool operator==(const EmbeddingTable&) const = default;

private:
    std::size_t n_entities_ = 0;
    std::size_t n_relations_ = 0;
    std::size_t dim_ = 0;
    std::vector<double> entities_;
    std::vector<double> relations_;
};

// Xavier-uniform: U(-b, b) with b = sqrt(6 / (rows + dim)) per matrix.
void xavier_uniform(EmbeddingTable& table, Rng& rng);

// Score of (h, r, t) from raw vectors, plus its gradient. Implementations
// are stateless; the trainer only talks to this interface.
class ScoringModel {
public:
    virtual ~ScoringModel() = default;
    virtual std::string name() const = 0;
    virtual double score(const double* h, const double* r, const double* t, std::size_t dim) const = 0;
    // gh += weight * ∂score/∂h, likewise for r and t.
    virtual void accumulate_gradient(const double* h, const double* r, const double* t, std::size_t dim,
                                     double weight, double* gh, double* gr, double* gt) const = 0;
};

// Σᵢ hᵢ·rᵢ·tᵢ
class DistMult final : public ScoringModel {
public:
    std::string name() const override { return "distmult"; }
    double score(const double* h, const double* r, const double* t, std::size_t dim) const override;
    void accumulate_gradient(const double* h, const double* r, const double* t, std::size_t dim, double weight,
                             double* gh, double* gr, double* gt) const override;
};

// Throws ContractViolation for names other than "distmult".
std::unique_ptr<ScoringModel> make_model(const std::string& name);

double triple_score(const ScoringModel& model, const EmbeddingTable& table, kg::EntityId h, kg::RelationId r,
                    kg::EntityId t);
double distmult_score(const EmbeddingTable& table, kg::EntityId h, kg::RelationId r, kg::EntityId t);

// Scores of (h, r, e) for every entity e, indexed by entity id.
std::vector<double> score_tails(const ScoringModel& model, const EmbeddingTable& table, kg::EntityId h,
                                kg::RelationId r);

}  // namespace promptkg::kge
