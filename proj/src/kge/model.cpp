#include "promptkg/kge/model.hpp"

#include <cmath>

#include "promptkg/common/error.hpp"

namespace promptkg::kge {

EmbeddingTable::EmbeddingTable(std::size_t n_entities, std::size_t n_relations, std::size_t dim)
    : n_entities_(n_entities),
      n_relations_(n_relations),
      dim_(dim),
      entities_(n_entities * dim, 0.0),
      relations_(n_relations * dim, 0.0) {
    if (dim == 0) throw ContractViolation("embedding dimension must be positive");
}

std::span<double> EmbeddingTable::entity(kg::EntityId e) {
    if (e.value >= n_entities_) throw ContractViolation("entity id out of range: " + std::to_string(e.value));
    return {entities_.data() + e.value * dim_, dim_};
}

std::span<const double> EmbeddingTable::entity(kg::EntityId e) const {
    if (e.value >= n_entities_) throw ContractViolation("entity id out of range: " + std::to_string(e.value));
    return {entities_.data() + e.value * dim_, dim_};
}

std::span<double> EmbeddingTable::relation(kg::RelationId r) {
    if (r.value >= n_relations_) throw ContractViolation("relation id out of range: " + std::to_string(r.value));
    return {relations_.data() + r.value * dim_, dim_};
}

std::span<const double> EmbeddingTable::relation(kg::RelationId r) const {
    if (r.value >= n_relations_) throw ContractViolation("relation id out of range: " + std::to_string(r.value));
    return {relations_.data() + r.value * dim_, dim_};
}

bool EmbeddingTable::all_finite() const {
    for (double x : entities_)
        if (!std::isfinite(x)) return false;
    for (double x : relations_)
        if (!std::isfinite(x)) return false;
    return true;
}

void xavier_uniform(EmbeddingTable& table, Rng& rng) {
    auto fill = [&](std::vector<double>& m, std::size_t rows) {
        const double bound = std::sqrt(6.0 / static_cast<double>(rows + table.dim()));
        for (auto& x : m) x = (2.0 * uniform_unit(rng) - 1.0) * bound;
    };
    fill(table.entity_data(), table.entity_count());
    fill(table.relation_data(), table.relation_count());
}

double DistMult::score(const double* h, const double* r, const double* t, std::size_t dim) const {
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += h[i] * r[i] * t[i];
    return s;
}

void DistMult::accumulate_gradient(const double* h, const double* r, const double* t, std::size_t dim, double weight,
                                   double* gh, double* gr, double* gt) const {
    for (std::size_t i = 0; i < dim; ++i) {
        if (gh) gh[i] += weight * r[i] * t[i];
        if (gr) gr[i] += weight * h[i] * t[i];
        if (gt) gt[i] += weight * h[i] * r[i];
    }
}

std::unique_ptr<ScoringModel> make_model(const std::string& name) {
    if (name == "distmult") return std::make_unique<DistMult>();
    throw ContractViolation("unknown embedding model '" + name + "' (available: distmult)");
}

double triple_score(const ScoringModel& model, const EmbeddingTable& table, kg::EntityId h, kg::RelationId r,
                    kg::EntityId t) {
    return model.score(table.entity(h).data(), table.relation(r).data(), table.entity(t).data(), table.dim());
}

double distmult_score(const EmbeddingTable& table, kg::EntityId h, kg::RelationId r, kg::EntityId t) {
    return triple_score(DistMult{}, table, h, r, t);
}

std::vector<double> score_tails(const ScoringModel& model, const EmbeddingTable& table, kg::EntityId h,
                                kg::RelationId r) {
    const auto hv = table.entity(h);
    const auto rv = table.relation(r);
    std::vector<double> out(table.entity_count());
    for (std::uint32_t e = 0; e < out.size(); ++e)
        out[e] = model.score(hv.data(), rv.data(), table.entity_data().data() + e * table.dim(), table.dim());
    return out;
}

}  // namespace promptkg::kge
