#include "promptkg/kge/train.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "promptkg/common/util.hpp"

namespace promptkg::kge {

std::string to_string(Strategy s) { return s == Strategy::KvsAll ? "kvsall" : "negsample"; }

Strategy parse_strategy(std::string_view s) {
    const auto t = to_lower(trim(s));
    if (t == "kvsall") return Strategy::KvsAll;
    if (t == "negsample") return Strategy::NegSample;
    throw ContractViolation("unknown training strategy '" + std::string(s) + "' (expected kvsall or negsample)");
}

void TrainConfig::validate() const {
    if (!(lr > 0.0)) throw ContractViolation("learning rate must be positive");
    if (epochs < 1) throw ContractViolation("epochs must be at least 1");
    if (batch_size < 1) throw ContractViolation("batch size must be at least 1");
    if (dim < 1) throw ContractViolation("dimension must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ContractViolation("dropout must lie in [0, 1)");
    if (strategy == Strategy::NegSample && negatives < 1) throw ContractViolation("negatives must be at least 1");
}

void Gradient::zero() {
    std::fill(entity.begin(), entity.end(), 0.0);
    std::fill(relation.begin(), relation.end(), 0.0);
}

std::vector<KvsAllExample> kvsall_examples(const kg::KnowledgeGraph& g) {
    std::vector<KvsAllExample> out;
    for (const auto& group : kg::kvsall_groups(g)) {
        KvsAllExample ex{group.subject, group.relation, {}};
        for (const auto& o : group.objects)
            if (std::holds_alternative<kg::EntityId>(o)) ex.tails.push_back(std::get<kg::EntityId>(o));
        if (ex.tails.empty()) continue;
        std::sort(ex.tails.begin(), ex.tails.end());
        out.push_back(std::move(ex));
    }
    return out;
}

namespace {

// log(1 + e^x) without overflow
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Row vectors after dropout for example i.
void masked_rows(const EmbeddingTable& table, kg::EntityId h, kg::RelationId r, const DropoutMasks* masks,
                 std::size_t i, std::vector<double>& hv, std::vector<double>& rv) {
    const std::size_t d = table.dim();
    const auto hrow = table.entity(h);
    const auto rrow = table.relation(r);
    for (std::size_t k = 0; k < d; ++k) {
        hv[k] = hrow[k] * (masks ? masks->head[i * d + k] : 1.0);
        rv[k] = rrow[k] * (masks ? masks->relation[i * d + k] : 1.0);
    }
}

// Chain rule back through the masks into the table gradient.
void scatter_rows(const EmbeddingTable& table, kg::EntityId h, kg::RelationId r, const DropoutMasks* masks,
                  std::size_t i, const std::vector<double>& gh, const std::vector<double>& gr, Gradient& grad) {
    const std::size_t d = table.dim();
    for (std::size_t k = 0; k < d; ++k) {
        grad.entity[h.value * d + k] += gh[k] * (masks ? masks->head[i * d + k] : 1.0);
        grad.relation[r.value * d + k] += gr[k] * (masks ? masks->relation[i * d + k] : 1.0);
    }
}

}  // namespace

double kvsall_loss(const EmbeddingTable& table, const ScoringModel& model, std::span<const KvsAllExample> batch,
                   Gradient* grad, const DropoutMasks* masks) {
    if (batch.empty()) throw ContractViolation("empty batch");
    const std::size_t d = table.dim();
    const std::size_t n = table.entity_count();
    const double norm = 1.0 / (static_cast<double>(batch.size()) * static_cast<double>(n));
    const double* ents = table.entity_data().data();
    std::vector<double> hv(d), rv(d), gh(d), gr(d);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& ex = batch[i];
        masked_rows(table, ex.head, ex.relation, masks, i, hv, rv);
        std::fill(gh.begin(), gh.end(), 0.0);
        std::fill(gr.begin(), gr.end(), 0.0);
        auto next_tail = ex.tails.begin();
        for (std::uint32_t e = 0; e < n; ++e) {
            double y = 0.0;
            if (next_tail != ex.tails.end() && next_tail->value == e) {
                y = 1.0;
                ++next_tail;
            }
            const double* t = ents + e * d;
            const double x = model.score(hv.data(), rv.data(), t, d);
            loss += softplus(x) - y * x;
            if (grad)
                model.accumulate_gradient(hv.data(), rv.data(), t, d, (sigmoid(x) - y) * norm, gh.data(), gr.data(),
                                          grad->entity.data() + e * d);
        }
        if (grad) scatter_rows(table, ex.head, ex.relation, masks, i, gh, gr, *grad);
    }
    return loss * norm;
}

double sample_loss(const EmbeddingTable& table, const ScoringModel& model, std::span<const Sample> batch,
                   Gradient* grad, const DropoutMasks* masks) {
    if (batch.empty()) throw ContractViolation("empty batch");
    const std::size_t d = table.dim();
    const double norm = 1.0 / static_cast<double>(batch.size());
    std::vector<double> hv(d), rv(d), gh(d), gr(d);
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const auto& s = batch[i];
        masked_rows(table, s.head, s.relation, masks, i, hv, rv);
        const auto t = table.entity(s.tail);
        const double x = model.score(hv.data(), rv.data(), t.data(), d);
        loss += softplus(x) - s.label * x;
        if (!grad) continue;
        std::fill(gh.begin(), gh.end(), 0.0);
        std::fill(gr.begin(), gr.end(), 0.0);
        model.accumulate_gradient(hv.data(), rv.data(), t.data(), d, (sigmoid(x) - s.label) * norm, gh.data(),
                                  gr.data(), grad->entity.data() + s.tail.value * d);
        scatter_rows(table, s.head, s.relation, masks, i, gh, gr, *grad);
    }
    return loss * norm;
}

Adam::Adam(const EmbeddingTable& table, const TrainConfig& cfg)
    : lr_(cfg.lr),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.epsilon),
      m_entity_(table.entity_data().size()),
      v_entity_(table.entity_data().size()),
      m_relation_(table.relation_data().size()),
      v_relation_(table.relation_data().size()) {}

void Adam::step(EmbeddingTable& table, const Gradient& grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            p[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    };
    update(table.entity_data(), grad.entity, m_entity_, v_entity_);
    update(table.relation_data(), grad.relation, m_relation_, v_relation_);
}

namespace {

void draw_masks(DropoutMasks& masks, std::size_t rows, std::size_t dim, double p, Rng& rng) {
    masks.head.resize(rows * dim);
    masks.relation.resize(rows * dim);
    const double keep = 1.0 / (1.0 - p);
    for (auto* m : {&masks.head, &masks.relation})
        for (auto& x : *m) x = uniform_unit(rng) < p ? 0.0 : keep;
}

}  // namespace

TrainResult train(const kg::KnowledgeGraph& g, const TrainConfig& cfg) {
    return train(g, cfg, g.vocab().entity_count(), g.vocab().relation_count());
}

TrainResult train(const kg::KnowledgeGraph& g, const TrainConfig& cfg, std::size_t n_entities,
                  std::size_t n_relations) {
    cfg.validate();
    const auto model = make_model(cfg.model);
    const auto examples = kvsall_examples(g);
    if (examples.empty()) throw ContractViolation("training graph has no entity triples");

    TrainResult result{EmbeddingTable(n_entities, n_relations, cfg.dim), {}, 0};
    Rng init_rng(substream_seed(cfg.seed, "kge/init"));
    xavier_uniform(result.table, init_rng);
    Rng shuffle_rng(substream_seed(cfg.seed, "kge/shuffle"));
    Rng dropout_rng(substream_seed(cfg.seed, "kge/dropout"));
    Rng negative_rng(substream_seed(cfg.seed, "kge/negatives"));

    std::vector<Sample> positives;
    if (cfg.strategy == Strategy::NegSample)
        for (const auto& ex : examples)
            for (auto t : ex.tails) positives.push_back({ex.head, ex.relation, t, 1.0});
    const std::size_t units = cfg.strategy == Strategy::KvsAll ? examples.size() : positives.size();

    Adam adam(result.table, cfg);
    Gradient grad(result.table);
    DropoutMasks masks;
    std::vector<std::size_t> order(units);
    for (std::size_t i = 0; i < units; ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        stable_shuffle(order, shuffle_rng);
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start < units; start += cfg.batch_size) {
            const std::size_t end = std::min(units, start + cfg.batch_size);
            grad.zero();
            double loss = 0.0;
            if (cfg.strategy == Strategy::KvsAll) {
                std::vector<KvsAllExample> batch;
                batch.reserve(end - start);
                for (std::size_t i = start; i < end; ++i) batch.push_back(examples[order[i]]);
                const DropoutMasks* m = nullptr;
                if (cfg.dropout > 0.0) {
                    draw_masks(masks, batch.size(), cfg.dim, cfg.dropout, dropout_rng);
                    m = &masks;
                }
                loss = kvsall_loss(result.table, *model, batch, &grad, m);
            } else {
                std::vector<Sample> batch;
                for (std::size_t i = start; i < end; ++i) {
                    const auto& pos = positives[order[i]];
                    batch.push_back(pos);
                    for (std::size_t k = 0; k < cfg.negatives; ++k)
                        batch.push_back({pos.head, pos.relation,
                                         kg::EntityId{static_cast<std::uint32_t>(uniform_index(negative_rng, n_entities))},
                                         0.0});
                }
                const DropoutMasks* m = nullptr;
                if (cfg.dropout > 0.0) {
                    draw_masks(masks, batch.size(), cfg.dim, cfg.dropout, dropout_rng);
                    m = &masks;
                }
                loss = sample_loss(result.table, *model, batch, &grad, m);
            }
            if (!std::isfinite(loss)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch + 1 << ", batch " << batches + 1 << " (lr " << cfg.lr
                    << "); lower the learning rate";
                throw NumericalError(msg.str());
            }
            adam.step(result.table, grad);
            epoch_loss += loss;
            ++batches;
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
    }
    if (!result.table.all_finite()) throw NumericalError("non-finite parameters after training (lr " + std::to_string(cfg.lr) + ")");
    result.steps = adam.steps();
    return result;
}

KgeEvaluation evaluate_kge(const EmbeddingTable& table, const ScoringModel& model, const kg::KnowledgeGraph& test,
                           const kg::KnowledgeGraph& filter, std::size_t workers) {
    KgeEvaluation out;
    const auto& v = test.vocab();
    std::vector<kg::Triple> kept;
    for (const auto& t : test.triples()) {
        if (t.is_literal()) continue;
        if (t.subject.value >= table.entity_count() || t.object_entity().value >= table.entity_count() ||
            t.relation.value >= table.relation_count()) {
            out.warnings.push_back("query (" + v.entity_name(t.subject) + ", " + v.relation_name(t.relation) + ", " +
                                   v.entity_name(t.object_entity()) + ") has no embedding; skipped");
            continue;
        }
        kept.push_back(t);
    }
    const kg::KnowledgeGraph queries(test.vocab_ptr(), std::move(kept), test.split());
    out.result = eval::evaluate_tail_queries(
        queries, filter, [&](kg::EntityId s, kg::RelationId r) { return score_tails(model, table, s, r); }, workers);
    return out;
}

}  // namespace promptkg::kge
