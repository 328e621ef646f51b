#include "promptkg/enrich/enrich.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/kg/io.hpp"

namespace promptkg::enrich {

void EnrichmentConfig::validate() const {
    if (!(theta > 0.5)) throw ContractViolation("enrichment threshold must exceed 0.5, got " + std::to_string(theta));
    if (max_candidates_per_pair == 0) throw ContractViolation("max_candidates_per_pair must be positive");
}

namespace {

bool triple_less(const kg::Triple& a, const kg::Triple& b) {
    auto key = [](const kg::Triple& t) {
        return std::make_tuple(t.subject.value, t.relation.value, t.object_entity().value);
    };
    return key(a) < key(b);
}

struct PairOutcome {
    std::vector<ScoredTriple> found;
    std::size_t candidates = 0, known = 0, below = 0;
    std::string error;
};

}  // namespace

EnrichmentResult enrich(const kg::KnowledgeGraph& train, const prompt::LinkPredictor& predictor,
                        const EnrichmentConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<kg::EntityId, kg::RelationId>> pairs;
    for (const auto& [key, objects] : train.sp_index()) {
        const kg::RelationId r{key.second};
        if (train.vocab().relation_kind(r) != kg::RelationKind::ObjectProperty) continue;
        pairs.emplace_back(kg::EntityId{key.first}, r);
    }

    std::vector<PairOutcome> outcomes(pairs.size());
    parallel_for(pairs.size(), cfg.workers, [&](std::size_t i) {
        const auto [s, p] = pairs[i];
        auto& out = outcomes[i];
        try {
            auto candidates = predictor.compose_candidates(s, p).candidates;
            if (candidates.size() > cfg.max_candidates_per_pair) candidates.resize(cfg.max_candidates_per_pair);
            out.candidates = candidates.size();
            const auto scored = predictor.score_candidates(s, p, candidates);
            for (const auto& c : scored.scored) {
                if (!(c.raw_score > cfg.theta)) {
                    ++out.below;
                } else if (train.contains(s, p, c.entity)) {
                    ++out.known;
                } else {
                    out.found.push_back({kg::Triple{s, p, c.entity}, c.raw_score});
                }
            }
        } catch (const std::exception& e) {
            out = PairOutcome{};
            out.error = train.vocab().entity_name(s) + " " + train.vocab().relation_name(p) + ": " + e.what();
        }
    });

    EnrichmentResult res;
    res.report.pairs = pairs.size();
    for (auto& o : outcomes) {
        if (!o.error.empty()) {
            ++res.report.failed_pairs;
            res.report.errors.push_back(std::move(o.error));
            continue;
        }
        res.report.candidates += o.candidates;
        res.report.known += o.known;
        res.report.below_threshold += o.below;
        res.missing.triples.insert(res.missing.triples.end(), o.found.begin(), o.found.end());
    }
    std::sort(res.missing.triples.begin(), res.missing.triples.end(),
              [](const ScoredTriple& a, const ScoredTriple& b) { return triple_less(a.triple, b.triple); });
    return res;
}

kg::KnowledgeGraph augmented_graph(const kg::KnowledgeGraph& train, const MissingTripleSet& missing) {
    std::vector<kg::Triple> all(train.triples().begin(), train.triples().end());
    for (const auto& m : missing.triples) all.push_back(m.triple);
    return kg::KnowledgeGraph(train.vocab_ptr(), std::move(all), train.split());
}

void write_augmented_split(const kg::KnowledgeGraph& train, const MissingTripleSet& missing,
                           const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    kg::write_triples(out, train.vocab(), train.triples());
    std::vector<kg::Triple> extra;
    for (const auto& m : missing.triples)
        if (!train.contains(m.triple)) extra.push_back(m.triple);
    std::sort(extra.begin(), extra.end(), triple_less);
    kg::write_triples(out, train.vocab(), extra);
    out.flush();
    if (!out) throw Error("write failed for " + path.string());
}

void write_missing_report(const kg::KnowledgeGraph& train, const MissingTripleSet& missing,
                          const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    const auto& v = train.vocab();
    out << "subject\trelation\tobject\tscore\n";
    for (const auto& m : missing.triples)
        out << v.entity_name(m.triple.subject) << '\t' << v.relation_name(m.triple.relation) << '\t'
            << v.entity_name(m.triple.object_entity()) << '\t' << std::setprecision(6) << m.score << '\n';
    out.flush();
    if (!out) throw Error("write failed for " + path.string());
}

}  // namespace promptkg::enrich
