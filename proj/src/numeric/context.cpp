#include "promptkg/numeric/context.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "promptkg/common/util.hpp"
#include "promptkg/lm/gateway.hpp"
#include "promptkg/numeric/metrics.hpp"

namespace promptkg::numeric {

std::string prompt_number(double value) {
    if (!std::isfinite(value)) return value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
    if (value == 0.0) return "0";
    std::ostringstream sci;
    sci << std::scientific << std::setprecision(5) << value;
    const double rounded = std::stod(sci.str());
    const int exponent = static_cast<int>(std::floor(std::log10(std::fabs(rounded))));
    const int decimals = std::max(0, 5 - exponent);
    std::ostringstream out;
    out << std::fixed << std::setprecision(decimals) << rounded;
    std::string s = out.str();
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    return s == "-0" ? "0" : s;
}

std::string render_fact(const kg::Vocabulary& v, const kg::Triple& t) {
    const std::string object = t.is_literal() ? prompt_number(t.object_value()) : v.entity_text(t.object_entity());
    return "(" + v.entity_text(t.subject) + ", " + v.relation_text(t.relation) + ", " + object + ")";
}

std::size_t line_cost(const kg::Vocabulary& v, const kg::Triple& t, double chars_per_token) {
    return lm::estimate_tokens(render_fact(v, t) + "\n", chars_per_token);
}

std::vector<kg::Triple> subject_set(const kg::KnowledgeGraph& g, const NumericQuery& q) {
    std::vector<kg::Triple> out;
    for (auto i : g.by_subject(q.subject))
        if (g.triples()[i].relation != q.property) out.push_back(g.triples()[i]);
    return out;
}

std::vector<kg::Triple> relation_set(const kg::KnowledgeGraph& g, const NumericQuery& q) {
    std::vector<kg::Triple> out;
    for (auto i : g.by_relation(q.property))
        if (g.triples()[i].subject != q.subject) out.push_back(g.triples()[i]);
    return out;
}

std::vector<kg::Triple> relation_sampling_trace(const kg::KnowledgeGraph& g, const NumericQuery& q,
                                                std::uint64_t seed, double outlier_z) {
    auto pool = relation_set(g, q);
    if (outlier_z > 0) {
        std::vector<double> values;
        std::vector<std::size_t> literal_at;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (pool[i].is_literal()) {
                values.push_back(pool[i].object_value());
                literal_at.push_back(i);
            }
        const auto keep = inlier_positions(values, outlier_z);
        std::vector<bool> drop(pool.size(), false);
        for (auto i : literal_at) drop[i] = true;
        for (auto k : keep) drop[literal_at[k]] = false;
        std::vector<kg::Triple> kept;
        for (std::size_t i = 0; i < pool.size(); ++i)
            if (!drop[i]) kept.push_back(pool[i]);
        pool = std::move(kept);
    }
    Rng rng(substream_seed(seed, "numeric-context/" + std::to_string(q.subject.value) + "/" +
                                     std::to_string(q.property.value)));
    stable_shuffle(pool, rng);
    return pool;
}

ContextBundle retrieve_context(const kg::KnowledgeGraph& g, const NumericQuery& q, const ContextOptions& opts,
                               std::uint64_t seed) {
    ContextBundle b;
    const auto& v = g.vocab();
    for (const auto& t : subject_set(g, q)) {
        const auto c = line_cost(v, t, opts.chars_per_token);
        if (b.token_cost + c > opts.budget) break;
        b.subject_context.push_back(t);
        b.token_cost += c;
    }
    for (const auto& t : relation_sampling_trace(g, q, seed, opts.outlier_z)) {
        const auto c = line_cost(v, t, opts.chars_per_token);
        if (b.token_cost + c > opts.budget) continue;
        b.relation_context.push_back(t);
        b.token_cost += c;
    }
    return b;
}

}  // namespace promptkg::numeric
