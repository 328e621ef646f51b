#include "promptkg/prompt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::prompt {

void ScoreVector::set(kg::EntityId e, double score) {
    if (!(score >= 0.0 && score <= 1.0)) throw ContractViolation("score outside [0,1]: " + std::to_string(score));
    scores_.at(e.value) = score;
}

std::size_t ScoreVector::non_floor_count() const {
    return static_cast<std::size_t>(std::count_if(scores_.begin(), scores_.end(), [&](double v) { return v != floor_; }));
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Signature composer_signature(const std::string& instruction) {
    return Signature{
        "composer",
        {{"subject", "the head entity of the query"},
         {"relation", "the relation of the query"},
         {"known_facts", "facts from the knowledge graph about the subject"},
         {"entity_universe", "names of all entities in the graph"}},
        {{"reasoning", "think step by step about which entities could complete the fact"},
         {"candidates", "a bracketed, comma-separated list of entity names, e.g. [a, b]; [] if none"}},
        instruction};
}

Signature scorer_signature(const std::string& instruction) {
    return Signature{
        "scorer",
        {{"subject", "the head entity of the query"},
         {"relation", "the relation of the query"},
         {"known_facts", "facts from the knowledge graph about the subject"},
         {"candidates", "the candidate tail entities to judge"}},
        {{"reasoning", "think step by step about each candidate"},
         {"scores",
          "a ``` fenced block with one line per candidate: entity<TAB>likelihood between 0 and 1<TAB>short reason"}},
        instruction};
}

namespace {

std::string bracket_list(const std::vector<std::string>& names) {
    std::string out = "[";
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
    return out + "]";
}

}  // namespace

Demo make_composer_demo(const std::string& subject, const std::string& relation, const std::string& known_facts,
                        const std::vector<std::string>& answers) {
    Demo d;
    d.inputs = {{"subject", subject}, {"relation", relation}, {"known_facts", known_facts}};
    d.outputs = {{"reasoning", "The known facts and background knowledge about " + subject + " point to these entities."},
                 {"candidates", bracket_list(answers)}};
    return d;
}

Demo make_scorer_demo(const std::string& subject, const std::string& relation, const std::string& known_facts,
                      const std::vector<std::string>& candidates, const std::vector<double>& scores) {
    if (candidates.size() != scores.size()) throw ContractViolation("scorer demo: candidates and scores differ in size");
    Demo d;
    d.inputs = {{"subject", subject}, {"relation", relation}, {"known_facts", known_facts},
                {"candidates", bracket_list(candidates)}};
    std::string block = "```\n";
    for (std::size_t i = 0; i < candidates.size(); ++i)
        block += candidates[i] + '\t' + kg::format_number(scores[i]) + '\t' +
                 (scores[i] >= 0.5 ? "consistent with the known facts" : "not supported") + '\n';
    block += "```";
    d.outputs = {{"reasoning", "Each candidate is checked against the known facts about " + subject + "."},
                 {"scores", block}};
    return d;
}

LinkPredictor::LinkPredictor(std::shared_ptr<lm::LmGateway> gateway, const kg::KnowledgeGraph& context,
                             PromptState state, PipelineOptions opts)
    : gateway_(std::move(gateway)),
      context_(&context),
      state_(std::move(state)),
      opts_(opts),
      composer_sig_(composer_signature(state_.composer_instruction)),
      scorer_sig_(scorer_signature(state_.scorer_instruction)) {
    if (!gateway_) throw ContractViolation("LinkPredictor needs a gateway");
    composer_sig_.validate();
    scorer_sig_.validate();
    const auto& v = context.vocab();
    // Lower-priority keys first so exact names win on collision.
    for (std::uint32_t i = 0; i < v.entity_count(); ++i) {
        const kg::EntityId e{i};
        if (const auto& label = v.entity_label(e)) by_key_.emplace("~" + name_key(*label), e);
        by_key_.emplace("~" + name_key(v.entity_name(e)), e);
    }
    for (std::uint32_t i = 0; i < v.entity_count(); ++i) by_key_["=" + v.entity_name(kg::EntityId{i})] = kg::EntityId{i};
    if (universe_in_prompt()) {
        std::vector<std::string> names;
        names.reserve(v.entity_count());
        for (std::uint32_t i = 0; i < v.entity_count(); ++i) names.push_back(v.entity_text(kg::EntityId{i}));
        std::sort(names.begin(), names.end());
        universe_text_ = bracket_list(names);
    }
}

bool LinkPredictor::universe_in_prompt() const noexcept { return vocab().entity_count() <= opts_.universe_limit; }

std::optional<kg::EntityId> LinkPredictor::resolve(const std::string& text) const {
    if (auto it = by_key_.find("=" + text); it != by_key_.end()) return it->second;
    if (auto it = by_key_.find("~" + name_key(text)); it != by_key_.end()) return it->second;
    return std::nullopt;
}

std::string LinkPredictor::known_facts(kg::EntityId s) const {
    const auto& v = vocab();
    std::vector<std::string> lines;
    std::set<std::uint32_t> expanded{s.value};
    std::vector<kg::EntityId> frontier{s};
    // subject's own facts, then one hop further out
    for (int hop = 0; hop < 2 && lines.size() < opts_.max_context_facts; ++hop) {
        std::vector<kg::EntityId> next;
        for (auto e : frontier) {
            for (const auto& t : kg::neighborhood(*context_, e)) {
                if (lines.size() >= opts_.max_context_facts) break;
                lines.push_back("(" + v.entity_text(t.subject) + ", " + v.relation_text(t.relation) + ", " +
                                kg::render_object(v, t.object, true) + ")");
                if (!t.is_literal() && expanded.insert(t.object_entity().value).second)
                    next.push_back(t.object_entity());
            }
        }
        frontier = std::move(next);
    }
    std::string out;
    for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
    return out;
}

std::size_t LinkPredictor::render_cap(int max_tokens) const {
    const std::size_t budget = gateway_->options().context_budget;
    const std::size_t reserve = static_cast<std::size_t>(std::max(0, max_tokens)) + 4;
    const std::size_t room = budget > reserve ? budget - reserve : 0;
    return std::min(state_.token_cap, room);
}

std::string LinkPredictor::call(const RenderedPrompt& p, int max_tokens) const {
    return gateway_->complete(lm::user_request(p.text, max_tokens)).text;
}

RenderedPrompt LinkPredictor::render_composer(kg::EntityId s, kg::RelationId r) const {
    const auto& v = vocab();
    std::map<std::string, std::string> query{{"subject", v.entity_text(s)},
                                             {"relation", v.relation_text(r)},
                                             {"known_facts", known_facts(s)},
                                             {"entity_universe", universe_text_}};
    return initialize_prompt(composer_sig_, state_.composer_demos, query, render_cap(opts_.composer_max_tokens),
                             gateway_->options().chars_per_token);
}

RenderedPrompt LinkPredictor::render_scorer(kg::EntityId s, kg::RelationId r,
                                            std::span<const CandidatePrediction> candidates) const {
    const auto& v = vocab();
    std::vector<std::string> names;
    for (const auto& c : candidates) names.push_back(v.entity_text(c.entity));
    std::map<std::string, std::string> query{{"subject", v.entity_text(s)},
                                             {"relation", v.relation_text(r)},
                                             {"known_facts", known_facts(s)},
                                             {"candidates", bracket_list(names)}};
    return initialize_prompt(scorer_sig_, state_.scorer_demos, query, render_cap(opts_.scorer_max_tokens),
                             gateway_->options().chars_per_token);
}

namespace {

// A failed computation is reported to every waiter and then forgotten.
template <typename Key, typename Value, typename Fn>
Value single_flight(std::mutex& mutex, std::map<Key, std::shared_future<Value>>& cache, const Key& key, Fn compute) {
    std::promise<Value> promise;
    std::optional<std::shared_future<Value>> pending;
    {
        std::lock_guard lock(mutex);
        if (auto it = cache.find(key); it != cache.end())
            pending = it->second;
        else
            cache.emplace(key, promise.get_future().share());
    }
    if (pending) return pending->get();
    try {
        Value v = compute();
        promise.set_value(v);
        return v;
    } catch (...) {
        promise.set_exception(std::current_exception());
        std::lock_guard lock(mutex);
        cache.erase(key);
        throw;
    }
}

}  // namespace

ComposeResult LinkPredictor::compose_candidates(kg::EntityId s, kg::RelationId r) const {
    if (!opts_.cache) return compose_uncached(s, r);
    return single_flight(cache_mutex_, compose_cache_, std::make_pair(s.value, r.value),
                         [&] { return compose_uncached(s, r); });
}

ScoreResult LinkPredictor::score_candidates(kg::EntityId s, kg::RelationId r,
                                            std::span<const CandidatePrediction> candidates) const {
    if (candidates.empty() || !opts_.cache) return score_uncached(s, r, candidates);
    std::string key = std::to_string(s.value) + ':' + std::to_string(r.value);
    for (const auto& c : candidates) key += ',' + std::to_string(c.entity.value);
    return single_flight(cache_mutex_, score_cache_, key, [&] { return score_uncached(s, r, candidates); });
}

ComposeResult LinkPredictor::compose_uncached(kg::EntityId s, kg::RelationId r) const {
    const auto prompt = render_composer(s, r);
    const std::string answer = call(prompt, opts_.composer_max_tokens);
    ComposeResult result;
    std::set<std::uint32_t> seen;
    for (const auto& item : parse_candidates(answer)) {
        auto e = resolve(item.name);
        if (!e) {
            result.unknown_names.push_back(item.name);
            continue;
        }
        if (result.candidates.size() >= opts_.max_candidates || !seen.insert(e->value).second) continue;
        result.candidates.push_back({*e, opts_.floor, {}});
    }
    return result;
}

ScoreResult LinkPredictor::score_uncached(kg::EntityId s, kg::RelationId r,
                                          std::span<const CandidatePrediction> candidates) const {
    const auto& v = vocab();
    ScoreResult result{ScoreVector(v.entity_count(), opts_.floor), {}, {}};
    if (candidates.empty()) return result;

    const auto prompt = render_scorer(s, r, candidates);
    const std::string answer = call(prompt, opts_.scorer_max_tokens);

    std::map<std::uint32_t, std::pair<double, std::string>> raw;  // first mention wins
    std::set<std::uint32_t> wanted;
    for (const auto& c : candidates) wanted.insert(c.entity.value);
    for (const auto& item : parse_scores(answer)) {
        auto e = resolve(item.name);
        if (!e || !wanted.contains(e->value)) {
            result.warnings.push_back("scorer mentioned non-candidate '" + item.name + "'");
            continue;
        }
        if (!item.score || !std::isfinite(*item.score)) continue;
        raw.emplace(e->value, std::make_pair(*item.score, item.rationale));
    }

    bool squash = opts_.scale == ScoreScale::Logit;
    if (opts_.scale == ScoreScale::Auto)
        for (const auto& [id, sr] : raw)
            if (sr.first < 0.0 || sr.first > 1.0) squash = true;

    std::set<std::uint32_t> done;
    for (const auto& c : candidates) {
        if (!done.insert(c.entity.value).second) continue;
        auto it = raw.find(c.entity.value);
        if (it == raw.end()) {
            result.warnings.push_back("scorer omitted candidate '" + v.entity_text(c.entity) + "'");
            result.scored.push_back({c.entity, opts_.floor, {}});
            continue;
        }
        const double x = it->second.first;
        const double p = squash ? sigmoid(x) : std::clamp(x, 0.0, 1.0);
        result.scores.set(c.entity, p);
        result.scored.push_back({c.entity, p, it->second.second});
    }
    return result;
}

double LinkPredictor::score_triple(kg::EntityId h, kg::RelationId r, kg::EntityId t) const {
    auto candidates = compose_candidates(h, r).candidates;
    if (std::none_of(candidates.begin(), candidates.end(), [&](const auto& c) { return c.entity == t; }))
        candidates.push_back({t, opts_.floor, {}});
    return score_candidates(h, r, candidates).scores[t];
}

ScoreVector LinkPredictor::predict(kg::EntityId s, kg::RelationId r) const {
    const auto composed = compose_candidates(s, r);
    return score_candidates(s, r, composed.candidates).scores;
}

}  // namespace promptkg::prompt
