#pragma once
// Two-stage link predictor: a composer call proposes tail candidates for
// (s, r, ?), a scorer call assigns each a likelihood. Together they form the
// string-parameterized scoring function over the entity vocabulary.

#include <cstddef>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptkg/kg/graph.hpp"
#include "promptkg/lm/gateway.hpp"
#include "promptkg/prompt/parse.hpp"
#include "promptkg/prompt/render.hpp"
#include "promptkg/prompt/state.hpp"

namespace promptkg::prompt {

// Dense entity -> score table. Entities never set hold `floor`.
class ScoreVector {
public:
    ScoreVector() = default;
    ScoreVector(std::size_t n_entities, double floor) : scores_(n_entities, floor), floor_(floor) {}

    std::size_t size() const noexcept { return scores_.size(); }
    double floor() const noexcept { return floor_; }
    double operator[](kg::EntityId e) const { return scores_.at(e.value); }
    void set(kg::EntityId e, double score);  // score in [0, 1]
    std::span<const double> values() const noexcept { return scores_; }
    // Entities whose score differs from the floor.
    std::size_t non_floor_count() const;

private:
    std::vector<double> scores_;
    double floor_ = 0.0;
};

struct CandidatePrediction {
    kg::EntityId entity;
    double raw_score = 0.0;  // in [0, 1] once scored
    std::string rationale;
    bool operator==(const CandidatePrediction&) const = default;
};

// How raw scorer numbers become probabilities.
//   Auto:        sigmoid applied to a whole response iff any value lies outside [0, 1]
//   Probability: values clamped to [0, 1]
//   Logit:       sigmoid always
enum class ScoreScale { Auto, Probability, Logit };

struct PipelineOptions {
    std::size_t universe_limit = 500;     // entity list shown to the composer up to this size
    std::size_t max_context_facts = 30;
    int composer_max_tokens = 1024;
    int scorer_max_tokens = 1024;
    double floor = 0.0;
    std::size_t max_candidates = 64;
    ScoreScale scale = ScoreScale::Auto;
    bool cache = true;
};

struct ComposeResult {
    std::vector<CandidatePrediction> candidates;  // emission order, deduplicated
    std::vector<std::string> unknown_names;       // discarded, one warning each
};

struct ScoreResult {
    ScoreVector scores;
    std::vector<CandidatePrediction> scored;  // candidates with their final score
    std::vector<std::string> warnings;
};

double sigmoid(double x);

Signature composer_signature(const std::string& instruction);
Signature scorer_signature(const std::string& instruction);

// Composer and scorer demos for one (s, r) group with known answers.
Demo make_composer_demo(const std::string& subject, const std::string& relation, const std::string& known_facts,
                        const std::vector<std::string>& answers);
Demo make_scorer_demo(const std::string& subject, const std::string& relation, const std::string& known_facts,
                      const std::vector<std::string>& candidates, const std::vector<double>& scores);

class LinkPredictor {
public:
    // `context` supplies the known facts and the entity vocabulary; it must
    // outlive the predictor.
    LinkPredictor(std::shared_ptr<lm::LmGateway> gateway, const kg::KnowledgeGraph& context, PromptState state,
                  PipelineOptions opts = {});

    ComposeResult compose_candidates(kg::EntityId s, kg::RelationId r) const;
    ScoreResult score_candidates(kg::EntityId s, kg::RelationId r,
                                 std::span<const CandidatePrediction> candidates) const;
    // score_candidates(s, r, compose(s, r) ∪ {t})[t]
    double score_triple(kg::EntityId h, kg::RelationId r, kg::EntityId t) const;
    ScoreVector predict(kg::EntityId s, kg::RelationId r) const;

    // Prompt inputs for a query, as shown to the LM.
    std::string known_facts(kg::EntityId s) const;
    bool universe_in_prompt() const noexcept;

    RenderedPrompt render_composer(kg::EntityId s, kg::RelationId r) const;
    RenderedPrompt render_scorer(kg::EntityId s, kg::RelationId r,
                                 std::span<const CandidatePrediction> candidates) const;

    const PromptState& state() const noexcept { return state_; }
    const PipelineOptions& options() const noexcept { return opts_; }
    const kg::Vocabulary& vocab() const noexcept { return context_->vocab(); }

    // Resolves an LM-emitted name to an entity: exact name, then
    // case-insensitive match against names and labels.
    std::optional<kg::EntityId> resolve(const std::string& text) const;

private:
    std::size_t render_cap(int max_tokens) const;
    std::string call(const RenderedPrompt& p, int max_tokens) const;

    std::shared_ptr<lm::LmGateway> gateway_;
    const kg::KnowledgeGraph* context_;
    PromptState state_;
    PipelineOptions opts_;
    Signature composer_sig_;
    Signature scorer_sig_;
    std::map<std::string, kg::EntityId> by_key_;
    std::string universe_text_;

    ComposeResult compose_uncached(kg::EntityId s, kg::RelationId r) const;
    ScoreResult score_uncached(kg::EntityId s, kg::RelationId r, std::span<const CandidatePrediction> candidates) const;

    // Single-flight: concurrent requests for one key share the first caller's result,
    // so the number of LM calls does not depend on thread timing.
    mutable std::mutex cache_mutex_;
    mutable std::map<std::pair<std::uint32_t, std::uint32_t>, std::shared_future<ComposeResult>> compose_cache_;
    mutable std::map<std::string, std::shared_future<ScoreResult>> score_cache_;
};

}  // namespace promptkg::prompt
