#pragma once
// Trial loop: suggest a candidate, evaluate Q on a fixed panel, keep the best.

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "promptkg/kg/graph.hpp"
#include "promptkg/lm/gateway.hpp"
#include "promptkg/mipro/pool.hpp"
#include "promptkg/mipro/tpe.hpp"
#include "promptkg/prompt/pipeline.hpp"

namespace promptkg::mipro {

enum class Metric { CrossEntropy, Mrr };
std::string to_string(Metric m);
Metric parse_metric(std::string_view s);
Direction direction_of(Metric m);

constexpr double kProbClamp = 1e-7;

// Score recorded for a trial whose evaluation threw.
double worst_score(Metric m);

struct LabeledTriple {
    kg::EntityId subject;
    kg::RelationId relation;
    kg::EntityId object;
    int label = 1;  // 1 positive, 0 corrupted
};

// Mean of -y log p - (1-y) log(1-p), p clamped to [1e-7, 1 - 1e-7].
double cross_entropy(std::span<const double> probabilities, std::span<const int> labels);

// evaluate_q over a panel with an arbitrary scoring function.
double evaluate_q(std::span<const LabeledTriple> batch,
                  const std::function<double(const LabeledTriple&)>& probability, std::size_t workers = 1);
double evaluate_q(const prompt::LinkPredictor& predictor, std::span<const LabeledTriple> batch,
                  std::size_t workers = 1);

// Fixed evaluation panel: up to size/2 positives sampled from `source`, each
// paired with one tail corruption drawn uniformly over the vocabulary and
// filtered against `known`.
std::vector<LabeledTriple> build_q_panel(const kg::KnowledgeGraph& source, const kg::KnowledgeGraph& known,
                                         std::size_t size, std::uint64_t seed);

// Filtered MRR of the panel's positives under `predictor`.
double panel_mrr(const prompt::LinkPredictor& predictor, std::span<const LabeledTriple> panel,
                 const kg::KnowledgeGraph& known, std::size_t workers = 1);

enum class Preset { Light, Medium };
std::string to_string(Preset p);
Preset parse_preset(std::string_view s);

struct OptimizerConfig {
    std::size_t trials = 10;             // T
    std::size_t instructions = 3;        // per stage, seed included
    std::size_t demo_subsets = 3;        // zero-shot included
    std::size_t demo_size = 3;           // k
    std::size_t few_shot_limit = 30;
    Metric metric = Metric::CrossEntropy;
    std::size_t minibatch = 16;
    std::uint64_t seed = 0;
    double gamma = 0.25;
    double smoothing = 1.0;
    std::size_t workers = 1;             // per-example concurrency inside a trial
};

OptimizerConfig preset_config(Preset p);

struct Trial {
    std::size_t index = 0;  // 1-based
    CandidateIndex candidate;
    prompt::PromptState state;
    double score = 0.0;
    bool failed = false;
    std::string error;
    double wall_seconds = 0.0;
    std::string timestamp;  // ISO-8601 UTC
};

class TrialHistory {
public:
    explicit TrialHistory(Direction d = Direction::Minimize) : direction_(d) {}

    // Appends; the best is replaced only by a strictly better score.
    void record(Trial t);
    const std::vector<Trial>& trials() const noexcept { return trials_; }
    bool empty() const noexcept { return trials_.empty(); }
    const Trial& best() const;
    std::vector<double> best_so_far() const;
    Direction direction() const noexcept { return direction_; }
    std::vector<Observation> observations() const;

private:
    Direction direction_;
    std::vector<Trial> trials_;
    std::optional<std::size_t> best_;
};

using Objective = std::function<double(const prompt::PromptState&)>;

struct OptimizeResult {
    prompt::PromptState best;
    double best_score = 0.0;
    TrialHistory history;
    std::vector<std::string> warnings;
};

// Runs exactly config.trials trials over `pool`. Trial 1 evaluates the seed
// position (0, 0, 0); later trials follow suggest_next.
OptimizeResult optimize(const CandidatePool& pool, const prompt::PromptState& base, const Objective& objective,
                        const OptimizerConfig& config);

// Full LM-backed run: builds the pool from the seed state and `train`,
// scores candidates on a fixed panel drawn from `valid`.
struct LmOptimizeInputs {
    std::shared_ptr<lm::LmGateway> gateway;
    const kg::KnowledgeGraph* train = nullptr;  // context + few-shot source
    const kg::KnowledgeGraph* valid = nullptr;  // panel source
    const kg::KnowledgeGraph* known = nullptr;  // filter for negatives and MRR
    prompt::PromptState seed;
    prompt::PipelineOptions pipeline;
};

struct LmOptimizeResult {
    OptimizeResult result;
    CandidatePool pool;
    std::vector<LabeledTriple> panel;
};

LmOptimizeResult optimize_with_lm(const LmOptimizeInputs& in, const OptimizerConfig& config);

// One line per trial: index, candidate position, state hash, score, failure.
void write_trial_log(std::ostream& out, const TrialHistory& h);
// One line per trial: index, timestamp, wall seconds.
void write_trial_timing(std::ostream& out, const TrialHistory& h);

}  // namespace promptkg::mipro
