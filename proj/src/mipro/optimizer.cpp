#include "promptkg/mipro/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <ctime>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/eval/rank.hpp"

namespace promptkg::mipro {

std::string to_string(Metric m) { return m == Metric::CrossEntropy ? "cross-entropy" : "mrr"; }

Metric parse_metric(std::string_view s) {
    const auto v = to_lower(s);
    if (v == "cross-entropy" || v == "ce" || v == "crossentropy") return Metric::CrossEntropy;
    if (v == "mrr") return Metric::Mrr;
    throw ContractViolation("unknown metric '" + std::string(s) + "'");
}

Direction direction_of(Metric m) { return m == Metric::CrossEntropy ? Direction::Minimize : Direction::Maximize; }

double worst_score(Metric m) { return m == Metric::CrossEntropy ? -std::log(kProbClamp) : 0.0; }

double cross_entropy(std::span<const double> probabilities, std::span<const int> labels) {
    if (probabilities.empty() || probabilities.size() != labels.size())
        throw ContractViolation("cross_entropy: empty or mismatched batch");
    double sum = 0.0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
        const double p = std::clamp(probabilities[i], kProbClamp, 1.0 - kProbClamp);
        sum += labels[i] == 1 ? -std::log(p) : -std::log(1.0 - p);
    }
    return sum / static_cast<double>(probabilities.size());
}

double evaluate_q(std::span<const LabeledTriple> batch, const std::function<double(const LabeledTriple&)>& probability,
                  std::size_t workers) {
    if (batch.empty()) throw ContractViolation("evaluate_q: empty batch");
    std::vector<double> p(batch.size());
    std::vector<int> y(batch.size());
    parallel_for(batch.size(), workers, [&](std::size_t i) {
        p[i] = probability(batch[i]);
        y[i] = batch[i].label;
    });
    return cross_entropy(p, y);
}

double evaluate_q(const prompt::LinkPredictor& predictor, std::span<const LabeledTriple> batch, std::size_t workers) {
    return evaluate_q(
        batch, [&](const LabeledTriple& x) { return predictor.score_triple(x.subject, x.relation, x.object); },
        workers);
}

std::vector<LabeledTriple> build_q_panel(const kg::KnowledgeGraph& source, const kg::KnowledgeGraph& known,
                                         std::size_t size, std::uint64_t seed) {
    std::vector<kg::Triple> pool;
    for (const auto& t : source.triples())
        if (!t.is_literal()) pool.push_back(t);
    if (pool.empty()) throw ContractViolation("Q panel source has no entity triples");
    Rng rng(substream_seed(seed, "q-panel"));
    stable_shuffle(pool, rng);
    const std::size_t n_pos = std::min(pool.size(), std::max<std::size_t>(1, size / 2));
    const auto n_entities = static_cast<std::uint32_t>(known.vocab().entity_count());

    std::vector<LabeledTriple> out;
    for (std::size_t i = 0; i < n_pos; ++i) {
        const auto& t = pool[i];
        out.push_back({t.subject, t.relation, t.object_entity(), 1});
        for (int tries = 0; tries < 100; ++tries) {
            const kg::EntityId e{static_cast<std::uint32_t>(uniform_index(rng, n_entities))};
            if (known.contains(t.subject, t.relation, e) || source.contains(t.subject, t.relation, e)) continue;
            out.push_back({t.subject, t.relation, e, 0});
            break;
        }
    }
    return out;
}

double panel_mrr(const prompt::LinkPredictor& predictor, std::span<const LabeledTriple> panel,
                 const kg::KnowledgeGraph& known, std::size_t workers) {
    std::vector<const LabeledTriple*> positives;
    for (const auto& x : panel)
        if (x.label == 1) positives.push_back(&x);
    if (positives.empty()) throw ContractViolation("panel has no positives");
    std::vector<std::int64_t> ranks(positives.size());
    parallel_for(positives.size(), workers, [&](std::size_t i) {
        const auto& x = *positives[i];
        const auto scores = predictor.predict(x.subject, x.relation);
        std::vector<kg::EntityId> filter;
        for (const auto& o : known.objects(x.subject, x.relation))
            if (const auto* e = std::get_if<kg::EntityId>(&o)) filter.push_back(*e);
        ranks[i] = eval::rank_true_entity(scores.values(), x.object, filter, eval::RankSetting::Filtered).rank();
    });
    return eval::compute_metrics(ranks).mrr;
}

std::string to_string(Preset p) { return p == Preset::Light ? "light" : "medium"; }

Preset parse_preset(std::string_view s) {
    const auto v = to_lower(s);
    if (v == "light") return Preset::Light;
    if (v == "medium") return Preset::Medium;
    throw ContractViolation("unknown preset '" + std::string(s) + "' (light|medium)");
}

OptimizerConfig preset_config(Preset p) {
    OptimizerConfig c;
    if (p == Preset::Light) {
        c.trials = 10;
        c.instructions = 3;
        c.demo_subsets = 3;
    } else {
        c.trials = 30;
        c.instructions = 8;
        c.demo_subsets = 6;
    }
    return c;
}

void TrialHistory::record(Trial t) {
    if (!std::isfinite(t.score)) throw ContractViolation("trial score must be finite");
    trials_.push_back(std::move(t));
    const double s = trials_.back().score;
    if (!best_) {
        best_ = trials_.size() - 1;
        return;
    }
    const double cur = trials_[*best_].score;
    if (direction_ == Direction::Minimize ? s < cur : s > cur) best_ = trials_.size() - 1;
}

const Trial& TrialHistory::best() const {
    if (!best_) throw ContractViolation("empty trial history");
    return trials_[*best_];
}

std::vector<double> TrialHistory::best_so_far() const {
    std::vector<double> out;
    for (const auto& t : trials_) {
        if (out.empty())
            out.push_back(t.score);
        else
            out.push_back(direction_ == Direction::Minimize ? std::min(out.back(), t.score)
                                                            : std::max(out.back(), t.score));
    }
    return out;
}

std::vector<Observation> TrialHistory::observations() const {
    std::vector<Observation> out;
    out.reserve(trials_.size());
    for (const auto& t : trials_) out.push_back({t.candidate, t.score});
    return out;
}

namespace {

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream s;
    s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return s.str();
}

}  // namespace

OptimizeResult optimize(const CandidatePool& pool, const prompt::PromptState& base, const Objective& objective,
                        const OptimizerConfig& config) {
    pool.validate();
    if (config.trials == 0) throw ContractViolation("optimize: trials must be >= 1");
    const auto shape = shape_of(pool);
    TpeOptions tpe;
    tpe.gamma = config.gamma;
    tpe.smoothing = config.smoothing;
    tpe.startup = startup_trials(config.trials);
    tpe.direction = direction_of(config.metric);

    OptimizeResult res{base, 0.0, TrialHistory(tpe.direction), {}};
    const std::uint64_t seed = substream_seed(config.seed, "optimizer");
    for (std::size_t t = 1; t <= config.trials; ++t) {
        Trial trial;
        trial.index = t;
        trial.candidate = t == 1 ? CandidateIndex{} : suggest_next(res.history.observations(), shape, seed, tpe);
        trial.state = materialize(pool, trial.candidate, base);
        trial.timestamp = utc_now();
        const auto start = std::chrono::steady_clock::now();
        try {
            trial.score = objective(trial.state);
            if (!std::isfinite(trial.score)) throw Error("objective returned a non-finite score");
        } catch (const std::exception& e) {
            trial.failed = true;
            trial.error = e.what();
            trial.score = worst_score(config.metric);
            res.warnings.push_back("trial " + std::to_string(t) + " failed: " + e.what());
        }
        trial.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        res.history.record(std::move(trial));
    }
    res.best = res.history.best().state;
    res.best_score = res.history.best().score;
    return res;
}

LmOptimizeResult optimize_with_lm(const LmOptimizeInputs& in, const OptimizerConfig& config) {
    if (!in.gateway || !in.train || !in.valid || !in.known) throw ContractViolation("optimize_with_lm: missing input");
    LmOptimizeResult out;
    std::vector<std::string> warnings;

    const auto summary = task_summary(*in.train);
    auto composer = propose_instruction_candidates(*in.gateway, in.seed, Stage::Composer, config.instructions, summary);
    auto scorer = propose_instruction_candidates(*in.gateway, in.seed, Stage::Scorer, config.instructions, summary);
    out.pool.composer_instructions = std::move(composer.instructions);
    out.pool.scorer_instructions = std::move(scorer.instructions);
    warnings.insert(warnings.end(), composer.warnings.begin(), composer.warnings.end());
    warnings.insert(warnings.end(), scorer.warnings.begin(), scorer.warnings.end());

    const auto examples = build_few_shot_examples(*in.train, config.few_shot_limit, config.seed);
    const std::size_t k = std::min(config.demo_size, examples.size());
    out.pool.demo_subsets =
        sample_demo_subsets(examples, k == 0 ? 1 : config.demo_subsets, k, substream_seed(config.seed, "demos"));
    if (k < config.demo_size) warnings.push_back("few-shot pool smaller than demo size; using k=" + std::to_string(k));

    out.panel = build_q_panel(*in.valid, *in.known, config.minibatch, config.seed);

    auto objective = [&](const prompt::PromptState& st) {
        prompt::LinkPredictor predictor(in.gateway, *in.train, st, in.pipeline);
        return config.metric == Metric::CrossEntropy ? evaluate_q(predictor, out.panel, config.workers)
                                                     : panel_mrr(predictor, out.panel, *in.known, config.workers);
    };
    out.result = optimize(out.pool, in.seed, objective, config);
    out.result.warnings.insert(out.result.warnings.begin(), warnings.begin(), warnings.end());
    return out;
}

void write_trial_log(std::ostream& out, const TrialHistory& h) {
    out << "trial\tcomposer\tscorer\tdemos\tstate\tscore\tbest\tstatus\n";
    const auto best = h.best_so_far();
    for (std::size_t i = 0; i < h.trials().size(); ++i) {
        const auto& t = h.trials()[i];
        out << t.index << '\t' << t.candidate.composer << '\t' << t.candidate.scorer << '\t' << t.candidate.demos
            << '\t' << prompt::state_hash(t.state) << '\t' << std::setprecision(10) << t.score << '\t' << best[i]
            << '\t' << (t.failed ? "failed" : "ok") << '\n';
    }
}

void write_trial_timing(std::ostream& out, const TrialHistory& h) {
    out << "trial\ttimestamp\twall_seconds\n";
    for (const auto& t : h.trials())
        out << t.index << '\t' << t.timestamp << '\t' << std::fixed << std::setprecision(3) << t.wall_seconds
            << std::defaultfloat << '\n';
}

}  // namespace promptkg::mipro
