#include "promptkg/mipro/tpe.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::mipro {

PoolShape shape_of(const CandidatePool& pool) {
    return {pool.composer_instructions.size(), pool.scorer_instructions.size(), pool.demo_subsets.size()};
}

std::size_t startup_trials(std::size_t total_trials) {
    return std::max<std::size_t>(4, (total_trials + 4) / 5);
}

namespace {

struct Counts {
    std::vector<double> composer, scorer, demos;
    double n = 0;
    explicit Counts(PoolShape s) : composer(s.composer, 0.0), scorer(s.scorer, 0.0), demos(s.demos, 0.0) {}
    void add(CandidateIndex c) {
        composer[c.composer] += 1;
        scorer[c.scorer] += 1;
        demos[c.demos] += 1;
        n += 1;
    }
    double density(CandidateIndex c, double alpha) const {
        auto p = [&](const std::vector<double>& v, std::size_t i) {
            return (v[i] + alpha) / (n + alpha * static_cast<double>(v.size()));
        };
        return p(composer, c.composer) * p(scorer, c.scorer) * p(demos, c.demos);
    }
};

}  // namespace

std::vector<double> density_ratios(std::span<const Observation> history, PoolShape shape, const TpeOptions& opts) {
    if (shape.size() == 0) throw ContractViolation("empty candidate pool");
    std::vector<std::size_t> order(history.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return opts.direction == Direction::Minimize ? history[a].score < history[b].score
                                                     : history[a].score > history[b].score;
    });
    const auto n_good = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(opts.gamma * static_cast<double>(history.size()))));
    Counts good(shape), bad(shape);
    for (std::size_t i = 0; i < order.size(); ++i) (i < n_good ? good : bad).add(history[order[i]].candidate);

    std::vector<double> out(shape.size());
    for (std::size_t f = 0; f < out.size(); ++f) {
        const auto c = shape.unflat(f);
        out[f] = good.density(c, opts.smoothing) / bad.density(c, opts.smoothing);
    }
    return out;
}

CandidateIndex suggest_next(std::span<const Observation> history, PoolShape shape, std::uint64_t seed,
                            const TpeOptions& opts) {
    if (shape.size() == 0) throw ContractViolation("empty candidate pool");
    Rng rng(substream_seed(seed, "tpe/" + std::to_string(history.size())));

    std::set<std::size_t> evaluated;
    for (const auto& o : history) evaluated.insert(shape.flat(o.candidate));
    const bool fresh_left = evaluated.size() < shape.size();
    auto eligible = [&](std::size_t f) { return !fresh_left || !evaluated.contains(f); };

    std::vector<std::size_t> best;
    if (history.size() < opts.startup) {
        for (std::size_t f = 0; f < shape.size(); ++f)
            if (eligible(f)) best.push_back(f);
    } else {
        const auto ratio = density_ratios(history, shape, opts);
        double top = -1.0;
        for (std::size_t f = 0; f < shape.size(); ++f) {
            if (!eligible(f)) continue;
            if (ratio[f] > top * (1 + 1e-12)) {
                top = ratio[f];
                best.assign(1, f);
            } else if (ratio[f] >= top * (1 - 1e-12)) {
                best.push_back(f);
            }
        }
    }
    return shape.unflat(best[uniform_index(rng, best.size())]);
}

}  // namespace promptkg::mipro
