#pragma once
// Tree-structured Parzen estimator over a categorical product space.

#include <cstdint>
#include <span>
#include <vector>

#include "promptkg/mipro/pool.hpp"

namespace promptkg::mipro {

enum class Direction { Minimize, Maximize };

struct PoolShape {
    std::size_t composer = 1;
    std::size_t scorer = 1;
    std::size_t demos = 1;
    std::size_t size() const noexcept { return composer * scorer * demos; }
    std::size_t flat(CandidateIndex i) const noexcept { return (i.composer * scorer + i.scorer) * demos + i.demos; }
    CandidateIndex unflat(std::size_t f) const noexcept { return {f / (scorer * demos), (f / demos) % scorer, f % demos}; }
};

PoolShape shape_of(const CandidatePool& pool);

struct Observation {
    CandidateIndex candidate;
    double score = 0.0;
};

struct TpeOptions {
    double gamma = 0.25;
    double smoothing = 1.0;  // Laplace pseudo-count per category
    std::size_t startup = 4; // trials before the surrogate is used
    Direction direction = Direction::Minimize;
};

// Number of uniform startup trials for a T-trial run: max(4, ceil(0.2 T)).
std::size_t startup_trials(std::size_t total_trials);

// l(x) / g(x) for every flattened candidate, where l and g are products of
// per-dimension smoothed categorical densities fitted to the best
// ceil(gamma * n) observations and to the rest.
std::vector<double> density_ratios(std::span<const Observation> history, PoolShape shape, const TpeOptions& opts);

// Next candidate. Uniform while |history| < startup, TPE argmax afterwards.
// Unevaluated candidates are preferred while any remain; ties are broken
// by `seed`. Deterministic in (history, shape, seed).
CandidateIndex suggest_next(std::span<const Observation> history, PoolShape shape, std::uint64_t seed,
                            const TpeOptions& opts);

}  // namespace promptkg::mipro
