#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace promptkg {

// 64-bit FNV-1a. Stable across platforms; used for content hashes in logs.
std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t v);

// Derive an independent RNG seed for a named component from the run seed,
// e.g. substream_seed(seed, "optimizer").
std::uint64_t substream_seed(std::uint64_t run_seed, std::string_view name);

using Rng = std::mt19937_64;

// Uniform integer in [0, n); n must be positive. Unlike std::uniform_int_distribution the result
// is identical across standard library implementations.
std::size_t uniform_index(Rng& rng, std::size_t n);
double uniform_unit(Rng& rng);

// Fisher-Yates with uniform_index, so shuffles are reproducible everywhere.
template <typename T>
void stable_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::string to_lower(std::string_view s);
std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::vector<std::string> split_whitespace(std::string_view s);
bool starts_with_ci(std::string_view s, std::string_view prefix);

// Normalised lookup key for entity names coming back from an LM:
// lower-cased, trimmed, surrounding quotes/backticks removed, spaces -> '_'.
std::string name_key(std::string_view s);

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions from fn
// are rethrown (first one wins) after all workers finish.
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn);

}  // namespace promptkg
