#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "promptkg/kg/graph.hpp"

namespace promptkg::kg {

enum class TripleFormat { Tsv, NTriples };

struct LoadOptions {
    TripleFormat format = TripleFormat::Tsv;
    // Objects must be integer/decimal literals; other lines are rejected
    // (counted in LoadStats::rejected_literals, not an error).
    bool literal_mode = false;
    Split split = Split::Other;
};

struct LoadStats {
    std::size_t lines = 0;
    std::size_t parsed = 0;      // triples read, before deduplication
    std::size_t duplicates = 0;
    std::size_t rejected_literals = 0;
    std::vector<std::string> warnings;
};

struct LoadResult {
    KnowledgeGraph graph;
    LoadStats stats;
};

// Throws ParseError (with line number) on malformed lines.
LoadResult parse_triples(std::istream& in, const LoadOptions& opts,
                         std::shared_ptr<Vocabulary> vocab = nullptr);
LoadResult load_split(const std::filesystem::path& path, const LoadOptions& opts,
                      std::shared_ptr<Vocabulary> vocab = nullptr);

// Accepts [+-]digits[.digits][(e|E)[+-]digits] and .digits forms.
bool parse_numeric_literal(std::string_view token, double& out);

// train/valid/test splits sharing one vocabulary.
struct Dataset {
    std::shared_ptr<Vocabulary> vocab;
    KnowledgeGraph train;
    KnowledgeGraph valid;
    KnowledgeGraph test;

    // train ∪ valid ∪ test, the filter set for ranking.
    KnowledgeGraph all() const;
};

// Loads <dir>/{train,valid,test}.txt (or .tsv); missing valid/test are empty.
Dataset load_dataset(const std::filesystem::path& dir, TripleFormat format = TripleFormat::Tsv);

// id -> human-readable label
using LabelMap = std::unordered_map<std::string, std::string>;

LabelMap load_label_map(const std::filesystem::path& path);
LabelMap parse_label_map(std::istream& in);

struct LabeledGraph {
    KnowledgeGraph graph;
    std::vector<std::string> missing;  // ids of g without a label, sorted
};

// Attaches labels for every id in g. Ids are untouched; the graph is rebound
// to a labelled copy of its vocabulary. Never drops triples.
LabeledGraph apply_label_map(const KnowledgeGraph& g, const LabelMap& m);
// Labels a whole dataset in place through its shared vocabulary.
std::vector<std::string> apply_label_map(Dataset& d, const LabelMap& m);

// One "s\tr\to" line per triple using raw ids.
void write_triples(std::ostream& out, const Vocabulary& v, std::span<const Triple> triples);

}  // namespace promptkg::kg
