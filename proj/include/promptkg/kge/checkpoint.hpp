#pragma once
// Embedding checkpoints: a text header, then little-endian f32 rows
// (entities first, then relations).
//
//   promptkg-embeddings v1
//   model distmult
//   dim 32
//   entities 273
//   relations 2
//   seed 0
//   data
//   <binary>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "promptkg/kge/model.hpp"

namespace promptkg::kge {

struct Checkpoint {
    std::string model = "distmult";
    std::uint64_t seed = 0;
    EmbeddingTable table;
};

void write_checkpoint(std::ostream& out, const Checkpoint& c);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
// Throws ParseError on a malformed header or truncated data. Values come
// back rounded to f32.
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace promptkg::kge
