#include "promptkg/kge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::kge {

namespace {

constexpr const char* kMagic = "promptkg-embeddings v1";

void put_f32(std::ostream& out, double value) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
    const char bytes[4] = {static_cast<char>(bits & 0xff), static_cast<char>((bits >> 8) & 0xff),
                           static_cast<char>((bits >> 16) & 0xff), static_cast<char>((bits >> 24) & 0xff)};
    out.write(bytes, 4);
}

double get_f32(std::istream& in) {
    unsigned char bytes[4];
    if (!in.read(reinterpret_cast<char*>(bytes), 4)) throw ParseError("checkpoint data truncated");
    const std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
                               (static_cast<std::uint32_t>(bytes[2]) << 16) |
                               (static_cast<std::uint32_t>(bytes[3]) << 24);
    return static_cast<double>(std::bit_cast<float>(bits));
}

std::string header_value(std::istream& in, const std::string& key, std::size_t line) {
    std::string text;
    if (!std::getline(in, text)) throw ParseError("checkpoint header truncated", line);
    const auto parts = split_whitespace(text);
    if (parts.size() != 2 || parts[0] != key) throw ParseError("checkpoint header: expected '" + key + " <value>'", line);
    return parts[1];
}

std::uint64_t to_count(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size()) throw ParseError("checkpoint header: bad number '" + s + "'", line);
        return v;
    } catch (const std::logic_error&) {
        throw ParseError("checkpoint header: bad number '" + s + "'", line);
    }
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
    const auto& t = c.table;
    out << kMagic << "\nmodel " << c.model << "\ndim " << t.dim() << "\nentities " << t.entity_count()
        << "\nrelations " << t.relation_count() << "\nseed " << c.seed << "\ndata\n";
    for (double x : t.entity_data()) put_f32(out, x);
    for (double x : t.relation_data()) put_f32(out, x);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    write_checkpoint(out, c);
    if (!out) throw Error("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(std::istream& in) {
    std::string magic;
    if (!std::getline(in, magic) || magic != kMagic) throw ParseError("not a promptkg embedding checkpoint", 1);
    Checkpoint c;
    c.model = header_value(in, "model", 2);
    const auto dim = to_count(header_value(in, "dim", 3), 3);
    const auto n_ent = to_count(header_value(in, "entities", 4), 4);
    const auto n_rel = to_count(header_value(in, "relations", 5), 5);
    c.seed = to_count(header_value(in, "seed", 6), 6);
    std::string data;
    if (!std::getline(in, data) || data != "data") throw ParseError("checkpoint header: expected 'data'", 7);
    if (dim == 0) throw ParseError("checkpoint header: dim must be positive", 3);
    c.table = EmbeddingTable(n_ent, n_rel, dim);
    for (auto& x : c.table.entity_data()) x = get_f32(in);
    for (auto& x : c.table.relation_data()) x = get_f32(in);
    if (in.peek() != std::char_traits<char>::eof()) throw ParseError("checkpoint has trailing bytes");
    return c;
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    return read_checkpoint(in);
}

}  // namespace promptkg::kge
