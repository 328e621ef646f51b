#include "promptkg/kg/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::kg {

namespace {

struct RawTriple {
    std::string subject;
    std::string relation;
    std::string object;
    bool object_is_literal = false;  // quoted N-Triples literal
};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// TSV line: tab-separated when a tab is present, whitespace-separated otherwise.
RawTriple split_tsv(const std::string& line, std::size_t line_no) {
    std::vector<std::string> fields;
    if (line.find('\t') != std::string::npos) {
        for (auto& f : split(line, '\t')) {
            auto t = trim(f);
            if (!t.empty()) fields.push_back(std::move(t));
        }
    } else {
        fields = split_whitespace(line);
    }
    if (fields.size() != 3)
        throw ParseError("expected 3 fields, found " + std::to_string(fields.size()), line_no);
    return {fields[0], fields[1], fields[2], false};
}

class NTriplesLine {
public:
    NTriplesLine(const std::string& line, std::size_t line_no) : s_(line), line_no_(line_no) {}

    RawTriple parse() {
        RawTriple t;
        t.subject = resource("subject");
        t.relation = resource("predicate");
        skip_ws();
        if (peek() == '"') {
            t.object = literal();
            t.object_is_literal = true;
        } else {
            t.object = resource("object");
        }
        skip_ws();
        if (peek() != '.') fail("expected '.' terminating the triple");
        ++pos_;
        skip_ws();
        if (pos_ < s_.size() && s_[pos_] != '#') fail("trailing characters after '.'");
        return t;
    }

private:
    char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
    void skip_ws() {
        while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
    }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError("N-Triples: " + msg + " at column " + std::to_string(pos_ + 1), line_no_);
    }

    std::string resource(const char* what) {
        skip_ws();
        if (peek() == '_') fail(std::string("blank nodes are not supported (") + what + ")");
        if (peek() != '<') fail(std::string("expected IRI for ") + what);
        const std::size_t end = s_.find('>', pos_);
        if (end == std::string::npos) fail("unterminated IRI");
        std::string iri = s_.substr(pos_ + 1, end - pos_ - 1);
        pos_ = end + 1;
        if (iri.empty()) fail("empty IRI");
        return iri;
    }

    std::string literal() {
        ++pos_;  // opening quote
        std::string out;
        while (pos_ < s_.size() && s_[pos_] != '"') {
            if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) {
                const char e = s_[pos_ + 1];
                out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
                pos_ += 2;
                continue;
            }
            out.push_back(s_[pos_++]);
        }
        if (peek() != '"') fail("unterminated literal");
        ++pos_;
        if (s_.compare(pos_, 2, "^^") == 0) {
            pos_ += 2;
            resource("datatype");
        } else if (peek() == '@') {
            while (pos_ < s_.size() && s_[pos_] != ' ' && s_[pos_] != '\t' && s_[pos_] != '.') ++pos_;
        }
        return out;
    }

    const std::string& s_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

}  // namespace

bool parse_numeric_literal(std::string_view token, double& out) {
    std::size_t i = 0;
    const std::size_t n = token.size();
    if (i < n && (token[i] == '+' || token[i] == '-')) ++i;
    std::size_t int_digits = 0, frac_digits = 0;
    while (i < n && is_digit(token[i])) ++i, ++int_digits;
    if (i < n && token[i] == '.') {
        ++i;
        while (i < n && is_digit(token[i])) ++i, ++frac_digits;
    }
    if (int_digits + frac_digits == 0) return false;
    if (i < n && (token[i] == 'e' || token[i] == 'E')) {
        ++i;
        if (i < n && (token[i] == '+' || token[i] == '-')) ++i;
        std::size_t exp_digits = 0;
        while (i < n && is_digit(token[i])) ++i, ++exp_digits;
        if (exp_digits == 0) return false;
    }
    if (i != n) return false;
    const char* first = token.data() + (token[0] == '+' ? 1 : 0);
    auto res = std::from_chars(first, token.data() + n, out);
    return res.ec == std::errc{} && res.ptr == token.data() + n;
}

LoadResult parse_triples(std::istream& in, const LoadOptions& opts, std::shared_ptr<Vocabulary> vocab) {
    if (!vocab) vocab = std::make_shared<Vocabulary>();
    LoadStats stats;
    std::vector<Triple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        ++stats.lines;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string stripped = trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;

        RawTriple raw = opts.format == TripleFormat::Tsv ? split_tsv(stripped, line_no)
                                                         : NTriplesLine(stripped, line_no).parse();
        if (opts.literal_mode) {
            double value = 0.0;
            if (!parse_numeric_literal(trim(raw.object), value)) {
                ++stats.rejected_literals;
                if (stats.warnings.size() < 20)
                    stats.warnings.push_back("line " + std::to_string(line_no) + ": non-numeric literal '" +
                                             raw.object + "' rejected");
                continue;
            }
            auto s = vocab->intern_entity(raw.subject);
            RelationId r;
            try {
                r = vocab->intern_relation(raw.relation, RelationKind::DataProperty);
            } catch (const ParseError& e) {
                throw ParseError(e.what(), line_no);
            }
            triples.push_back({s, r, value});
        } else {
            if (raw.object_is_literal)
                throw ParseError("literal object '" + raw.object + "' outside literal mode", line_no);
            auto s = vocab->intern_entity(raw.subject);
            RelationId r;
            try {
                r = vocab->intern_relation(raw.relation, RelationKind::ObjectProperty);
            } catch (const ParseError& e) {
                throw ParseError(e.what(), line_no);
            }
            auto o = vocab->intern_entity(raw.object);
            triples.push_back({s, r, o});
        }
        ++stats.parsed;
    }
    KnowledgeGraph g(vocab, std::move(triples), opts.split);
    stats.duplicates = stats.parsed - g.size();
    if (stats.rejected_literals > 0)
        stats.warnings.push_back(std::to_string(stats.rejected_literals) + " non-numeric literal line(s) rejected");
    return {std::move(g), std::move(stats)};
}

LoadResult load_split(const std::filesystem::path& path, const LoadOptions& opts, std::shared_ptr<Vocabulary> vocab) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open triple file " + path.string());
    try {
        return parse_triples(in, opts, std::move(vocab));
    } catch (const ParseError& e) {
        throw ParseError(path.filename().string() + ": " + e.what(), e.line());
    }
}

KnowledgeGraph Dataset::all() const {
    const KnowledgeGraph* parts[] = {&train, &valid, &test};
    return merge(parts);
}

Dataset load_dataset(const std::filesystem::path& dir, TripleFormat format) {
    Dataset d;
    d.vocab = std::make_shared<Vocabulary>();
    auto find = [&](const char* stem) -> std::optional<std::filesystem::path> {
        for (const char* ext : {".txt", ".tsv", ".nt"}) {
            auto p = dir / (std::string(stem) + ext);
            if (std::filesystem::exists(p)) return p;
        }
        return std::nullopt;
    };
    auto load = [&](const char* stem, Split split, bool required) {
        auto p = find(stem);
        if (!p) {
            if (required) throw Error("dataset " + dir.string() + " has no " + stem + " split");
            return KnowledgeGraph(d.vocab, {}, split);
        }
        return load_split(*p, {format, false, split}, d.vocab).graph;
    };
    d.train = load("train", Split::Train, true);
    d.valid = load("valid", Split::Valid, false);
    d.test = load("test", Split::Test, false);
    return d;
}

LabelMap parse_label_map(std::istream& in) {
    LabelMap m;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("label map: expected 'id<TAB>label'", line_no);
        auto id = trim(line.substr(0, tab));
        auto label = trim(line.substr(tab + 1));
        if (id.empty()) throw ParseError("label map: empty id", line_no);
        if (label.empty()) continue;  // labels are non-empty by contract
        m.insert_or_assign(std::move(id), std::move(label));
    }
    return m;
}

LabelMap load_label_map(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open label map " + path.string());
    return parse_label_map(in);
}

namespace {

std::vector<std::string> label_vocabulary(Vocabulary& v, const std::vector<EntityId>& entities,
                                          const std::vector<RelationId>& relations, const LabelMap& m) {
    std::set<std::string> missing;
    for (EntityId e : entities) {
        auto it = m.find(v.entity_name(e));
        if (it == m.end())
            missing.insert(v.entity_name(e));
        else
            v.set_entity_label(e, it->second);
    }
    for (RelationId r : relations) {
        auto it = m.find(v.relation_name(r));
        if (it == m.end())
            missing.insert(v.relation_name(r));
        else
            v.set_relation_label(r, it->second);
    }
    return {missing.begin(), missing.end()};
}

}  // namespace

LabeledGraph apply_label_map(const KnowledgeGraph& g, const LabelMap& m) {
    auto vocab = std::make_shared<Vocabulary>(g.vocab());
    auto missing = label_vocabulary(*vocab, g.entities(), g.relations(), m);
    return {g.with_vocabulary(vocab), std::move(missing)};
}

std::vector<std::string> apply_label_map(Dataset& d, const LabelMap& m) {
    const KnowledgeGraph all = d.all();
    return label_vocabulary(*d.vocab, all.entities(), all.relations(), m);
}

void write_triples(std::ostream& out, const Vocabulary& v, std::span<const Triple> triples) {
    for (const auto& t : triples)
        out << v.entity_name(t.subject) << '\t' << v.relation_name(t.relation) << '\t'
            << render_object(v, t.object, false) << '\n';
}

}  // namespace promptkg::kg
