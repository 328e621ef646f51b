#include <gtest/gtest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/kg/graph.hpp"
#include "promptkg/kg/io.hpp"

using namespace promptkg;
using namespace promptkg::kg;

namespace {

LoadResult parse(const std::string& text, LoadOptions opts = {}) {
    std::istringstream in(text);
    return parse_triples(in, opts);
}

// Random graph over a fresh vocabulary: `n` triples drawn from e entities / r relations.
KnowledgeGraph random_graph(std::uint64_t seed, std::size_t n, std::size_t e, std::size_t r) {
    auto vocab = std::make_shared<Vocabulary>();
    for (std::size_t i = 0; i < e; ++i) vocab->intern_entity("e" + std::to_string(i));
    for (std::size_t i = 0; i < r; ++i) vocab->intern_relation("r" + std::to_string(i), RelationKind::ObjectProperty);
    Rng rng(seed);
    std::vector<Triple> ts;
    for (std::size_t i = 0; i < n; ++i)
        ts.push_back({EntityId{static_cast<std::uint32_t>(uniform_index(rng, e))},
                      RelationId{static_cast<std::uint32_t>(uniform_index(rng, r))},
                      EntityId{static_cast<std::uint32_t>(uniform_index(rng, e))}});
    return KnowledgeGraph(vocab, ts);
}

}  // namespace

TEST(LoadSplit, EmptyFileGivesEmptyGraph) {
    auto res = parse("");
    EXPECT_EQ(res.graph.size(), 0u);
    EXPECT_EQ(res.stats.parsed, 0u);
}

TEST(LoadSplit, DuplicateLinesAreDeduplicated) {
    auto res = parse("a r b\na r b\n");
    EXPECT_EQ(res.graph.size(), 1u);
    EXPECT_EQ(res.stats.parsed, 2u);
    EXPECT_EQ(res.stats.duplicates, 1u);
}

TEST(LoadSplit, TabSeparatedFieldsMayContainSpaces) {
    auto res = parse("new zealand\tlocated in\toceania\n");
    ASSERT_EQ(res.graph.size(), 1u);
    const auto& v = res.graph.vocab();
    EXPECT_EQ(v.entity_name(res.graph.triples()[0].subject), "new zealand");
    EXPECT_EQ(v.relation_name(res.graph.triples()[0].relation), "located in");
}

TEST(LoadSplit, MalformedLineReportsLineNumber) {
    try {
        parse("a r b\n\na r\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
}

TEST(LoadSplit, LiteralModeParsesNumbersAndCountsRejects) {
    LoadOptions opts;
    opts.literal_mode = true;
    auto res = parse("gabon\tpopulation\t2025137\ngabon\thdi\t0.702\ngabon\tmotto\tunion\ngabon\tarea\t-1.5e3\n", opts);
    ASSERT_EQ(res.graph.size(), 3u);
    EXPECT_EQ(res.stats.rejected_literals, 1u);
    EXPECT_FALSE(res.stats.warnings.empty());
    EXPECT_DOUBLE_EQ(res.graph.triples()[0].object_value(), 2025137.0);
    EXPECT_DOUBLE_EQ(res.graph.triples()[1].object_value(), 0.702);
    EXPECT_DOUBLE_EQ(res.graph.triples()[2].object_value(), -1500.0);
    EXPECT_EQ(res.graph.vocab().relation_kind(res.graph.triples()[0].relation), RelationKind::DataProperty);
}

TEST(LoadSplit, NumericGrammar) {
    double v = 0;
    for (const char* ok : {"1", "-2", "+3", "4.5", ".5", "5.", "1e9", "2.5E-3"}) EXPECT_TRUE(parse_numeric_literal(ok, v)) << ok;
    for (const char* bad : {"", "-", ".", "1e", "0x10", "1,000", "nan", "inf", "12abc"})
        EXPECT_FALSE(parse_numeric_literal(bad, v)) << bad;
}

TEST(LoadSplit, NTriples) {
    LoadOptions opts;
    opts.format = TripleFormat::NTriples;
    auto res = parse("<http://x/a> <http://x/r> <http://x/b> .\n# comment\n<http://x/a> <http://x/r> <http://x/c> .\n", opts);
    EXPECT_EQ(res.graph.size(), 2u);
    EXPECT_TRUE(res.graph.vocab().find_entity("http://x/b").has_value());

    opts.literal_mode = true;
    auto lit = parse("<http://x/a> <http://x/pop> \"42\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n", opts);
    ASSERT_EQ(lit.graph.size(), 1u);
    EXPECT_DOUBLE_EQ(lit.graph.triples()[0].object_value(), 42.0);

    opts.literal_mode = false;
    EXPECT_THROW(parse("_:b1 <http://x/r> <http://x/b> .\n", opts), ParseError);
    EXPECT_THROW(parse("<http://x/a> <http://x/r> <http://x/b>\n", opts), ParseError);
    EXPECT_THROW(parse("<http://x/a> <http://x/r> \"text\" .\n", opts), ParseError);
}

TEST(LabelMap, EmptyMapOnEmptyGraph) {
    auto res = apply_label_map(KnowledgeGraph{}, LabelMap{});
    EXPECT_EQ(res.graph.size(), 0u);
    EXPECT_TRUE(res.missing.empty());
}

TEST(LabelMap, AttachesLabelAndKeepsId) {
    auto g = parse("Q1\tP31\tQ2\n").graph;
    auto res = apply_label_map(g, {{"Q1", "universe"}, {"Q2", "thing"}, {"P31", "instance of"}});
    const auto q1 = *res.graph.vocab().find_entity("Q1");
    EXPECT_EQ(res.graph.vocab().entity_text(q1), "universe");
    EXPECT_EQ(res.graph.vocab().entity_name(q1), "Q1");
    EXPECT_TRUE(res.missing.empty());
    // original graph untouched
    EXPECT_EQ(g.vocab().entity_text(q1), "Q1");
}

TEST(LabelMap, ReportsMissingIdsWithoutDroppingTriples) {
    auto g = parse("Q1\tP31\tQ2\n").graph;
    auto res = apply_label_map(g, {{"Q1", "universe"}, {"P31", "instance of"}});
    ASSERT_EQ(res.missing.size(), 1u);
    EXPECT_EQ(res.missing[0], "Q2");
    EXPECT_EQ(res.graph.size(), g.size());
}

TEST(LabelMap, ParsesTwoColumnTsv) {
    std::istringstream in("Q1\tuniverse\nQ2\tEarth moon\n\n");
    auto m = parse_label_map(in);
    EXPECT_EQ(m.at("Q2"), "Earth moon");
    std::istringstream bad("Q1 universe\n");
    EXPECT_THROW(parse_label_map(bad), ParseError);
}

TEST(KvsAll, GroupsObjectsOfOnePair) {
    auto g = parse("a r b\na r c\n").graph;
    auto groups = kvsall_groups(g);
    ASSERT_EQ(groups.size(), 1u);
    EXPECT_EQ(groups[0].objects.size(), 2u);
}

TEST(KvsAll, DistinctRelationsGiveDistinctGroups) {
    auto groups = kvsall_groups(parse("a r b\na q b\n").graph);
    ASSERT_EQ(groups.size(), 2u);
    EXPECT_EQ(groups[0].objects.size(), 1u);
    EXPECT_EQ(groups[1].objects.size(), 1u);
}

TEST(KvsAll, CountriesGroupCountMatchesSinglePassCount) {
    auto d = load_dataset(std::string(PROMPTKG_DATA_DIR) + "/countries-s1");
    auto groups = kvsall_groups(d.train);
    // independent oracle: one pass over the raw file with a set of "s|r" keys
    std::set<std::string> pairs;
    std::ifstream in(std::string(PROMPTKG_DATA_DIR) + "/countries-s1/train.txt");
    std::string line;
    while (std::getline(in, line)) {
        auto f = split(line, '\t');
        if (f.size() == 3) pairs.insert(f[0] + "|" + f[1]);
    }
    EXPECT_EQ(groups.size(), pairs.size());
}

TEST(KvsAll, PartitionsTheTripleSet) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = random_graph(seed, 60, 12, 3);
        std::unordered_set<Triple, TripleHash> rebuilt;
        std::size_t total = 0;
        std::set<std::pair<std::uint32_t, std::uint32_t>> keys;
        for (const auto& grp : kvsall_groups(g)) {
            EXPECT_TRUE(keys.insert({grp.subject.value, grp.relation.value}).second);
            for (const auto& o : grp.objects) {
                rebuilt.insert({grp.subject, grp.relation, o});
                ++total;
            }
        }
        EXPECT_EQ(total, g.size());
        EXPECT_EQ(rebuilt.size(), g.size());
        for (const auto& t : g.triples()) EXPECT_TRUE(rebuilt.contains(t));
        // index sizes reflect the triple set
        std::size_t indexed = 0;
        for (const auto& [k, objs] : g.sp_index()) indexed += objs.size();
        EXPECT_EQ(indexed, g.size());
    }
}

TEST(Neighborhood, SubjectWithoutTriplesIsEmpty) {
    auto g = parse("a r b\n").graph;
    EXPECT_TRUE(neighborhood(g, *g.vocab().find_entity("b")).empty());
    EXPECT_TRUE(neighborhood(g, EntityId{999}).empty());
}

TEST(Neighborhood, ExcludesQueriedRelation) {
    auto g = parse("a r b\na q c\n").graph;
    const auto& v = g.vocab();
    auto n = neighborhood(g, *v.find_entity("a"), v.find_relation("r"));
    ASSERT_EQ(n.size(), 1u);
    EXPECT_EQ(v.relation_name(n[0].relation), "q");
    EXPECT_EQ(v.entity_name(n[0].object_entity()), "c");
}

TEST(Neighborhood, MatchesBruteForceFilter) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto g = random_graph(100 + seed, 50, 10, 3);
        for (std::uint32_t s = 0; s < 10; ++s) {
            for (int ex = -1; ex < 3; ++ex) {
                std::optional<RelationId> exclude;
                if (ex >= 0) exclude = RelationId{static_cast<std::uint32_t>(ex)};
                std::vector<Triple> expected;
                for (const auto& t : g.triples())
                    if (t.subject.value == s && (!exclude || t.relation != *exclude)) expected.push_back(t);
                EXPECT_EQ(neighborhood(g, EntityId{s}, exclude), expected);
            }
        }
    }
}

TEST(Graph, RejectsMixedRelationKinds) {
    auto vocab = std::make_shared<Vocabulary>();
    vocab->intern_relation("pop", RelationKind::DataProperty);
    EXPECT_THROW(vocab->intern_relation("pop", RelationKind::ObjectProperty), ParseError);
}

TEST(Dataset, CountriesSplitsShareVocabulary) {
    auto d = load_dataset(std::string(PROMPTKG_DATA_DIR) + "/countries-s1");
    EXPECT_EQ(d.test.size(), 24u);
    EXPECT_EQ(d.valid.size(), 24u);
    EXPECT_GT(d.train.size(), 1000u);
    for (const auto& t : d.test.triples()) EXPECT_FALSE(d.train.contains(t));
    EXPECT_EQ(d.all().size(), d.train.size() + d.valid.size() + d.test.size());
}
