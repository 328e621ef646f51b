#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/eval/rank.hpp"
#include "promptkg/kg/io.hpp"

using namespace promptkg;
using namespace promptkg::eval;
using kg::EntityId;

namespace {

// Sort descending, locate the block of scores equal to the truth's, take the
// midpoint of its 1-based positions.
std::int64_t oracle_doubled_rank(std::vector<double> scores, std::size_t truth, const std::set<std::size_t>& drop) {
    const double t = scores[truth];
    std::vector<double> kept;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (i == truth || !drop.contains(i)) kept.push_back(scores[i]);
    std::sort(kept.begin(), kept.end(), std::greater<>());
    const auto first = std::find(kept.begin(), kept.end(), t) - kept.begin();
    auto last = first;
    while (last + 1 < static_cast<std::ptrdiff_t>(kept.size()) && kept[last + 1] == t) ++last;
    return (first + 1) + (last + 1);
}

}  // namespace

TEST(RankTrueEntity, StrictlyHighestIsOne) {
    std::vector<double> s{0.1, 0.9, 0.3};
    EXPECT_EQ(rank_true_entity(s, EntityId{1}, {}, RankSetting::Raw).rank(), 1);
}

TEST(RankTrueEntity, FullTieOfFiveIsThree) {
    std::vector<double> s(5, 0.0);
    auto r = rank_true_entity(s, EntityId{2}, {}, RankSetting::Raw);
    EXPECT_EQ(r.rank(), 3);
    EXPECT_DOUBLE_EQ(r.exact_rank(), 3.0);
}

TEST(RankTrueEntity, HalfRankRoundsUp) {
    std::vector<double> s{0.5, 0.5, 0.2};
    auto r = rank_true_entity(s, EntityId{0}, {}, RankSetting::Raw);
    EXPECT_DOUBLE_EQ(r.exact_rank(), 1.5);
    EXPECT_EQ(r.rank(), 2);
}

TEST(RankTrueEntity, FilteredRemovesOtherPositives) {
    std::vector<double> s{0.9, 0.8, 0.7, 0.1};
    std::vector<EntityId> pos{EntityId{0}, EntityId{2}};
    EXPECT_EQ(rank_true_entity(s, EntityId{2}, pos, RankSetting::Raw).rank(), 3);
    EXPECT_EQ(rank_true_entity(s, EntityId{2}, pos, RankSetting::Filtered).rank(), 2);
}

TEST(RankTrueEntity, TruthOutsideDomainIsContractViolation) {
    std::vector<double> s{0.1, 0.2};
    EXPECT_THROW(rank_true_entity(s, EntityId{2}, {}, RankSetting::Raw), ContractViolation);
}

TEST(RankTrueEntity, MatchesSortAndScanOracle) {
    Rng rng(99);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 60);
        const bool coarse = trial % 2 == 0;  // many ties
        std::vector<double> s(n);
        for (auto& x : s) x = coarse ? static_cast<double>(uniform_index(rng, 4)) / 4.0 : uniform_unit(rng);
        const std::size_t truth = uniform_index(rng, n);
        std::set<std::size_t> drop;
        std::vector<EntityId> pos;
        for (std::size_t i = 0; i < n; ++i)
            if (uniform_unit(rng) < 0.2) {
                drop.insert(i);
                pos.push_back(EntityId{static_cast<std::uint32_t>(i)});
            }
        const auto raw = rank_true_entity(s, EntityId{static_cast<std::uint32_t>(truth)}, pos, RankSetting::Raw);
        const auto fil = rank_true_entity(s, EntityId{static_cast<std::uint32_t>(truth)}, pos, RankSetting::Filtered);
        EXPECT_EQ(raw.doubled_rank, oracle_doubled_rank(s, truth, {}));
        EXPECT_EQ(fil.doubled_rank, oracle_doubled_rank(s, truth, drop));
        EXPECT_LE(fil.rank(), raw.rank());
        EXPECT_GE(raw.rank(), 1);
        EXPECT_LE(raw.rank(), static_cast<std::int64_t>(n));
    }
}

TEST(RankTrueEntity, InvariantUnderMonotoneTransform) {
    Rng rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> s(20), t(20);
        for (std::size_t i = 0; i < s.size(); ++i) {
            s[i] = static_cast<double>(uniform_index(rng, 6));
            t[i] = std::exp(s[i]) * 3 - 1;
        }
        for (std::uint32_t e = 0; e < 20; ++e)
            EXPECT_EQ(rank_true_entity(s, EntityId{e}, {}, RankSetting::Raw).doubled_rank,
                      rank_true_entity(t, EntityId{e}, {}, RankSetting::Raw).doubled_rank);
    }
}

TEST(ComputeMetrics, AllOnes) {
    std::vector<std::int64_t> r{1, 1, 1};
    auto m = compute_metrics(r);
    EXPECT_DOUBLE_EQ(m.mrr, 1.0);
    for (int k : {1, 3, 10}) EXPECT_DOUBLE_EQ(m.hits.at(k), 1.0);
}

TEST(ComputeMetrics, OneTwo) {
    std::vector<std::int64_t> r{1, 2};
    auto m = compute_metrics(r);
    EXPECT_DOUBLE_EQ(m.mrr, 0.75);
    EXPECT_DOUBLE_EQ(m.hits.at(1), 0.5);
    EXPECT_DOUBLE_EQ(m.hits.at(3), 1.0);
}

TEST(ComputeMetrics, TwoTwoThree) {
    std::vector<std::int64_t> r{2, 2, 3};
    EXPECT_NEAR(compute_metrics(r).mrr, 4.0 / 9.0, 1e-15);
}

TEST(ComputeMetrics, EmptyIsContractViolation) {
    std::vector<std::int64_t> r;
    EXPECT_THROW(compute_metrics(r), ContractViolation);
}

TEST(ComputeMetrics, HitsMonotoneInK) {
    Rng rng(1);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<std::int64_t> r(1 + uniform_index(rng, 30));
        for (auto& x : r) x = 1 + static_cast<std::int64_t>(uniform_index(rng, 20));
        auto m = compute_metrics(r);
        EXPECT_LE(m.hits.at(1), m.hits.at(3));
        EXPECT_LE(m.hits.at(3), m.hits.at(10));
        EXPECT_GT(m.mrr, 0.0);
        EXPECT_LE(m.mrr, 1.0);
    }
}

TEST(EvaluateTailQueries, GroupsAndFilters) {
    std::istringstream train_in("a\tr\tb\na\tr\tc\n");
    auto vocab = std::make_shared<kg::Vocabulary>();
    auto train = kg::parse_triples(train_in, {}, vocab).graph;
    std::istringstream test_in("a\tr\td\n");
    auto test = kg::parse_triples(test_in, {}, vocab).graph;
    const kg::KnowledgeGraph* parts[] = {&train, &test};
    auto all = kg::merge(parts);
    const auto& v = *vocab;
    // b and c outrank d; filtering removes them
    std::size_t calls = 0;
    auto res = evaluate_tail_queries(test, all, [&](EntityId, kg::RelationId) {
        ++calls;
        std::vector<double> s(v.entity_count(), 0.0);
        s[v.find_entity("b")->value] = 0.9;
        s[v.find_entity("c")->value] = 0.8;
        s[v.find_entity("d")->value] = 0.7;
        return s;
    });
    EXPECT_EQ(calls, 1u);
    ASSERT_EQ(res.raw.size(), 1u);
    EXPECT_EQ(res.raw[0].rank(), 3);
    EXPECT_EQ(res.filtered[0].rank(), 1);
    EXPECT_DOUBLE_EQ(res.filtered_metrics.mrr, 1.0);
}

TEST(Report, CsvAndTable) {
    std::vector<std::int64_t> r{1, 2};
    auto m = compute_metrics(r);
    EXPECT_EQ(csv_header(), "model,setting,n,mrr,hits@1,hits@3,hits@10");
    EXPECT_EQ(csv_row("x", RankSetting::Filtered, m), "x,filtered,2,0.750000,0.500000,1.000000,1.000000");
    std::ostringstream out;
    write_table(out, {{"x", RankSetting::Raw, m}});
    EXPECT_NE(out.str().find("0.750"), std::string::npos);
    EXPECT_NE(out.str().find("MRR"), std::string::npos);
}
