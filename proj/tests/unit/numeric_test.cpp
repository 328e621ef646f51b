#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/kg/io.hpp"
#include "promptkg/lm/scripted.hpp"
#include "promptkg/numeric/context.hpp"
#include "promptkg/numeric/metrics.hpp"
#include "promptkg/numeric/predict.hpp"
#include "promptkg/prompt/parse.hpp"

using namespace promptkg;
using namespace promptkg::numeric;

namespace {

kg::KnowledgeGraph literal_graph(const std::string& text, std::shared_ptr<kg::Vocabulary> vocab = nullptr) {
    std::istringstream in(text);
    kg::LoadOptions o;
    o.literal_mode = true;
    return kg::parse_triples(in, o, std::move(vocab)).graph;
}

kg::KnowledgeGraph gabon_graph() {
    return literal_graph(
        "gabon\tnominal_gdp_usd\t14622880885.6842\n"
        "gabon\tpopulation\t2025137\n"
        "gabon\tnominal_gdp_per_capita_usd\t7413\n"
        "sierra_leone\tnominal_gdp_per_capita_usd\t499\n"
        "united_arab_emirates\tnominal_gdp_per_capita_usd\t40698\n");
}

const char* kGabonAnswer =
    "Given the context, Gabon's total nominal GDP and its population let us divide one by the other; other "
    "countries' values between 499 and 40,698 USD bound the range.\n"
    "Prediction: ŷ_min = 1000.0, ŷ = 7225.0, and ŷ_max = 15000.0";

std::shared_ptr<lm::LmGateway> gateway(const std::string& answer) {
    return std::make_shared<lm::LmGateway>(std::make_shared<lm::ScriptedLm>(answer));
}

prompt::PromptState numeric_state() { return prompt::default_prompt_state("numeric"); }

}  // namespace

// ---- prompt numbers --------------------------------------------------------

TEST(PromptNumber, SixSignificantDigitsFixed) {
    EXPECT_EQ(prompt_number(14622880885.6842), "14622900000");
    EXPECT_EQ(prompt_number(2025137), "2025140");
    EXPECT_EQ(prompt_number(499), "499");
    EXPECT_EQ(prompt_number(0.6774), "0.6774");
    EXPECT_EQ(prompt_number(0.000123456789), "0.000123457");
    EXPECT_EQ(prompt_number(-11.75), "-11.75");
    EXPECT_EQ(prompt_number(0.0), "0");
    EXPECT_EQ(prompt_number(1.0), "1");
}

// ---- context ---------------------------------------------------------------

TEST(RetrieveContext, EmptyWhenNothingElseKnown) {
    auto g = literal_graph("a\tp\t1\n");
    const auto& v = g.vocab();
    auto b = retrieve_context(g, {*v.find_entity("a"), *v.find_relation("p")}, {}, 1);
    EXPECT_TRUE(b.subject_context.empty());
    EXPECT_TRUE(b.relation_context.empty());
    EXPECT_EQ(b.token_cost, 0u);
}

TEST(RetrieveContext, SubjectPriorityExactFit) {
    auto g = gabon_graph();
    const auto& v = g.vocab();
    NumericQuery q{*v.find_entity("gabon"), *v.find_relation("nominal_gdp_per_capita_usd")};
    std::size_t cost = 0;
    for (const auto& t : subject_set(g, q)) cost += line_cost(v, t, 4.0);
    ContextOptions o;
    o.budget = cost;
    auto b = retrieve_context(g, q, o, 1);
    EXPECT_EQ(b.subject_context.size(), 2u);
    EXPECT_TRUE(b.relation_context.empty());
    EXPECT_EQ(b.token_cost, cost);
}

TEST(RetrieveContext, NeverIncludesQueryTriple) {
    auto g = gabon_graph();
    const auto& v = g.vocab();
    NumericQuery q{*v.find_entity("gabon"), *v.find_relation("nominal_gdp_per_capita_usd")};
    auto b = retrieve_context(g, q, {}, 1);
    EXPECT_EQ(b.subject_context.size(), 2u);
    EXPECT_EQ(b.relation_context.size(), 2u);
    for (const auto* part : {&b.subject_context, &b.relation_context})
        for (const auto& t : *part) EXPECT_FALSE(t.subject == q.subject && t.relation == q.property);
}

TEST(RetrieveContext, MatchesBruteForceFiltersAndTrace) {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        std::ostringstream text;
        for (int i = 0; i < 100; ++i)
            text << "e" << uniform_index(rng, 15) << "\tp" << uniform_index(rng, 4) << "\t"
                 << static_cast<double>(uniform_index(rng, 100000)) / 7.0 << "\n";
        auto g = literal_graph(text.str());
        const auto& v = g.vocab();
        const auto t0 = g.triples()[uniform_index(rng, g.size())];
        NumericQuery q{t0.subject, t0.relation};
        ContextOptions o;
        o.budget = 20 + uniform_index(rng, 400);
        const std::uint64_t seed = trial;
        auto b = retrieve_context(g, q, o, seed);

        // brute-force sets
        std::vector<kg::Triple> gs, gr;
        for (const auto& t : g.triples()) {
            if (t.subject == q.subject && t.relation != q.property) gs.push_back(t);
            if (t.relation == q.property && t.subject != q.subject) gr.push_back(t);
        }
        // subject prefix while it fits
        std::size_t used = 0;
        std::vector<kg::Triple> exp_s, exp_r;
        for (const auto& t : gs) {
            const auto c = lm::estimate_tokens(render_fact(v, t) + "\n");
            if (used + c > o.budget) break;
            exp_s.push_back(t);
            used += c;
        }
        const auto trace = relation_sampling_trace(g, q, seed);
        ASSERT_EQ(trace.size(), gr.size());
        for (const auto& t : trace) EXPECT_NE(std::find(gr.begin(), gr.end(), t), gr.end());
        for (const auto& t : trace) {
            const auto c = lm::estimate_tokens(render_fact(v, t) + "\n");
            if (used + c > o.budget) continue;
            exp_r.push_back(t);
            used += c;
        }
        EXPECT_EQ(b.subject_context, exp_s);
        EXPECT_EQ(b.relation_context, exp_r);
        EXPECT_EQ(b.token_cost, used);
        EXPECT_LE(b.token_cost, o.budget);

        std::string joined;
        for (const auto* part : {&b.subject_context, &b.relation_context})
            for (const auto& t : *part) joined += render_fact(v, t) + "\n";
        EXPECT_LE(lm::estimate_tokens(joined), o.budget);
    }
}

TEST(RetrieveContext, DeterministicUnderSeed) {
    std::ostringstream text;
    for (int i = 0; i < 40; ++i) text << "e" << i << "\tp\t" << i << "\n";
    auto g = literal_graph(text.str());
    const auto& v = g.vocab();
    NumericQuery q{*v.find_entity("e0"), *v.find_relation("p")};
    ContextOptions o;
    o.budget = 40;
    EXPECT_EQ(retrieve_context(g, q, o, 5).relation_context, retrieve_context(g, q, o, 5).relation_context);
    EXPECT_NE(retrieve_context(g, q, o, 5).relation_context, retrieve_context(g, q, o, 6).relation_context);
}

TEST(RetrieveContext, OutlierFilterDropsExtremeValues) {
    auto g = literal_graph("a\tp\t1\nb\tp\t1\nc\tp\t1\nd\tp\t1\ne\tp\t10000\nq\tp\t2\n");
    const auto& v = g.vocab();
    NumericQuery q{*v.find_entity("q"), *v.find_relation("p")};
    ContextOptions o;
    o.outlier_z = 3.0;
    auto b = retrieve_context(g, q, o, 1);
    EXPECT_EQ(b.relation_context.size(), 4u);
    for (const auto& t : b.relation_context) EXPECT_EQ(t.object_value(), 1.0);
}

// ---- prediction ------------------------------------------------------------

TEST(PredictNumeric, GabonExemplar) {
    auto g = gabon_graph();
    const auto& v = g.vocab();
    NumericQuery q{*v.find_entity("gabon"), *v.find_relation("nominal_gdp_per_capita_usd")};
    auto ctx = retrieve_context(g, q, {}, 1);
    auto lm = std::make_shared<lm::ScriptedLm>(kGabonAnswer);
    lm::LmGateway gw(lm);
    auto p = predict_numeric(gw, numeric_state(), v, q, ctx);
    EXPECT_EQ(lm->calls(), 1u);
    EXPECT_DOUBLE_EQ(p.interval.y_min, 1000.0);
    EXPECT_DOUBLE_EQ(p.interval.y_hat, 7225.0);
    EXPECT_DOUBLE_EQ(p.interval.y_max, 15000.0);
    EXPECT_TRUE(p.warnings.empty());
    EXPECT_TRUE(covers(p.interval, 7413.0));

    const auto prompt = render_numeric_prompt(numeric_state(), v, q, ctx, 32768);
    EXPECT_NE(prompt.find("(gabon, nominal_gdp_usd, 14622900000)"), std::string::npos);
    EXPECT_NE(prompt.find("(sierra_leone, nominal_gdp_per_capita_usd, 499)"), std::string::npos);
    EXPECT_EQ(prompt.find("7413"), std::string::npos);
}

TEST(PredictNumeric, DegenerateInterval) {
    auto p = parse_interval("5 5 5");
    EXPECT_EQ(p.interval.y_min, 5);
    EXPECT_EQ(p.interval.y_hat, 5);
    EXPECT_EQ(p.interval.y_max, 5);
}

TEST(PredictNumeric, InvertedBoundsSwapped) {
    auto p = parse_interval("y_min: 20\ny_hat: 10\ny_max: 5");
    EXPECT_EQ(p.interval.y_min, 5);
    EXPECT_EQ(p.interval.y_max, 20);
    EXPECT_EQ(p.interval.y_hat, 10);
    ASSERT_EQ(p.warnings.size(), 1u);
    EXPECT_NE(p.warnings[0].find("swapped"), std::string::npos);
}

TEST(PredictNumeric, PointOutsideIsClamped) {
    auto p = parse_interval("Y_min: 1\nY_hat: 9\nY_max: 3");
    EXPECT_EQ(p.interval.y_hat, 3);
    EXPECT_EQ(p.warnings.size(), 1u);
}

TEST(PredictNumeric, ThousandsSeparatorsInLabels) {
    auto p = parse_interval("**y_min:** 1,000\n**y_hat:** 7,225.5\n**y_max:** 15,000");
    EXPECT_DOUBLE_EQ(p.interval.y_hat, 7225.5);
    EXPECT_DOUBLE_EQ(p.interval.y_max, 15000);
}

TEST(PredictNumeric, NonNumericIsParseErrorWithRaw) {
    try {
        parse_interval("I don't know.");
        FAIL();
    } catch (const prompt::OutputParseError& e) {
        EXPECT_EQ(e.raw_text(), "I don't know.");
    }
}

TEST(RunNumeric, PerPropertyRows) {
    auto g = literal_graph("a\tp\t1\nb\tp\t3\nc\tq\t10\n");
    auto gw = gateway("y_min: 0\ny_hat: 2\ny_max: 4");
    NumericRunOptions o;
    auto run = run_numeric(*gw, numeric_state(), g, g, o);
    EXPECT_EQ(run.properties.size(), 2u);
    EXPECT_EQ(run.records.size(), 3u);
    ASSERT_EQ(run.rows.size(), 2u);
    for (const auto& r : run.rows) {
        if (r.property == "p") {
            EXPECT_EQ(r.n, 2u);
            EXPECT_DOUBLE_EQ(r.y_avg, 2.0);
            EXPECT_DOUBLE_EQ(r.sigma, 1.0);
            EXPECT_DOUBLE_EQ(r.icr, 1.0);
            EXPECT_DOUBLE_EQ(r.iw, 4.0);
            EXPECT_DOUBLE_EQ(r.mse, 1.0);
            EXPECT_DOUBLE_EQ(r.mae, 1.0);
        } else {
            EXPECT_DOUBLE_EQ(r.icr, 0.0);
        }
    }
}

// ---- metrics ---------------------------------------------------------------

TEST(IntervalMetrics, BoundaryInclusive) {
    std::vector<IntervalPrediction> p{{2, 1, 3}};
    std::vector<double> y{3};
    EXPECT_EQ(interval_metrics(p, y).icr, 1.0);
}

TEST(IntervalMetrics, TwoIntervals) {
    std::vector<IntervalPrediction> p{{2, 1, 3}, {4, 2, 6}};
    std::vector<double> y{0, 4};
    auto m = interval_metrics(p, y);
    EXPECT_EQ(m.icr, 0.5);
    EXPECT_EQ(m.iw, 3.0);
}

TEST(IntervalMetrics, LengthMismatchIsContractViolation) {
    std::vector<IntervalPrediction> p{{2, 1, 3}};
    std::vector<double> y{1, 2};
    EXPECT_THROW(interval_metrics(p, y), ContractViolation);
    EXPECT_THROW(interval_metrics({}, {}), ContractViolation);
}

TEST(IntervalMetrics, RandomMatchesLoopOracle) {
    Rng rng(21);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 1 + uniform_index(rng, 20);
        std::vector<IntervalPrediction> p(n);
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double a = std::round(uniform_unit(rng) * 20), b = std::round(uniform_unit(rng) * 20);
            p[i] = {a, std::min(a, b), std::max(a, b)};
            y[i] = std::round(uniform_unit(rng) * 20);
        }
        double hit = 0, width = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (p[i].y_min <= y[i] && y[i] <= p[i].y_max) hit += 1;
            width += p[i].y_max - p[i].y_min;
        }
        auto m = interval_metrics(p, y);
        EXPECT_NEAR(m.icr, hit / n, 1e-12);
        EXPECT_NEAR(m.iw, width / n, 1e-12);
    }
}

TEST(IntervalMetrics, InfiniteAndEmptyIntervals) {
    const double inf = std::numeric_limits<double>::infinity();
    Rng rng(2);
    std::vector<IntervalPrediction> wide, empty;
    std::vector<double> y;
    for (int i = 0; i < 30; ++i) {
        y.push_back(uniform_unit(rng) * 100 - 50);
        wide.push_back({0, -inf, inf});
        empty.push_back({y.back() + 1, y.back() + 1, y.back() + 1});
    }
    EXPECT_EQ(interval_metrics(wide, y).icr, 1.0);
    EXPECT_EQ(interval_metrics(empty, y).icr, 0.0);
    EXPECT_EQ(interval_metrics(empty, y).iw, 0.0);
}

TEST(IntervalMetrics, WidthTranslationAndScale) {
    Rng rng(9);
    std::vector<IntervalPrediction> p, shifted, scaled;
    std::vector<double> y;
    for (int i = 0; i < 20; ++i) {
        const double lo = uniform_unit(rng) * 10, hi = lo + uniform_unit(rng) * 5;
        p.push_back({lo, lo, hi});
        shifted.push_back({lo + 7, lo + 7, hi + 7});
        scaled.push_back({lo * 3, lo * 3, hi * 3});
        y.push_back(lo);
    }
    EXPECT_NEAR(interval_metrics(shifted, y).iw, interval_metrics(p, y).iw, 1e-12);
    EXPECT_NEAR(interval_metrics(scaled, y).iw, 3 * interval_metrics(p, y).iw, 1e-12);
}

TEST(FilterOutliers, ConstantUnchanged) {
    std::vector<double> v{4, 4, 4, 4};
    EXPECT_EQ(filter_outliers(v, 3.0), v);
}

TEST(FilterOutliers, SingleSpike) {
    // leave-one-out: the spike's z against {1,1,1,1} is unbounded; each 1 has
    // |1 - 2500.75| / 4329.5 ≈ 0.58 against the rest
    std::vector<double> v{1, 1, 1, 1, 10000};
    EXPECT_EQ(filter_outliers(v, 3.0), (std::vector<double>{1, 1, 1, 1}));
}

TEST(FilterOutliers, EmptyAndBadThreshold) {
    EXPECT_TRUE(filter_outliers({}, 3.0).empty());
    std::vector<double> v{1, 2};
    EXPECT_THROW(filter_outliers(v, 0.0), ContractViolation);
}

TEST(FilterOutliers, MatchesDirectLeaveOneOut) {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + uniform_index(rng, 20);
        std::vector<double> v(n);
        for (auto& x : v) x = uniform_unit(rng) < 0.1 ? uniform_unit(rng) * 1000 : uniform_unit(rng) * 10;
        std::vector<double> expect;
        for (std::size_t i = 0; i < n; ++i) {
            double m = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) m += v[j];
            m /= static_cast<double>(n - 1);
            double s = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i) s += (v[j] - m) * (v[j] - m);
            s = std::sqrt(s / static_cast<double>(n - 1));
            if (std::fabs(v[i] - m) / s <= 2.5) expect.push_back(v[i]);
        }
        EXPECT_EQ(filter_outliers(v, 2.5), expect);
    }
}

TEST(SelectPropertySubset, AllDistinctDeterministic) {
    std::ostringstream text;
    for (int p = 0; p < 14; ++p) text << "e\tprop" << p << "\t" << p << "\n";
    auto g = literal_graph(text.str());
    auto all = select_property_subset(g, 14, 3);
    std::set<std::uint32_t> every;
    for (auto r : all) every.insert(r.value);
    EXPECT_EQ(every.size(), 14u);
    auto ten = select_property_subset(g, 10, 3);
    std::set<std::uint32_t> distinct;
    for (auto r : ten) distinct.insert(r.value);
    EXPECT_EQ(distinct.size(), 10u);
    auto again = select_property_subset(g, 10, 3);
    EXPECT_EQ(ten, again);
    EXPECT_THROW(select_property_subset(g, 15, 3), SizeError);
}

TEST(PropertyRow, LiteralDefinitions) {
    Rng rng(6);
    std::vector<IntervalPrediction> p;
    std::vector<double> y;
    for (int i = 0; i < 25; ++i) {
        const double h = uniform_unit(rng) * 10;
        p.push_back({h, h - 1, h + 1});
        y.push_back(uniform_unit(rng) * 10);
    }
    auto r = property_row("x", p, y);
    double se = 0, ae = 0;
    for (int i = 0; i < 25; ++i) {
        se += (p[i].y_hat - y[i]) * (p[i].y_hat - y[i]);
        ae += std::fabs(p[i].y_hat - y[i]);
    }
    EXPECT_NEAR(r.mse, se / 25, 1e-12);
    EXPECT_NEAR(r.mae, ae / 25, 1e-12);
    EXPECT_NEAR(r.iw, 2.0, 1e-12);
    EXPECT_EQ(numeric_csv_header(), "property,n,y_avg,sigma,y_hat_avg,icr,iw,mse,mae");
    EXPECT_EQ(numeric_csv_row(r).rfind("x,25,", 0), 0u);
}
