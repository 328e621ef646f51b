#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/kg/io.hpp"
#include "promptkg/lm/scripted.hpp"
#include "promptkg/owl/expression.hpp"
#include "promptkg/owl/parser.hpp"
#include "promptkg/owl/reasoner.hpp"
#include "promptkg/owl/render.hpp"
#include "promptkg/owl/retrieval.hpp"
#include "promptkg/prompt/parse.hpp"
#include "promptkg/prompt/render.hpp"

using namespace promptkg;
using namespace promptkg::owl;

namespace {

kg::KnowledgeGraph graph_of(const std::string& tsv) {
    std::istringstream in(tsv);
    return kg::parse_triples(in, {}).graph;
}

const char* kFamily =
    "anna\ttype\tFemale\n"
    "anna\ttype\tPerson\n"
    "heinz\ttype\tMale\n"
    "heinz\ttype\tPerson\n"
    "markus\ttype\tMale\n"
    "markus\ttype\tPerson\n"
    "michelle\ttype\tFemale\n"
    "michelle\ttype\tPerson\n"
    "stefan\ttype\tMale\n"
    "stefan\ttype\tPerson\n"
    "anna\thasChild\tmarkus\n"
    "anna\thasChild\tmichelle\n"
    "heinz\thasChild\tmarkus\n"
    "heinz\thasChild\tmichelle\n"
    "markus\thasChild\tstefan\n";

std::set<std::string> names(const kg::KnowledgeGraph& g, const EntitySet& s) {
    std::set<std::string> out;
    for (auto e : s) out.insert(g.vocab().entity_name(e));
    return out;
}

ExprPtr manchester(const std::string& text, const std::string& prefix = "") {
    return parse_class_expression(text, Syntax::Manchester, {prefix});
}
ExprPtr dl(const std::string& text, const std::string& prefix = "") {
    return parse_class_expression(text, Syntax::Dl, {prefix});
}

// ---- random ASTs -----------------------------------------------------------

struct AstGen {
    Rng rng;
    std::vector<std::string> classes{"A", "B", "C"};
    std::vector<std::string> roles{"r", "s", "t"};
    std::vector<std::string> people{"e0", "e1", "e2", "e3", "e4"};
    bool allow_inverse = true;
    bool allow_nominals = true;

    std::string pick(const std::vector<std::string>& v) { return v[uniform_index(rng, v.size())]; }
    Role any_role() { return Role{pick(roles), allow_inverse && uniform_index(rng, 4) == 0}; }

    ExprPtr leaf() {
        if (allow_nominals && uniform_index(rng, 5) == 0) {
            std::vector<std::string> ids;
            const auto k = 1 + uniform_index(rng, 3);
            for (std::size_t i = 0; i < k; ++i) ids.push_back(pick(people));
            return one_of(ids);
        }
        return atomic(pick(classes));
    }

    ExprPtr expr(std::size_t depth) {
        if (depth <= 1) return leaf();
        switch (uniform_index(rng, 9)) {
            case 0: return leaf();
            case 1: return negation(expr(depth - 1));
            case 2: return conjunction(expr(depth - 1), expr(depth - 1));
            case 3: return disjunction(expr(depth - 1), expr(depth - 1));
            case 4: return exists(any_role(), expr(depth - 1));
            case 5: return forall(any_role(), expr(depth - 1));
            case 6: return min_card(static_cast<unsigned>(uniform_index(rng, 4)), any_role(), expr(depth - 1));
            case 7: return max_card(static_cast<unsigned>(uniform_index(rng, 4)), any_role(), expr(depth - 1));
            default: return min_card(1, Role{pick(roles), allow_inverse}, expr(depth - 1));
        }
    }

    // Top constructor chosen so the expression lands in `g`.
    ExprPtr of_group(ConceptGroup g, std::size_t depth) {
        allow_inverse = false;
        allow_nominals = false;
        ExprPtr e;
        switch (g) {
            case ConceptGroup::Atomic: e = atomic(pick(classes)); break;
            case ConceptGroup::Negation: e = negation(expr(depth - 1)); break;
            case ConceptGroup::Conjunction: e = conjunction(expr(depth - 1), expr(depth - 1)); break;
            case ConceptGroup::Disjunction: e = disjunction(expr(depth - 1), expr(depth - 1)); break;
            case ConceptGroup::Existential: e = exists(any_role(), expr(depth - 1)); break;
            case ConceptGroup::Universal: e = forall(any_role(), expr(depth - 1)); break;
            case ConceptGroup::AtLeast:
                e = min_card(static_cast<unsigned>(uniform_index(rng, 4)), any_role(), expr(depth - 1));
                break;
            case ConceptGroup::AtMost:
                e = max_card(static_cast<unsigned>(uniform_index(rng, 4)), any_role(), expr(depth - 1));
                break;
            case ConceptGroup::Nominals:
                allow_nominals = true;
                e = uniform_index(rng, 2) ? conjunction(expr(depth - 1), one_of({pick(people), pick(people)}))
                                          : exists(any_role(), one_of({pick(people)}));
                break;
            case ConceptGroup::Inverse:
                allow_nominals = uniform_index(rng, 2) == 0;
                e = exists(Role{pick(roles), true}, expr(depth - 1));
                if (uniform_index(rng, 2)) e = negation(e);
                break;
        }
        allow_inverse = true;
        allow_nominals = true;
        return e;
    }
};

// ---- second evaluator ------------------------------------------------------
// Per-individual satisfaction over the raw triple list; shares no code with
// the reasoner.

struct NaiveAbox {
    std::set<std::string> domain;
    std::set<std::pair<std::string, std::string>> types;  // (x, class)
    std::set<std::tuple<std::string, std::string, std::string>> edges;  // (x, role, y) incl. super-roles

    NaiveAbox(const kg::KnowledgeGraph& g, const std::vector<std::pair<std::string, std::string>>& subroles) {
        const auto& v = g.vocab();
        for (const auto& t : g.triples()) {
            const auto s = v.entity_name(t.subject);
            const auto r = v.relation_name(t.relation);
            const auto o = v.entity_name(t.object_entity());
            domain.insert(s);
            if (r == "type") {
                types.insert({s, o});
                continue;
            }
            domain.insert(o);
            std::vector<std::string> frontier{r};
            std::set<std::string> done;
            while (!frontier.empty()) {
                auto cur = frontier.back();
                frontier.pop_back();
                if (!done.insert(cur).second) continue;
                edges.insert({s, cur, o});
                for (const auto& [sub, sup] : subroles)
                    if (sub == cur) frontier.push_back(sup);
            }
        }
    }

    std::vector<std::string> successors(const std::string& x, const Role& r) const {
        std::vector<std::string> out;
        for (const auto& [a, role, b] : edges) {
            if (role != r.name) continue;
            if (!r.inverted && a == x) out.push_back(b);
            if (r.inverted && b == x) out.push_back(a);
        }
        return out;
    }

    bool sat(const std::string& x, const ClassExpression& e) const {
        switch (e.kind()) {
            case Kind::Atomic: return types.contains({x, e.name()});
            case Kind::Not: return !sat(x, e.operand());
            case Kind::And: return sat(x, e.left()) && sat(x, e.right());
            case Kind::Or: return sat(x, e.left()) || sat(x, e.right());
            case Kind::OneOf:
                return std::find(e.individuals().begin(), e.individuals().end(), x) != e.individuals().end();
            default: break;
        }
        std::size_t total = 0, good = 0;
        for (const auto& y : successors(x, e.role())) {
            ++total;
            good += sat(y, e.filler()) ? 1 : 0;
        }
        switch (e.kind()) {
            case Kind::Exists: return good > 0;
            case Kind::Forall: return good == total;
            case Kind::MinCard: return good >= e.cardinality();
            default: return good <= e.cardinality();
        }
    }

    std::set<std::string> extension(const ClassExpression& e) const {
        std::set<std::string> out;
        for (const auto& x : domain)
            if (sat(x, e)) out.insert(x);
        return out;
    }
};

kg::KnowledgeGraph random_abox(Rng& rng, std::size_t n_entities, std::size_t n_edges) {
    std::string tsv;
    const std::vector<std::string> classes{"A", "B", "C"};
    const std::vector<std::string> roles{"r", "s", "t"};
    for (std::size_t i = 0; i < n_entities; ++i)
        for (const auto& c : classes)
            if (uniform_index(rng, 2)) tsv += "e" + std::to_string(i) + "\ttype\t" + c + "\n";
    for (std::size_t k = 0; k < n_edges; ++k)
        tsv += "e" + std::to_string(uniform_index(rng, n_entities)) + "\t" + roles[uniform_index(rng, 3)] + "\te" +
               std::to_string(uniform_index(rng, n_entities)) + "\n";
    // every entity is an individual
    for (std::size_t i = 0; i < n_entities; ++i) tsv += "e" + std::to_string(i) + "\ttype\tThing\n";
    return graph_of(tsv);
}

// Answers retrieval prompts with the reasoner's result for the query concept.
std::shared_ptr<lm::ScriptedLm> oracle_backend(const kg::KnowledgeGraph& g, const ReasonerOptions& ropts,
                                               const std::string& iri_prefix) {
    auto lm = std::make_shared<lm::ScriptedLm>("Example: the instances follow from the graph.");
    auto reasoner = std::make_shared<ClosedWorldReasoner>(g, ropts);
    lm->respond_with([&g, reasoner, iri_prefix](const lm::LmRequest& req) -> std::optional<std::string> {
        const auto text = req.prompt_text();
        if (text.find("Instances: [") == std::string::npos && text.find("Examples:") == std::string::npos)
            return std::nullopt;
        const auto concept_text = prompt::extract_field(text, "concept");
        ExprPtr e;
        for (auto syn : {Syntax::Manchester, Syntax::Dl}) {
            for (const auto& pre : {std::string("ns:"), iri_prefix}) {
                try {
                    e = parse_class_expression(concept_text, syn, {pre});
                    break;
                } catch (const SyntaxError&) {
                }
            }
            if (e) break;
        }
        if (!e) return std::string("Reasoning: cannot read the concept.\nInstances: []");
        std::string out = "Reasoning: checked every individual.\nInstances: [";
        bool first = true;
        for (auto x : reasoner->retrieve(*e)) {
            out += (first ? "" : ", ") + g.vocab().entity_name(x);
            first = false;
        }
        return out + "]";
    });
    return lm;
}

}  // namespace

// ---- parsing ---------------------------------------------------------------

TEST(OwlParse, ExistentialInBothSyntaxes) {
    auto want = exists(role("hasChild"), atomic("Female"));
    EXPECT_EQ(*manchester("hasChild some Female"), *want);
    EXPECT_EQ(*dl("∃hasChild.Female"), *want);
}

TEST(OwlParse, QualifiedMinCardinalityInBothSyntaxes) {
    auto want = min_card(5, role("hasChild"), atomic("Female"));
    EXPECT_EQ(*manchester("hasChild min 5 Female"), *want);
    EXPECT_EQ(*dl("≥ 5 hasChild.Female"), *want);
    EXPECT_EQ(*dl("≥ 5 \t hasChild . Female"), *want);
}

TEST(OwlParse, NegationBindsTighterThanDisjunction) {
    EXPECT_EQ(*manchester("not (A or B)"), *negation(disjunction(atomic("A"), atomic("B"))));
    EXPECT_EQ(*manchester("not A or B"), *disjunction(negation(atomic("A")), atomic("B")));
    EXPECT_EQ(*dl("¬(A ⊔ B)"), *negation(disjunction(atomic("A"), atomic("B"))));
    EXPECT_EQ(*dl("¬A ⊔ B"), *disjunction(negation(atomic("A")), atomic("B")));
}

TEST(OwlParse, AndBindsTighterThanOrAndBothAssociateLeft) {
    auto a = atomic("A"), b = atomic("B"), c = atomic("C");
    EXPECT_EQ(*manchester("A or B and C"), *disjunction(a, conjunction(b, c)));
    EXPECT_EQ(*manchester("A and B and C"), *conjunction(conjunction(a, b), c));
    EXPECT_EQ(*manchester("A and (B and C)"), *conjunction(a, conjunction(b, c)));
    EXPECT_EQ(*dl("A ⊓ B ⊔ C"), *disjunction(conjunction(a, b), c));
}

TEST(OwlParse, QuantifierFillerIsUnary) {
    EXPECT_EQ(*manchester("r some A and B"), *conjunction(exists(role("r"), atomic("A")), atomic("B")));
    EXPECT_EQ(*manchester("r some (A and B)"), *exists(role("r"), conjunction(atomic("A"), atomic("B"))));
    EXPECT_EQ(*dl("∃r.A ⊓ B"), *conjunction(exists(role("r"), atomic("A")), atomic("B")));
    EXPECT_EQ(*manchester("r some s only not A"),
              *exists(role("r"), forall(role("s"), negation(atomic("A")))));
}

TEST(OwlParse, InverseRolesAndNominals) {
    auto want = exists(role("hasChild", true), atomic("Male"));
    EXPECT_EQ(*manchester("inverse hasChild some Male"), *want);
    EXPECT_EQ(*manchester("inverse (hasChild) some Male"), *want);
    EXPECT_EQ(*dl("∃hasChild⁻.Male"), *want);
    EXPECT_EQ(*manchester("{anna, heinz}"), *one_of({"anna", "heinz"}));
    EXPECT_EQ(*dl("≤ 0 r⁻.{a}"), *max_card(0, role("r", true), one_of({"a"})));
}

TEST(OwlParse, PrefixesAreStripped) {
    auto want = exists(role("hasChild"), atomic("Female"));
    EXPECT_EQ(*manchester("ns:hasChild some ns:Female", "ns:"), *want);
    EXPECT_EQ(*dl("∃<http://example.com/f#hasChild>.<http://example.com/f#Female>", "http://example.com/f#"), *want);
    // without the prefix configured the qualified name is kept
    EXPECT_EQ(manchester("ns:Female")->name(), "ns:Female");
}

TEST(OwlParse, SyntaxErrorsCarryPositionAndExpectedTokens) {
    auto check = [](const std::string& text, Syntax syn, std::size_t pos, const std::string& expected) {
        try {
            parse_class_expression(text, syn);
            ADD_FAILURE() << "accepted: " << text;
        } catch (const SyntaxError& e) {
            EXPECT_EQ(e.position(), pos) << text;
            const auto& ex = e.expected();
            EXPECT_NE(std::find(ex.begin(), ex.end(), expected), ex.end()) << text << ": " << e.what();
        }
    };
    check("hasChild some", Syntax::Manchester, 13, "name");
    check("A B", Syntax::Manchester, 2, "'and'");
    check("A and", Syntax::Manchester, 5, "name");
    check("(A or B", Syntax::Manchester, 7, "')'");
    check("hasChild min Female", Syntax::Manchester, 13, "integer");
    check("inverse r A", Syntax::Manchester, 10, "'some'");
    check("∃hasChild Female", Syntax::Dl, 12, "'.'");
    check("≥ hasChild.Female", Syntax::Dl, 4, "integer");
    check("{a, }", Syntax::Manchester, 4, "name");
    check("A ⊓ B", Syntax::Manchester, 2, "'and'");
    check("A and B", Syntax::Dl, 2, "'⊓'");
    EXPECT_THROW(parse_class_expression("  ", Syntax::Dl), ContractViolation);
}

TEST(OwlParse, KeywordsAreNotNames) {
    EXPECT_THROW(manchester("some"), SyntaxError);
    EXPECT_THROW(manchester("A and or"), SyntaxError);
    // in DL the same words are ordinary names
    EXPECT_EQ(*dl("some ⊓ only"), *conjunction(atomic("some"), atomic("only")));
}

// ---- rendering -------------------------------------------------------------

TEST(OwlRender, Examples) {
    EXPECT_EQ(render(*atomic("Female"), Syntax::Dl), "Female");
    EXPECT_EQ(render(*exists(role("hasChild"), atomic("Female")), Syntax::Manchester, "ns:"),
              "ns:hasChild some ns:Female");
    EXPECT_EQ(render(*min_card(5, role("hasChild"), atomic("Female")), Syntax::Dl), "≥ 5 hasChild.Female");
    EXPECT_EQ(render(*exists(role("hasChild", true), atomic("Male")), Syntax::Dl, "http://x.org/f#"),
              "∃<http://x.org/f#hasChild>⁻.<http://x.org/f#Male>");
    EXPECT_EQ(render(*negation(disjunction(atomic("A"), atomic("B"))), Syntax::Manchester), "not (A or B)");
    EXPECT_EQ(render(*conjunction(atomic("A"), conjunction(atomic("B"), atomic("C"))), Syntax::Dl), "A ⊓ (B ⊓ C)");
    EXPECT_EQ(render(*conjunction(conjunction(atomic("A"), atomic("B")), atomic("C")), Syntax::Dl), "A ⊓ B ⊓ C");
    EXPECT_EQ(render(*one_of({"anna", "heinz"}), Syntax::Manchester, "ns:"), "{ns:anna, ns:heinz}");
}

TEST(OwlRender, LocalName) {
    EXPECT_EQ(local_name("<http://example.com/family#anna>"), "anna");
    EXPECT_EQ(local_name("http://example.com/family/anna"), "anna");
    EXPECT_EQ(local_name("ns:anna"), "anna");
    EXPECT_EQ(local_name("anna"), "anna");
}

TEST(OwlRender, RoundTripFiveHundredRandomAsts) {
    AstGen gen{Rng(substream_seed(11, "owl-roundtrip"))};
    std::size_t checked = 0;
    for (int i = 0; i < 500; ++i) {
        auto e = gen.expr(1 + uniform_index(gen.rng, 4));
        ASSERT_LE(e->depth(), 4u);
        for (auto syn : {Syntax::Manchester, Syntax::Dl})
            for (const std::string pre : {"", "ns:", "http://example.com/family#"}) {
                const auto text = render(*e, syn, pre);
                ExprPtr back;
                ASSERT_NO_THROW(back = parse_class_expression(text, syn, {pre})) << text;
                ASSERT_EQ(*back, *e) << text;
                ++checked;
            }
    }
    EXPECT_EQ(checked, 3000u);
}

// ---- classification --------------------------------------------------------

TEST(OwlClassify, PriorityRule) {
    EXPECT_EQ(classify_concept(*atomic("Female")), ConceptGroup::Atomic);
    EXPECT_EQ(classify_concept(*exists(role("hasChild", true), atomic("Male"))), ConceptGroup::Inverse);
    EXPECT_EQ(classify_concept(*conjunction(atomic("Female"), one_of({"anna"}))), ConceptGroup::Nominals);
    EXPECT_EQ(classify_concept(*negation(exists(role("r"), one_of({"a"})))), ConceptGroup::Nominals);
    EXPECT_EQ(classify_concept(*one_of({"a"})), ConceptGroup::Nominals);
    EXPECT_EQ(classify_concept(*negation(exists(role("r"), atomic("A")))), ConceptGroup::Negation);
    EXPECT_EQ(classify_concept(*max_card(1, role("r"), one_of({"a"}))), ConceptGroup::Nominals);
    EXPECT_EQ(classify_concept(*forall(role("r"), exists(role("s", true), one_of({"a"})))), ConceptGroup::Inverse);
    EXPECT_EQ(all_concept_groups().size(), 10u);
    EXPECT_EQ(to_string(ConceptGroup::AtLeast), "At least restriction");
}

// ---- reasoner --------------------------------------------------------------

TEST(OwlReasoner, SpecExamples) {
    auto g = graph_of(kFamily);
    // Person covers every individual
    EXPECT_TRUE(oracle_retrieve(g, *negation(atomic("Person"))).empty());
    // stefan and michelle have no children: included vacuously
    EXPECT_EQ(names(g, oracle_retrieve(g, *forall(role("hasChild"), atomic("Female")))),
              (std::set<std::string>{"michelle", "stefan"}));
    EXPECT_EQ(names(g, oracle_retrieve(g, *exists(role("hasChild"), atomic("Female")))),
              (std::set<std::string>{"anna", "heinz"}));
    EXPECT_EQ(names(g, oracle_retrieve(g, *min_card(2, role("hasChild"), atomic("Person")))),
              (std::set<std::string>{"anna", "heinz"}));
    EXPECT_EQ(names(g, oracle_retrieve(g, *max_card(0, role("hasChild"), atomic("Male")))),
              (std::set<std::string>{"michelle", "stefan"}));
    EXPECT_EQ(names(g, oracle_retrieve(g, *exists(role("hasChild", true), atomic("Female")))),
              (std::set<std::string>{"markus", "michelle"}));
    EXPECT_EQ(names(g, oracle_retrieve(g, *one_of({"anna", "nobody"}))), (std::set<std::string>{"anna"}));
}

TEST(OwlReasoner, DomainExcludesClassNames) {
    auto g = graph_of(kFamily);
    ClosedWorldReasoner r(g);
    EXPECT_EQ(r.individuals().size(), 5u);
    EXPECT_FALSE(r.find_individual("Female"));
    EXPECT_TRUE(r.find_individual("anna"));
    EXPECT_EQ(r.class_names(), (std::vector<std::string>{"Female", "Male", "Person"}));
}

TEST(OwlReasoner, UnknownNamesWarnAndContributeNothing) {
    auto g = graph_of(kFamily);
    std::vector<std::string> warnings;
    EXPECT_TRUE(oracle_retrieve(g, *atomic("Robot"), {}, &warnings).empty());
    ASSERT_EQ(warnings.size(), 1u);
    EXPECT_NE(warnings[0].find("Robot"), std::string::npos);
    warnings.clear();
    // unknown role: no successors, so 'only' holds everywhere
    EXPECT_EQ(oracle_retrieve(g, *forall(role("likes"), atomic("Male")), {}, &warnings).size(), 5u);
    EXPECT_EQ(warnings.size(), 1u);
}

TEST(OwlReasoner, SubroleEdgesCountForSuperRoles) {
    auto g = graph_of("a\ttype\tP\nb\ttype\tP\nc\ttype\tP\na\thasSon\tb\nc\thasDaughter\tb\n");
    ReasonerOptions opts;
    opts.subroles = parse_subrole_table("hasSon\thasChild\n# comment\nhasDaughter hasChild\n");
    EXPECT_EQ(names(g, oracle_retrieve(g, *exists(role("hasChild"), atomic("P")), opts)),
              (std::set<std::string>{"a", "c"}));
    EXPECT_EQ(names(g, oracle_retrieve(g, *min_card(2, role("hasChild", true), atomic("P")), opts)),
              (std::set<std::string>{"b"}));
    // no table: the super-role is unknown
    EXPECT_TRUE(oracle_retrieve(g, *exists(role("hasChild"), atomic("P"))).empty());
    EXPECT_THROW(parse_subrole_table("a b c\n"), ParseError);
}

TEST(OwlReasoner, TransitiveSubroles) {
    auto g = graph_of("a\tr1\tb\n");
    ReasonerOptions opts;
    opts.subroles = {{"r1", "r2"}, {"r2", "r3"}, {"r3", "r1"}};
    EXPECT_EQ(names(g, oracle_retrieve(g, *exists(role("r3"), one_of({"b"})), opts)), (std::set<std::string>{"a"}));
}

TEST(OwlReasoner, NamespacedGraphsMatchLocalNames) {
    auto g = graph_of(
        "<http://ex.org/f#anna>\t<http://www.w3.org/1999/02/22-rdf-syntax-ns#type>\t<http://ex.org/f#Female>\n"
        "<http://ex.org/f#anna>\t<http://ex.org/f#hasChild>\t<http://ex.org/f#bob>\n");
    ClosedWorldReasoner r(g);
    EXPECT_EQ(r.individuals().size(), 2u);
    EXPECT_EQ(r.retrieve(*atomic("Female")).size(), 1u);
    EXPECT_EQ(r.retrieve(*exists(role("hasChild"), atomic("Female"))).size(), 0u);
    EXPECT_EQ(r.retrieve(*exists(role("hasChild"), one_of({"bob"}))).size(), 1u);
    EXPECT_TRUE(r.find_individual("bob"));
}

TEST(OwlReasoner, MatchesSecondEvaluatorOnRandomGraphs) {
    Rng rng(substream_seed(5, "owl-reasoner"));
    AstGen gen{Rng(substream_seed(5, "owl-asts"))};
    const std::vector<std::pair<std::string, std::string>> subroles{{"t", "r"}};
    std::map<ConceptGroup, int> covered;
    for (int i = 0; i < 200; ++i) {
        auto g = random_abox(rng, 15, 40);
        ReasonerOptions opts;
        opts.subroles = subroles;
        ClosedWorldReasoner reasoner(g, opts);
        NaiveAbox naive(g, subroles);
        const auto group = all_concept_groups()[static_cast<std::size_t>(i) % 10];
        auto e = gen.of_group(group, 1 + uniform_index(gen.rng, 4));
        ASSERT_EQ(classify_concept(*e), group);
        ++covered[group];
        EXPECT_EQ(names(g, reasoner.retrieve(*e)), naive.extension(*e)) << render(*e, Syntax::Manchester);
    }
    EXPECT_EQ(covered.size(), 10u);
}

TEST(OwlReasoner, IdentitiesOnRandomGraphs) {
    Rng rng(substream_seed(6, "owl-identities"));
    AstGen gen{Rng(substream_seed(6, "owl-identity-asts"))};
    for (int i = 0; i < 200; ++i) {
        auto g = random_abox(rng, 15, 40);
        ClosedWorldReasoner reasoner(g);
        auto a = gen.expr(3), b = gen.expr(3);
        // De Morgan
        EXPECT_EQ(reasoner.retrieve(*negation(conjunction(a, b))),
                  reasoner.retrieve(*disjunction(negation(a), negation(b))));
        EXPECT_EQ(reasoner.retrieve(*negation(disjunction(a, b))),
                  reasoner.retrieve(*conjunction(negation(a), negation(b))));
        // Exists = MinCard 1; Forall = not Exists not
        auto r = gen.any_role();
        EXPECT_EQ(reasoner.retrieve(*exists(r, a)), reasoner.retrieve(*min_card(1, r, a)));
        EXPECT_EQ(reasoner.retrieve(*forall(r, a)), reasoner.retrieve(*negation(exists(r, negation(a)))));
        // OneOf(S) = S ∩ domain
        std::vector<std::string> listed{"e" + std::to_string(uniform_index(rng, 20)),
                                        "e" + std::to_string(uniform_index(rng, 20))};
        std::set<std::string> expect;
        for (const auto& n : listed)
            if (reasoner.find_individual(n)) expect.insert(n);
        EXPECT_EQ(names(g, reasoner.retrieve(*one_of(listed))), expect);
    }
}

// ---- jaccard ---------------------------------------------------------------

TEST(OwlJaccard, Examples) {
    auto set = [](std::initializer_list<std::uint32_t> ids) {
        EntitySet s;
        for (auto i : ids) s.insert(kg::EntityId{i});
        return s;
    };
    EXPECT_EQ(jaccard(set({1, 2}), set({1, 2})), 1.0);
    EXPECT_EQ(jaccard(set({1, 2}), set({3})), 0.0);
    EXPECT_DOUBLE_EQ(jaccard(set({1, 2}), set({2, 3})), 1.0 / 3.0);
    EXPECT_EQ(jaccard({}, {}), 1.0);
    EXPECT_EQ(jaccard(set({1}), {}), 0.0);
}

TEST(OwlJaccard, PropertiesAgainstBruteForce) {
    Rng rng(substream_seed(3, "jaccard"));
    for (int i = 0; i < 1000; ++i) {
        EntitySet a, b;
        std::vector<bool> ina(12), inb(12);
        for (std::uint32_t k = 0; k < 12; ++k) {
            if (uniform_index(rng, 3) == 0) a.insert(kg::EntityId{k}), ina[k] = true;
            if (uniform_index(rng, 3) == 0) b.insert(kg::EntityId{k}), inb[k] = true;
        }
        int both = 0, any = 0;
        for (int k = 0; k < 12; ++k) {
            both += ina[k] && inb[k];
            any += ina[k] || inb[k];
        }
        const double want = any ? static_cast<double>(both) / any : 1.0;
        const double got = jaccard(a, b);
        EXPECT_NEAR(got, want, 1e-12);
        EXPECT_EQ(got, jaccard(b, a));
        EXPECT_GE(got, 0.0);
        EXPECT_LE(got, 1.0);
        EXPECT_EQ(got == 1.0, a == b);
    }
}

// ---- LM steps ----------------------------------------------------------------

TEST(OwlSyntaxNote, ListsUsedConstructorsOnly) {
    auto e = conjunction(atomic("A"), exists(role("r", true), one_of({"a"})));
    const auto m = syntax_note(*e, Syntax::Manchester);
    EXPECT_NE(m.find("'C and D'"), std::string::npos);
    EXPECT_NE(m.find("'r some C'"), std::string::npos);
    EXPECT_NE(m.find("'inverse r'"), std::string::npos);
    EXPECT_NE(m.find("'{a, b}'"), std::string::npos);
    EXPECT_EQ(m.find("only"), std::string::npos);
    const auto d = syntax_note(*e, Syntax::Dl);
    EXPECT_NE(d.find("'∃r.C'"), std::string::npos);
    EXPECT_NE(d.find("'r⁻'"), std::string::npos);
    EXPECT_EQ(syntax_note(*e, Syntax::Dl), d);
}

TEST(OwlFewShot, AnswerIsForcedToTruth) {
    auto g = graph_of(kFamily);
    auto lm = std::make_shared<lm::ScriptedLm>("Example: anna and markus and heinz qualify.");
    InstanceRetriever r(std::make_shared<lm::LmGateway>(lm), g, prompt::default_prompt_state("owl"));
    auto c = exists(role("hasChild"), atomic("Female"));
    const auto truth = r.truth(*c);
    auto ex = r.generate_fewshot(*c, truth, {Syntax::Manchester, false});
    EXPECT_FALSE(ex.fallback);
    EXPECT_EQ(ex.answer, (std::vector<std::string>{"anna", "heinz"}));
    EXPECT_EQ(ex.reasoning, "anna and markus and heinz qualify.");
    EXPECT_EQ(ex.concept_text, "hasChild some Female");
    EXPECT_EQ(lm->calls(), 1u);
    const auto prompt = r.render_fewshot_prompt(*c, truth, {Syntax::Dl, true}).text;
    EXPECT_NE(prompt.find("Instances: [<http://example.com/family#anna>, <http://example.com/family#heinz>]"),
              std::string::npos);
    EXPECT_NE(prompt.find("∃<http://example.com/family#hasChild>.<http://example.com/family#Female>"),
              std::string::npos);
    EXPECT_NE(prompt.find("rdf:type"), std::string::npos);
    EXPECT_NE(prompt.find(prompt::default_prompt_state("owl").composer_instruction.substr(0, 30)), std::string::npos);
}

TEST(OwlFewShot, FallbackOnLmFailureContainsGraphConceptAndTruth) {
    auto g = graph_of(kFamily);
    auto lm = std::make_shared<lm::ScriptedLm>("unused");
    lm->respond_with([](const lm::LmRequest&) -> std::optional<std::string> {
        throw lm::TransportError("connection refused");
    });
    InstanceRetriever r(std::make_shared<lm::LmGateway>(lm), g, prompt::default_prompt_state("owl"));
    auto c = exists(role("hasChild"), atomic("Female"));
    auto ex = r.generate_fewshot(*c, r.truth(*c), {Syntax::Manchester, false});
    EXPECT_TRUE(ex.fallback);
    EXPECT_NE(ex.reasoning.find("(anna, hasChild, markus)"), std::string::npos);
    EXPECT_NE(ex.reasoning.find("hasChild some Female"), std::string::npos);
    EXPECT_NE(ex.reasoning.find("[anna, heinz]"), std::string::npos);
    auto again = r.generate_fewshot(*c, r.truth(*c), {Syntax::Manchester, false});
    EXPECT_EQ(again.reasoning, ex.reasoning);
}

TEST(OwlRetrieve, EchoOfOracleScoresOne) {
    auto g = graph_of(kFamily);
    InstanceRetriever r(std::make_shared<lm::LmGateway>(oracle_backend(g, {}, "http://example.com/family#")), g,
                        prompt::default_prompt_state("owl"));
    for (const auto& p : table_presentations()) {
        for (const auto& text : {"hasChild some Female", "not Male", "inverse hasChild some Female", "{anna, stefan}"}) {
            auto c = manchester(text);
            auto pred = r.llm_retrieve(*c, {}, p);
            EXPECT_EQ(jaccard(pred.entities, r.truth(*c)), 1.0) << text << " " << label(p);
            EXPECT_TRUE(pred.warnings.empty());
        }
    }
}

TEST(OwlRetrieve, UnknownNamesDroppedAndDuplicatesCollapsed) {
    auto g = graph_of(kFamily);
    auto lm = std::make_shared<lm::ScriptedLm>("Reasoning: ...\nInstances: [anna, Anna, ns:anna, gandalf, <http://x#heinz>]");
    InstanceRetriever r(std::make_shared<lm::LmGateway>(lm), g, prompt::default_prompt_state("owl"));
    auto pred = r.llm_retrieve(*atomic("Female"), {}, {});
    EXPECT_EQ(names(g, pred.entities), (std::set<std::string>{"anna", "heinz"}));
    ASSERT_EQ(pred.warnings.size(), 1u);
    EXPECT_NE(pred.warnings[0].find("gandalf"), std::string::npos);
}

TEST(OwlRetrieve, DuplicateNamesCollapse) {
    auto g = graph_of(kFamily);
    auto lm = std::make_shared<lm::ScriptedLm>("instances: anna, anna");
    InstanceRetriever r(std::make_shared<lm::LmGateway>(lm), g, prompt::default_prompt_state("owl"));
    EXPECT_EQ(names(g, r.llm_retrieve(*atomic("Female"), {}, {}).entities), (std::set<std::string>{"anna"}));
}

TEST(OwlRetrieve, AnswerForms) {
    EXPECT_EQ(parse_instance_list("Instances: {anna, heinz}"), (std::vector<std::string>{"anna", "heinz"}));
    EXPECT_TRUE(parse_instance_list("Instances: []").empty());
    EXPECT_TRUE(parse_instance_list("Instances: none").empty());
    EXPECT_EQ(parse_instance_list("Instances:\n- anna\n- heinz\n"), (std::vector<std::string>{"anna", "heinz"}));
    EXPECT_THROW(parse_instance_list("I am not sure."), prompt::OutputParseError);
}

TEST(OwlRetrieve, UnparseableOutputCarriesRawText) {
    auto g = graph_of(kFamily);
    auto lm = std::make_shared<lm::ScriptedLm>("no idea");
    InstanceRetriever r(std::make_shared<lm::LmGateway>(lm), g, prompt::default_prompt_state("owl"));
    try {
        r.llm_retrieve(*atomic("Female"), {}, {});
        FAIL();
    } catch (const prompt::OutputParseError& e) {
        EXPECT_EQ(e.raw_text(), "no idea");
    }
}

TEST(OwlRetrieve, ExamplesAppearBeforeTheQueryConcept) {
    auto g = graph_of(kFamily);
    auto lm = std::make_shared<lm::ScriptedLm>("Instances: []");
    InstanceRetriever r(std::make_shared<lm::LmGateway>(lm), g, prompt::default_prompt_state("owl"));
    auto ex = r.fallback_example(*atomic("Male"), r.truth(*atomic("Male")), {});
    std::vector<FewShotExample> examples{ex};
    const auto text = r.render_retrieval_prompt(*atomic("Female"), examples, {}).text;
    const auto at_example = text.find("Example 1\nConcept: Male");
    const auto at_query = text.rfind("Concept: Female");
    ASSERT_NE(at_example, std::string::npos);
    ASSERT_NE(at_query, std::string::npos);
    EXPECT_LT(at_example, at_query);
    EXPECT_NE(text.find("Answer: [heinz, markus, stefan]"), std::string::npos);
}

// ---- concept lists and runs ------------------------------------------------

TEST(OwlConcepts, ParseListWithSyntaxTags) {
    auto list = parse_concept_list("# header\nmanchester\thasChild some Female\n\ndl\t≥ 5 hasChild.Female\n");
    ASSERT_EQ(list.size(), 2u);
    EXPECT_EQ(list[0].line, 2u);
    EXPECT_EQ(list[1].syntax, Syntax::Dl);
    EXPECT_EQ(*list[1].expr, *min_card(5, role("hasChild"), atomic("Female")));
    try {
        parse_concept_list("manchester\tA\nmanchester\tA and\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    EXPECT_THROW(parse_concept_list("A and B\n"), ParseError);
    EXPECT_THROW(parse_concept_list("owl\tA\n"), ParseError);
}

TEST(OwlRun, ShippedFamilyDataCoversAllGroups) {
    const std::string dir = std::string(PROMPTKG_DATA_DIR) + "/family";
    auto g = kg::load_split(dir + "/family.tsv", {}).graph;
    auto concepts = load_concept_list(dir + "/concepts.txt");
    EXPECT_GE(concepts.size(), 130u);
    std::map<ConceptGroup, int> counts;
    for (const auto& c : concepts) ++counts[classify_concept(*c.expr)];
    EXPECT_EQ(counts.size(), 10u);
    std::ifstream sub(dir + "/subroles.tsv");
    std::stringstream ss;
    ss << sub.rdbuf();
    ReasonerOptions opts;
    opts.subroles = parse_subrole_table(ss.str());
    std::vector<std::string> warnings;
    ClosedWorldReasoner reasoner(g, opts);
    for (const auto& c : concepts) reasoner.retrieve(*c.expr, &warnings);
    EXPECT_TRUE(warnings.empty()) << warnings.front();
    EXPECT_EQ(reasoner.individuals().size(), 18u);
}

TEST(OwlRun, OracleBackendScoresOneEverywhere) {
    auto g = graph_of(kFamily);
    auto concepts = parse_concept_list(
        "manchester\tFemale\n"
        "manchester\tnot Male\n"
        "dl\t∃hasChild.Female\n"
        "manchester\thasChild only Male\n"
        "manchester\thasChild min 2 Person\n"
        "dl\t≤ 1 hasChild.Person\n"
        "manchester\t{anna, markus}\n"
        "manchester\tinverse hasChild some Male\n"
        "manchester\tFemale and Person\n"
        "manchester\tFemale or hasChild some Male\n");
    auto lm = oracle_backend(g, {}, "http://example.com/family#");
    InstanceRetriever r(std::make_shared<lm::LmGateway>(lm), g, prompt::default_prompt_state("owl"));
    OwlRunOptions opts;
    opts.seed = 4;
    opts.workers = 2;
    auto run = run_owl(r, concepts, opts);
    ASSERT_EQ(run.example_concepts.size(), 2u);
    EXPECT_EQ(run.records.size(), 4u * 8u);
    EXPECT_EQ(run.failures, 0u);
    // two example calls + eight retrievals per presentation
    EXPECT_EQ(lm->calls(), 4u * 10u);
    for (const auto& rec : run.records) {
        EXPECT_EQ(rec.jaccard, 1.0);
        EXPECT_EQ(std::count(run.example_concepts.begin(), run.example_concepts.end(), rec.concept_index), 0);
    }
    ASSERT_EQ(run.rows.size(), 10u);
    std::size_t total = 0;
    for (const auto& row : run.rows) {
        total += row.count;
        for (const auto& m : row.mean_jaccard) EXPECT_EQ(m.has_value(), row.count > 0);
    }
    EXPECT_EQ(total, 8u);

    std::ostringstream table;
    write_owl_table(table, run);
    EXPECT_EQ(table.str().substr(0, table.str().find('\n')), "group,count,m_ns,dl_ns,m_no_ns,dl_no_ns");
    auto again = run_owl(r, concepts, opts);
    std::ostringstream table2;
    write_owl_table(table2, again);
    EXPECT_EQ(table.str(), table2.str());
    EXPECT_EQ(again.example_concepts, run.example_concepts);
}

TEST(OwlRun, LmFailuresAreScoredAsEmptyPredictions) {
    auto g = graph_of(kFamily);
    auto concepts = parse_concept_list("manchester\tFemale\nmanchester\tMale\nmanchester\tPerson\nmanchester\tRobot\n");
    auto lm = std::make_shared<lm::ScriptedLm>("gibberish");
    InstanceRetriever r(std::make_shared<lm::LmGateway>(lm), g, prompt::default_prompt_state("owl"));
    OwlRunOptions opts;
    opts.examples = 1;
    opts.presentations = {{Syntax::Manchester, false}};
    auto run = run_owl(r, concepts, opts);
    EXPECT_EQ(run.records.size(), 3u);
    EXPECT_EQ(run.failures, 3u);
    for (const auto& rec : run.records) {
        EXPECT_FALSE(rec.ok);
        // Robot has no instances: empty vs empty
        EXPECT_EQ(rec.jaccard, rec.truth.empty() ? 1.0 : 0.0);
    }
}
