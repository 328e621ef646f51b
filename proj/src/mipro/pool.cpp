#include "promptkg/mipro/pool.hpp"

#include <algorithm>
#include <regex>
#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/prompt/pipeline.hpp"

namespace promptkg::mipro {

void CandidatePool::validate() const {
    if (composer_instructions.empty() || scorer_instructions.empty() || demo_subsets.empty())
        throw ContractViolation("candidate pool has an empty dimension");
}

prompt::PromptState materialize(const CandidatePool& pool, CandidateIndex idx, const prompt::PromptState& base) {
    prompt::PromptState st;
    st.composer_instruction = pool.composer_instructions.at(idx.composer);
    st.scorer_instruction = pool.scorer_instructions.at(idx.scorer);
    for (const auto& ex : pool.demo_subsets.at(idx.demos)) {
        st.composer_demos.push_back(ex.composer);
        st.scorer_demos.push_back(ex.scorer);
    }
    st.token_cap = base.token_cap;
    return st;
}

std::string proposal_prompt(const std::string& seed_instruction, Stage stage, std::size_t n_variants,
                            const std::string& task_summary) {
    std::ostringstream p;
    p << "You improve instructions for a language model that performs knowledge graph link prediction.\n"
      << "The model works in two stages: a composer proposes tail entities for a query (subject, relation, ?), "
         "and a scorer assigns each candidate a likelihood between 0 and 1.\n\n"
      << "Task description:\n" << task_summary << "\n\n"
      << "Current " << (stage == Stage::Composer ? "composer" : "scorer") << " instruction:\n"
      << "<instruction>\n" << seed_instruction << "\n</instruction>\n\n"
      << "Write " << n_variants
      << " different improved versions of this instruction. Keep the same task and output expectations, vary "
         "the framing, the reasoning strategy and the level of detail.\n"
      << "Return each version inside its own <instruction> ... </instruction> tags and nothing else.";
    return p.str();
}

std::vector<std::string> parse_proposals(const std::string& answer) {
    std::vector<std::string> out;
    static const std::regex tagged(R"(<instruction>([\s\S]*?)</instruction>)");
    for (auto it = std::sregex_iterator(answer.begin(), answer.end(), tagged); it != std::sregex_iterator(); ++it) {
        auto s = trim((*it)[1].str());
        if (!s.empty()) out.push_back(s);
    }
    if (!out.empty()) return out;
    // numbered lines
    static const std::regex numbered(R"(^\s*\d+[.)]\s+(.+)$)");
    for (const auto& line : split(answer, '\n')) {
        std::smatch m;
        if (std::regex_match(line, m, numbered)) out.push_back(trim(m[1].str()));
    }
    return out;
}

ProposalResult propose_instruction_candidates(lm::LmGateway& gateway, const prompt::PromptState& seed, Stage stage,
                                              std::size_t n, const std::string& task_summary) {
    if (n == 0) throw ContractViolation("instruction pool size must be >= 1");
    const std::string base = stage == Stage::Composer ? seed.composer_instruction : seed.scorer_instruction;
    ProposalResult res;
    res.instructions.push_back(base);
    if (n == 1) return res;

    std::set<std::string> seen{trim(base)};
    try {
        const auto answer = gateway.complete(lm::user_request(proposal_prompt(base, stage, n - 1, task_summary), 2048));
        for (auto& s : parse_proposals(answer.text)) {
            if (res.instructions.size() >= n) break;
            if (seen.insert(trim(s)).second) res.instructions.push_back(s);
        }
        if (res.instructions.size() < n)
            res.warnings.push_back("instruction proposal returned " + std::to_string(res.instructions.size() - 1) +
                                   " distinct variants of " + std::to_string(n - 1) + "; padding with seed variants");
    } catch (const std::exception& e) {
        res.warnings.push_back(std::string("instruction proposal failed, using seed-only pool: ") + e.what());
    }
    for (std::size_t tag = 1; res.instructions.size() < n; ++tag) {
        std::string v = base + "\n[variant " + std::to_string(tag) + "]";
        if (seen.insert(trim(v)).second) res.instructions.push_back(std::move(v));
    }
    return res;
}

std::vector<DemoSubset> sample_demo_subsets(const std::vector<FewShotExample>& examples, std::size_t m,
                                            std::size_t k, std::uint64_t seed) {
    if (m == 0) throw ContractViolation("need at least the zero-shot demo subset");
    std::vector<DemoSubset> out{DemoSubset{}};
    if (m == 1) return out;
    if (k > examples.size())
        throw SizeError("demo subset size " + std::to_string(k) + " exceeds " + std::to_string(examples.size()) +
                        " available examples");
    Rng rng(substream_seed(seed, "demo-subsets"));
    std::vector<std::size_t> order(examples.size());
    for (std::size_t i = 1; i < m; ++i) {
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
        stable_shuffle(order, rng);
        DemoSubset subset;
        for (std::size_t j = 0; j < k; ++j) subset.push_back(examples[order[j]]);
        out.push_back(std::move(subset));
    }
    return out;
}

std::vector<FewShotExample> build_few_shot_examples(const kg::KnowledgeGraph& train, std::size_t limit,
                                                    std::uint64_t seed) {
    const auto& v = train.vocab();
    auto groups = kg::kvsall_groups(train);
    std::erase_if(groups, [](const kg::KvsAllGroup& g) {
        return std::any_of(g.objects.begin(), g.objects.end(), [](const kg::Object& o) { return std::holds_alternative<double>(o); });
    });
    Rng rng(substream_seed(seed, "few-shot"));
    stable_shuffle(groups, rng);
    if (groups.size() > limit) groups.resize(limit);
    const auto entities = train.entities();

    std::vector<FewShotExample> out;
    for (const auto& g : groups) {
        std::string facts;
        std::size_t n = 0;
        for (const auto& t : kg::neighborhood(train, g.subject, g.relation)) {
            if (n++ >= 10) break;
            facts += (facts.empty() ? "" : "\n") + ("(" + v.entity_text(t.subject) + ", " + v.relation_text(t.relation) +
                                                    ", " + kg::render_object(v, t.object, true) + ")");
        }
        std::vector<std::string> answers;
        std::set<std::uint32_t> truth;
        for (const auto& o : g.objects) {
            answers.push_back(v.entity_text(std::get<kg::EntityId>(o)));
            truth.insert(std::get<kg::EntityId>(o).value);
        }
        std::vector<std::string> cands = answers;
        std::vector<double> scores(answers.size(), 0.95);
        for (int tries = 0, added = 0; tries < 20 && added < 2 && !entities.empty(); ++tries) {
            const auto e = entities[uniform_index(rng, entities.size())];
            if (truth.insert(e.value).second) {
                cands.push_back(v.entity_text(e));
                scores.push_back(0.05);
                ++added;
            }
        }
        const std::string subject = v.entity_text(g.subject);
        const std::string relation = v.relation_text(g.relation);
        out.push_back({prompt::make_composer_demo(subject, relation, facts, answers),
                       prompt::make_scorer_demo(subject, relation, facts, cands, scores)});
    }
    return out;
}

std::string task_summary(const kg::KnowledgeGraph& g) {
    const auto& v = g.vocab();
    std::ostringstream s;
    s << "A knowledge graph with " << v.entity_count() << " entities and " << g.size() << " facts. Relations:";
    for (auto r : g.relations()) s << ' ' << v.relation_text(r);
    s << ".\nExample facts:";
    const auto ts = g.triples();
    for (std::size_t i = 0; i < ts.size() && i < 5; ++i)
        s << "\n(" << v.entity_text(ts[i].subject) << ", " << v.relation_text(ts[i].relation) << ", "
          << kg::render_object(v, ts[i].object, true) << ")";
    return s.str();
}

}  // namespace promptkg::mipro
