#include "promptkg/owl/retrieval.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/owl/render.hpp"
#include "promptkg/prompt/parse.hpp"

namespace promptkg::owl {

double jaccard(const EntitySet& a, const EntitySet& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t common = 0;
    for (const auto& e : a) common += b.contains(e) ? 1 : 0;
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

std::string label(const Presentation& p) {
    return std::string(p.syntax == Syntax::Manchester ? "m" : "dl") + (p.with_namespace ? "_ns" : "_no_ns");
}

const std::vector<Presentation>& table_presentations() {
    static const std::vector<Presentation> order{
        {Syntax::Manchester, true}, {Syntax::Dl, true}, {Syntax::Manchester, false}, {Syntax::Dl, false}};
    return order;
}

namespace {

struct Used {
    std::set<Kind> kinds;
    bool inverse = false;
};

void collect(const ClassExpression& e, Used& u) {
    u.kinds.insert(e.kind());
    if (e.is_restriction() && e.role().inverted) u.inverse = true;
    if (e.is_binary()) {
        collect(e.left(), u);
        collect(e.right(), u);
    } else if (e.kind() != Kind::Atomic && e.kind() != Kind::OneOf) {
        collect(e.operand(), u);
    }
}

}  // namespace

std::string syntax_note(const ClassExpression& e, Syntax syntax) {
    Used u;
    collect(e, u);
    const bool m = syntax == Syntax::Manchester;
    std::vector<std::string> lines;
    lines.push_back(m ? "The concept is written in Manchester syntax." : "The concept is written in description logic notation.");
    lines.push_back("Anything not stated in the graph is false.");
    auto has = [&](Kind k) { return u.kinds.contains(k); };
    if (has(Kind::Atomic)) lines.push_back("A class name denotes the individuals typed with that class.");
    if (has(Kind::Not)) lines.push_back(std::string(m ? "'not C'" : "'¬C'") + " denotes the individuals that are not instances of C.");
    if (has(Kind::And))
        lines.push_back(std::string(m ? "'C and D'" : "'C ⊓ D'") + " denotes the individuals that are instances of both C and D.");
    if (has(Kind::Or))
        lines.push_back(std::string(m ? "'C or D'" : "'C ⊔ D'") + " denotes the individuals that are instances of at least one of C and D.");
    if (has(Kind::Exists))
        lines.push_back(std::string(m ? "'r some C'" : "'∃r.C'") +
                        " denotes the individuals with at least one r-successor that is an instance of C.");
    if (has(Kind::Forall))
        lines.push_back(std::string(m ? "'r only C'" : "'∀r.C'") +
                        " denotes the individuals whose r-successors are all instances of C; individuals without r-successors qualify.");
    if (has(Kind::MinCard))
        lines.push_back(std::string(m ? "'r min n C'" : "'≥ n r.C'") +
                        " denotes the individuals with at least n distinct r-successors that are instances of C.");
    if (has(Kind::MaxCard))
        lines.push_back(std::string(m ? "'r max n C'" : "'≤ n r.C'") +
                        " denotes the individuals with at most n distinct r-successors that are instances of C.");
    if (has(Kind::OneOf)) lines.push_back("'{a, b}' denotes exactly the listed individuals.");
    if (u.inverse)
        lines.push_back(std::string(m ? "'inverse r'" : "'r⁻'") +
                        " reads the role r backwards: x is related to y by it when y is related to x by r.");
    std::string out;
    for (const auto& l : lines) out += (out.empty() ? "" : "\n") + l;
    return out;
}

prompt::Signature fewshot_signature(const std::string& instruction) {
    return prompt::Signature{"owl_fewshot",
                             {{"graph", "the knowledge graph as (subject, relation, object) triples"},
                              {"concept", "the class expression"},
                              {"syntax_note", "what the constructors of the class expression mean"},
                              {"instances", "the correct set of individuals satisfying the concept"}},
                             {{"example", "a step-by-step worked solution that derives exactly these instances"}},
                             instruction};
}

prompt::Signature retrieval_signature(const std::string& instruction) {
    return prompt::Signature{"owl_retrieval",
                             {{"graph", "the knowledge graph as (subject, relation, object) triples"},
                              {"examples", "worked examples for other concepts"},
                              {"concept", "the class expression whose instances are wanted"}},
                             {{"reasoning", "think step by step"},
                              {"instances", "a bracketed, comma-separated list of individual names; [] if none"}},
                             instruction};
}

InstanceRetriever::InstanceRetriever(std::shared_ptr<lm::LmGateway> gateway, const kg::KnowledgeGraph& g,
                                     prompt::PromptState state, ReasonerOptions reasoner, RetrievalOptions opts)
    : gateway_(std::move(gateway)),
      graph_(&g),
      state_(std::move(state)),
      reasoner_(g, std::move(reasoner)),
      opts_(std::move(opts)) {
    if (!gateway_) throw ContractViolation("InstanceRetriever needs a gateway");
    const auto& v = g.vocab();
    for (auto e : reasoner_.individuals()) by_key_.emplace(to_lower(v.entity_name(e)), e);
    for (auto e : reasoner_.individuals()) by_key_.emplace(to_lower(local_name(v.entity_name(e))), e);
}

std::string InstanceRetriever::entity_text(kg::EntityId e, const Presentation& p) const {
    return qualify(local_name(graph_->vocab().entity_name(e)), prefix(p));
}

std::string InstanceRetriever::graph_text(const Presentation& p) const {
    const auto& v = graph_->vocab();
    const auto pre = prefix(p);
    std::string out;
    for (const auto& t : graph_->triples()) {
        const std::string rel = reasoner_.is_type_relation(t.relation)
                                    ? (p.with_namespace ? "rdf:type" : "type")
                                    : qualify(local_name(v.relation_name(t.relation)), pre);
        const std::string obj =
            t.is_literal() ? kg::format_number(t.object_value()) : qualify(local_name(v.entity_name(t.object_entity())), pre);
        out += (out.empty() ? "" : "\n") + ("(" + entity_text(t.subject, p) + ", " + rel + ", " + obj + ")");
    }
    return out;
}

std::size_t InstanceRetriever::render_cap() const {
    const std::size_t budget = gateway_->options().context_budget;
    const std::size_t reserve = static_cast<std::size_t>(std::max(0, opts_.max_tokens)) + 4;
    return std::min(state_.token_cap, budget > reserve ? budget - reserve : 0);
}

namespace {

std::vector<std::string> presented_names(const InstanceRetriever& r, const EntitySet& set, const Presentation& p) {
    std::vector<std::string> names;
    for (auto e : set) names.push_back(r.entity_text(e, p));
    std::sort(names.begin(), names.end());
    return names;
}

std::string bracket(const std::vector<std::string>& names) {
    std::string out = "[";
    for (std::size_t i = 0; i < names.size(); ++i) out += (i ? ", " : "") + names[i];
    return out + "]";
}

}  // namespace

prompt::RenderedPrompt InstanceRetriever::render_fewshot_prompt(const ClassExpression& c, const EntitySet& truth,
                                                                const Presentation& p) const {
    std::map<std::string, std::string> query{{"graph", graph_text(p)},
                                             {"concept", render(c, p.syntax, prefix(p))},
                                             {"syntax_note", syntax_note(c, p.syntax)},
                                             {"instances", bracket(presented_names(*this, truth, p))}};
    return prompt::initialize_prompt(fewshot_signature(state_.composer_instruction), {}, query, render_cap(),
                                     gateway_->options().chars_per_token);
}

FewShotExample InstanceRetriever::fallback_example(const ClassExpression& c, const EntitySet& truth,
                                                   const Presentation& p) const {
    FewShotExample ex;
    ex.concept_text = render(c, p.syntax, prefix(p));
    ex.syntax_note = syntax_note(c, p.syntax);
    ex.answer = presented_names(*this, truth, p);
    ex.fallback = true;

    // excerpt: facts about the instances first, then the start of the graph
    const auto lines = split(graph_text(p), '\n');
    std::vector<std::string> excerpt;
    std::set<std::size_t> taken;
    const auto& triples = graph_->triples();
    for (std::size_t i = 0; i < triples.size() && excerpt.size() < opts_.excerpt_triples; ++i)
        if (truth.contains(triples[i].subject) && taken.insert(i).second) excerpt.push_back(lines[i]);
    for (std::size_t i = 0; i < lines.size() && excerpt.size() < opts_.excerpt_triples; ++i)
        if (taken.insert(i).second) excerpt.push_back(lines[i]);

    std::string text = "Relevant graph facts:\n";
    for (const auto& l : excerpt) text += l + "\n";
    text += "Concept: " + ex.concept_text + "\n" + ex.syntax_note + "\n";
    text += "Checking every individual against the concept under these rules, exactly these qualify: " +
            bracket(ex.answer);
    ex.reasoning = std::move(text);
    return ex;
}

FewShotExample InstanceRetriever::generate_fewshot(const ClassExpression& c, const EntitySet& truth,
                                                   const Presentation& p) const {
    const auto prompt = render_fewshot_prompt(c, truth, p);
    std::string answer;
    try {
        answer = gateway_->complete(lm::user_request(prompt.text, opts_.max_tokens)).text;
    } catch (const Error&) {
        return fallback_example(c, truth, p);
    }
    answer = trim(answer);
    if (starts_with_ci(answer, "example:")) answer = trim(answer.substr(8));
    if (answer.empty()) return fallback_example(c, truth, p);

    FewShotExample ex;
    ex.concept_text = render(c, p.syntax, prefix(p));
    ex.syntax_note = syntax_note(c, p.syntax);
    ex.reasoning = std::move(answer);
    ex.answer = presented_names(*this, truth, p);
    return ex;
}

prompt::RenderedPrompt InstanceRetriever::render_retrieval_prompt(const ClassExpression& c,
                                                                  std::span<const FewShotExample> examples,
                                                                  const Presentation& p) const {
    std::string block;
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        block += (i ? "\n\n" : "") + ("Example " + std::to_string(i + 1) + "\nConcept: " + ex.concept_text +
                                      "\nWorked solution:\n" + ex.reasoning + "\nAnswer: " + bracket(ex.answer));
    }
    std::map<std::string, std::string> query{
        {"graph", graph_text(p)}, {"examples", block}, {"concept", render(c, p.syntax, prefix(p))}};
    return prompt::initialize_prompt(retrieval_signature(state_.scorer_instruction), {}, query, render_cap(),
                                     gateway_->options().chars_per_token);
}

std::optional<kg::EntityId> InstanceRetriever::resolve(std::string_view name) const {
    std::string t = trim(name);
    for (char q : {'"', '\'', '`'})
        if (t.size() >= 2 && t.front() == q && t.back() == q) t = trim(t.substr(1, t.size() - 2));
    if (auto it = by_key_.find(to_lower(t)); it != by_key_.end()) return it->second;
    if (auto it = by_key_.find(to_lower(local_name(t))); it != by_key_.end()) return it->second;
    return std::nullopt;
}

std::vector<std::string> parse_instance_list(const std::string& answer) {
    std::string text = answer;
    for (auto& ch : text) {
        if (ch == '{') ch = '[';
        if (ch == '}') ch = ']';
    }
    std::vector<std::string> out;
    for (auto& item : prompt::parse_candidates(text, "instances")) {
        const auto key = to_lower(trim(item.name));
        if (key.empty() || key == "none" || key == "nothing" || key == "∅") continue;
        out.push_back(trim(item.name));
    }
    return out;
}

RetrievalPrediction InstanceRetriever::llm_retrieve(const ClassExpression& c, std::span<const FewShotExample> examples,
                                                    const Presentation& p) const {
    const auto prompt = render_retrieval_prompt(c, examples, p);
    RetrievalPrediction pred;
    pred.raw = gateway_->complete(lm::user_request(prompt.text, opts_.max_tokens)).text;
    for (const auto& name : parse_instance_list(pred.raw)) {
        if (auto e = resolve(name))
            pred.entities.insert(*e);
        else
            pred.warnings.push_back("unknown individual '" + name + "' dropped");
    }
    return pred;
}

std::vector<ConceptEntry> parse_concept_list(std::string_view text, const ParseOptions& opts) {
    std::vector<ConceptEntry> out;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos) throw ParseError("concept list: expected '<syntax><TAB><expression>'", line_no);
        ConceptEntry entry;
        entry.line = line_no;
        try {
            entry.syntax = parse_syntax(line.substr(0, tab));
            entry.text = trim(line.substr(tab + 1));
            entry.expr = parse_class_expression(entry.text, entry.syntax, opts);
        } catch (const SyntaxError& e) {
            throw ParseError(std::string("concept list: ") + e.what(), line_no);
        } catch (const ContractViolation& e) {
            throw ParseError(std::string("concept list: ") + e.what(), line_no);
        }
        out.push_back(std::move(entry));
    }
    return out;
}

std::vector<ConceptEntry> load_concept_list(const std::filesystem::path& path, const ParseOptions& opts) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open concept list " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_concept_list(ss.str(), opts);
}

OwlRun run_owl(const InstanceRetriever& retriever, std::span<const ConceptEntry> concepts, const OwlRunOptions& opts) {
    OwlRun run;
    run.presentations = opts.presentations;
    std::vector<EntitySet> truths;
    truths.reserve(concepts.size());
    for (const auto& c : concepts) truths.push_back(retriever.truth(*c.expr));

    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < concepts.size(); ++i)
        if (!truths[i].empty()) pool.push_back(i);
    Rng rng(substream_seed(opts.seed, "owl-examples"));
    stable_shuffle(pool, rng);
    pool.resize(std::min(pool.size(), opts.examples));
    std::sort(pool.begin(), pool.end());
    run.example_concepts = pool;

    std::vector<std::size_t> scored;
    for (std::size_t i = 0; i < concepts.size(); ++i)
        if (!std::binary_search(pool.begin(), pool.end(), i)) scored.push_back(i);

    for (const auto& pres : run.presentations) {
        std::vector<FewShotExample> examples;
        for (auto i : run.example_concepts) examples.push_back(retriever.generate_fewshot(*concepts[i].expr, truths[i], pres));

        std::vector<OwlRecord> records(scored.size());
        parallel_for(scored.size(), opts.workers, [&](std::size_t k) {
            const auto i = scored[k];
            auto& rec = records[k];
            rec.concept_index = i;
            rec.group = classify_concept(*concepts[i].expr);
            rec.presentation = pres;
            rec.truth = truths[i];
            try {
                auto pred = retriever.llm_retrieve(*concepts[i].expr, examples, pres);
                rec.predicted = std::move(pred.entities);
                rec.warnings = std::move(pred.warnings);
                rec.ok = true;
            } catch (const std::exception& e) {
                rec.error = e.what();
            }
            rec.jaccard = jaccard(rec.truth, rec.predicted);
        });
        for (auto& r : records) {
            run.failures += r.ok ? 0 : 1;
            run.records.push_back(std::move(r));
        }
    }

    for (auto g : all_concept_groups()) {
        OwlGroupRow row;
        row.group = g;
        row.mean_jaccard.resize(run.presentations.size());
        for (std::size_t p = 0; p < run.presentations.size(); ++p) {
            double sum = 0.0;
            std::size_t n = 0;
            for (const auto& r : run.records)
                if (r.group == g && r.presentation == run.presentations[p]) {
                    sum += r.jaccard;
                    ++n;
                }
            row.count = n;
            if (n) row.mean_jaccard[p] = sum / static_cast<double>(n);
        }
        run.rows.push_back(std::move(row));
    }
    return run;
}

namespace {

std::string fixed6(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(6) << v;
    return s.str();
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

}  // namespace

void write_owl_table(std::ostream& out, const OwlRun& run) {
    out << "group,count";
    for (const auto& p : run.presentations) out << ',' << label(p);
    out << '\n';
    for (const auto& row : run.rows) {
        out << to_string(row.group) << ',' << row.count;
        for (const auto& m : row.mean_jaccard) out << ',' << (m ? fixed6(*m) : "na");
        out << '\n';
    }
}

void write_owl_records(std::ostream& out, const OwlRun& run, std::span<const ConceptEntry> concepts) {
    out << "concept,group,presentation,truth,predicted,jaccard,status\n";
    for (const auto& r : run.records) {
        out << csv_quote(concepts[r.concept_index].text) << ',' << to_string(r.group) << ',' << label(r.presentation)
            << ',' << r.truth.size() << ',' << r.predicted.size() << ',' << fixed6(r.jaccard) << ','
            << (r.ok ? "ok" : "failed") << '\n';
    }
}

}  // namespace promptkg::owl
