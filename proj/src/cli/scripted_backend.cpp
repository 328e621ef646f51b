#include "promptkg/cli/scripted_backend.hpp"

#include <algorithm>
#include <map>
#include <regex>
#include <set>
#include <sstream>

#include "promptkg/common/util.hpp"
#include "promptkg/owl/parser.hpp"
#include "promptkg/prompt/parse.hpp"
#include "promptkg/prompt/render.hpp"

namespace promptkg::cli {

namespace {

bool has_field(const std::string& prompt, const std::string& label) {
    return prompt.find("\n" + label + ": ") != std::string::npos;
}

class NameIndex {
public:
    explicit NameIndex(const kg::Vocabulary* v) : vocab_(v) {
        if (!v) return;
        for (std::uint32_t i = 0; i < v->entity_count(); ++i) {
            entities_.emplace(name_key(v->entity_name({i})), kg::EntityId{i});
            entities_.emplace(name_key(v->entity_text({i})), kg::EntityId{i});
        }
        for (std::uint32_t i = 0; i < v->relation_count(); ++i) {
            relations_.emplace(name_key(v->relation_name({i})), kg::RelationId{i});
            relations_.emplace(name_key(v->relation_text({i})), kg::RelationId{i});
        }
    }
    std::optional<kg::EntityId> entity(const std::string& text) const {
        auto it = entities_.find(name_key(text));
        return it == entities_.end() ? std::nullopt : std::optional(it->second);
    }
    std::optional<kg::RelationId> relation(const std::string& text) const {
        auto it = relations_.find(name_key(text));
        return it == relations_.end() ? std::nullopt : std::optional(it->second);
    }

private:
    const kg::Vocabulary* vocab_;
    std::map<std::string, kg::EntityId> entities_;
    std::map<std::string, kg::RelationId> relations_;
};

std::set<std::uint32_t> reference_tails(const kg::KnowledgeGraph& g, const NameIndex& idx, const std::string& prompt) {
    std::set<std::uint32_t> out;
    const auto s = idx.entity(prompt::extract_field(prompt, "subject"));
    const auto r = idx.relation(prompt::extract_field(prompt, "relation"));
    if (!s || !r) return out;
    for (const auto& o : g.objects(*s, *r))
        if (const auto* e = std::get_if<kg::EntityId>(&o)) out.insert(e->value);
    return out;
}

std::string compose_answer(const kg::KnowledgeGraph& g, const NameIndex& idx, const std::string& prompt) {
    std::string list;
    for (auto t : reference_tails(g, idx, prompt)) list += (list.empty() ? "" : ", ") + g.vocab().entity_text({t});
    return " the reference graph lists these tails.\nCandidates: [" + list + "]";
}

std::string score_answer(const kg::KnowledgeGraph& g, const NameIndex& idx, const std::string& prompt) {
    const auto truth = reference_tails(g, idx, prompt);
    std::ostringstream out;
    out << " candidates present in the reference graph are likely.\nScores:\n```\n";
    for (const auto& name : prompt::parse_name_list(prompt::extract_field(prompt, "candidates"))) {
        const auto e = idx.entity(name);
        const bool known = e && truth.contains(e->value);
        out << name << '\t' << (known ? "0.9" : "0.1") << '\t' << (known ? "listed" : "not listed") << '\n';
    }
    out << "```";
    return out.str();
}

std::string numeric_answer(const kg::KnowledgeGraph& g, const NameIndex& idx, const std::string& prompt) {
    const auto s = idx.entity(prompt::extract_field(prompt, "subject"));
    const auto r = idx.relation(prompt::extract_field(prompt, "property"));
    std::vector<double> values;
    if (r)
        for (auto pos : g.by_relation(*r)) {
            const auto& t = g.triples()[pos];
            if (t.is_literal() && (!s || t.subject != *s)) values.push_back(t.object_value());
        }
    if (values.empty()) return " no reference values.\ny_min: 0\ny_hat: 0\ny_max: 0";
    std::sort(values.begin(), values.end());
    const auto n = values.size();
    const double median = n % 2 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
    return " range of the property over other subjects.\ny_min: " + kg::format_number(values.front()) +
           "\ny_hat: " + kg::format_number(median) + "\ny_max: " + kg::format_number(values.back());
}

std::string owl_answer(const ScriptedReference& ref, const std::string& prompt) {
    const auto text = prompt::extract_field(prompt, "concept");
    owl::ExprPtr e;
    for (auto syntax : {owl::Syntax::Manchester, owl::Syntax::Dl}) {
        try {
            e = owl::parse_class_expression(text, syntax, {ref.owl_prefix});
            break;
        } catch (const Error&) {
        }
    }
    if (!e) return " the concept could not be read.\nInstances: []";
    std::string list;
    for (auto x : ref.reasoner->retrieve(*e)) list += (list.empty() ? "" : ", ") + ref.abox->vocab().entity_name(x);
    return " every individual checked against the graph.\nInstances: [" + list + "]";
}

std::string proposal_answer(const std::string& prompt) {
    static const std::regex count(R"(Write (\d+) different)");
    std::smatch m;
    std::size_t n = 1;
    if (std::regex_search(prompt, m, count)) n = std::stoul(m[1].str());
    std::string seed;
    const auto open = prompt.find("<instruction>\n");
    const auto close = prompt.find("\n</instruction>");
    if (open != std::string::npos && close != std::string::npos && close > open)
        seed = prompt.substr(open + 14, close - open - 14);
    std::ostringstream out;
    for (std::size_t i = 1; i <= n; ++i) out << "<instruction>\n" << seed << "\nVariant " << i << ".\n</instruction>\n";
    return out.str();
}

}  // namespace

std::shared_ptr<lm::ScriptedLm> make_scripted_backend(const ScriptedReference& ref) {
    auto lm = std::make_shared<lm::ScriptedLm>("The answer follows from the graph facts.");
    auto links = std::make_shared<NameIndex>(ref.links ? &ref.links->vocab() : nullptr);
    auto literals = std::make_shared<NameIndex>(ref.literals ? &ref.literals->vocab() : nullptr);
    lm->respond_with([ref, links, literals](const lm::LmRequest& req) -> std::optional<std::string> {
        const auto p = req.prompt_text();
        if (p.rfind("You improve instructions", 0) == 0) return proposal_answer(p);
        if (has_field(p, "Syntax Note")) return std::nullopt;
        if (has_field(p, "Instances") && ref.reasoner && ref.abox) return owl_answer(ref, p);
        if (has_field(p, "Y Hat") && ref.literals) return numeric_answer(*ref.literals, *literals, p);
        if (has_field(p, "Scores") && ref.links) return score_answer(*ref.links, *links, p);
        if (has_field(p, "Candidates") && ref.links) return compose_answer(*ref.links, *links, p);
        return std::nullopt;
    });
    return lm;
}

}  // namespace promptkg::cli
