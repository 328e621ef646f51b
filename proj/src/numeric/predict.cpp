#include "promptkg/numeric/predict.hpp"

#include <algorithm>
#include <map>
#include <regex>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/prompt/parse.hpp"
#include "promptkg/prompt/render.hpp"

namespace promptkg::numeric {

prompt::Signature numeric_signature(const std::string& instruction) {
    return prompt::Signature{
        "numeric",
        {{"subject", "the entity whose value is asked for"},
         {"property", "the numeric property"},
         {"subject_facts", "other facts about the subject"},
         {"property_values", "values of the same property for other entities"}},
        {{"reasoning", "think step by step from the context"},
         {"y_min", "lower bound, a plain number"},
         {"y_hat", "point estimate, a plain number"},
         {"y_max", "upper bound, a plain number"}},
        instruction};
}

namespace {

std::string lines(const kg::Vocabulary& v, const std::vector<kg::Triple>& ts) {
    std::string out;
    for (const auto& t : ts) out += (out.empty() ? "" : "\n") + render_fact(v, t);
    return out;
}

std::optional<double> last_labeled(const std::string& text, const std::regex& label) {
    std::optional<double> found;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), label); it != std::sregex_iterator(); ++it) {
        const auto nums = prompt::extract_numbers((*it)[1].str());
        if (!nums.empty()) found = nums.front();
    }
    return found;
}

}  // namespace

std::string render_numeric_prompt(const prompt::PromptState& state, const kg::Vocabulary& v, const NumericQuery& q,
                                  const ContextBundle& ctx, std::size_t token_cap, double chars_per_token) {
    const std::map<std::string, std::string> query{{"subject", v.entity_text(q.subject)},
                                                   {"property", v.relation_text(q.property)},
                                                   {"subject_facts", lines(v, ctx.subject_context)},
                                                   {"property_values", lines(v, ctx.relation_context)}};
    return prompt::initialize_prompt(numeric_signature(state.scorer_instruction), state.scorer_demos, query,
                                     token_cap, chars_per_token)
        .text;
}

NumericPrediction parse_interval(const std::string& answer) {
    static const std::string number = R"(([-+]?[\d,]*\.?\d+(?:[eE][-+]?\d+)?))";
    static const std::string sep = R"([\s*`]*(?:[:=]|is)[\s*`$]*)";
    static const std::regex lo("(?:y[_ ]?\\{?min\\}?|ŷ[_ ]?\\{?min\\}?|lower bound|minimum)" + sep + number,
                               std::regex::icase);
    static const std::regex hi("(?:y[_ ]?\\{?max\\}?|ŷ[_ ]?\\{?max\\}?|upper bound|maximum)" + sep + number,
                               std::regex::icase);
    static const std::regex mid("(?:y[_ ]?hat|\\\\hat\\{y\\}|ŷ(?![_ ]?\\{?m)|point estimate)" + sep + number,
                                std::regex::icase);

    NumericPrediction out;
    out.raw = answer;
    auto a = last_labeled(answer, lo);
    auto b = last_labeled(answer, mid);
    auto c = last_labeled(answer, hi);
    if (a && b && c) {
        out.interval = {*b, *a, *c};
    } else {
        const auto nums = prompt::extract_numbers(answer);
        if (nums.size() < 3) throw prompt::OutputParseError("expected three numbers (y_min, y_hat, y_max)", answer);
        const auto n = nums.size();
        out.interval = {nums[n - 2], nums[n - 3], nums[n - 1]};
        out.warnings.push_back("unlabeled answer; read the last three numbers as y_min, y_hat, y_max");
    }
    auto& iv = out.interval;
    if (iv.y_min > iv.y_max) {
        std::swap(iv.y_min, iv.y_max);
        out.warnings.push_back("y_min > y_max; bounds swapped");
    }
    if (iv.y_hat < iv.y_min || iv.y_hat > iv.y_max) {
        iv.y_hat = std::clamp(iv.y_hat, iv.y_min, iv.y_max);
        out.warnings.push_back("y_hat outside [y_min, y_max]; clamped");
    }
    return out;
}

NumericPrediction predict_numeric(lm::LmGateway& gateway, const prompt::PromptState& state, const kg::Vocabulary& v,
                                  const NumericQuery& q, const ContextBundle& ctx, int max_tokens) {
    const std::size_t budget = gateway.options().context_budget;
    const std::size_t reserve = static_cast<std::size_t>(std::max(0, max_tokens)) + 4;
    const std::size_t cap = std::min(state.token_cap, budget > reserve ? budget - reserve : 0);
    const auto prompt = render_numeric_prompt(state, v, q, ctx, cap, gateway.options().chars_per_token);
    return parse_interval(gateway.complete(lm::user_request(prompt, max_tokens)).text);
}

NumericRun run_numeric(lm::LmGateway& gateway, const prompt::PromptState& state, const kg::KnowledgeGraph& literals,
                       const kg::KnowledgeGraph& context, const NumericRunOptions& opts) {
    NumericRun run;
    std::size_t available = 0;
    for (auto r : literals.relations())
        if (literals.vocab().relation_kind(r) == kg::RelationKind::DataProperty) ++available;
    run.properties = select_property_subset(literals, std::min(opts.properties, available), opts.seed);

    for (auto r : run.properties) {
        std::size_t taken = 0;
        for (auto i : literals.by_relation(r)) {
            const auto& t = literals.triples()[i];
            if (!t.is_literal()) continue;
            if (opts.max_queries_per_property && taken >= opts.max_queries_per_property) break;
            run.records.push_back({{t.subject, r}, t.object_value(), false, {}, {}});
            ++taken;
        }
    }

    parallel_for(run.records.size(), opts.workers, [&](std::size_t i) {
        auto& rec = run.records[i];
        try {
            const auto ctx = retrieve_context(context, rec.query, opts.context, opts.seed);
            rec.prediction = predict_numeric(gateway, state, context.vocab(), rec.query, ctx, opts.max_tokens);
            rec.ok = true;
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    });

    for (auto r : run.properties) {
        std::vector<IntervalPrediction> preds;
        std::vector<double> truths;
        for (const auto& rec : run.records) {
            if (rec.query.property != r) continue;
            if (!rec.ok) continue;
            preds.push_back(rec.prediction.interval);
            truths.push_back(rec.truth);
        }
        if (!preds.empty()) run.rows.push_back(property_row(literals.vocab().relation_name(r), preds, truths));
    }
    for (const auto& rec : run.records)
        if (!rec.ok) ++run.failures;
    return run;
}

}  // namespace promptkg::numeric
