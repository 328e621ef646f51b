#include "promptkg/eval/rank.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::eval {

std::string to_string(RankSetting s) { return s == RankSetting::Raw ? "raw" : "filtered"; }

RankSetting parse_rank_setting(std::string_view s) {
    const auto v = to_lower(s);
    if (v == "raw") return RankSetting::Raw;
    if (v == "filtered" || v == "filter") return RankSetting::Filtered;
    throw ContractViolation("unknown rank setting '" + std::string(s) + "'");
}

RankResult rank_true_entity(std::span<const double> scores, kg::EntityId truth,
                            std::span<const kg::EntityId> known_positives, RankSetting setting) {
    if (truth.value >= scores.size())
        throw ContractViolation("true entity " + std::to_string(truth.value) + " outside score domain of size " +
                                std::to_string(scores.size()));
    const double target = scores[truth.value];
    if (std::isnan(target)) throw ContractViolation("NaN score for the true entity");

    std::unordered_set<std::uint32_t> skip;
    if (setting == RankSetting::Filtered)
        for (auto e : known_positives)
            if (e != truth) skip.insert(e.value);

    std::int64_t greater = 0;
    std::int64_t ties = 0;
    for (std::uint32_t i = 0; i < scores.size(); ++i) {
        if (i == truth.value || skip.contains(i)) continue;
        if (std::isnan(scores[i])) throw ContractViolation("NaN score for entity " + std::to_string(i));
        if (scores[i] > target)
            ++greater;
        else if (scores[i] == target)
            ++ties;
    }
    RankResult r;
    r.truth = truth;
    r.setting = setting;
    r.doubled_rank = 2 + 2 * greater + ties;
    return r;
}

MetricsReport compute_metrics(std::span<const std::int64_t> ranks) {
    if (ranks.empty()) throw ContractViolation("compute_metrics: empty rank list");
    MetricsReport m;
    m.n_queries = ranks.size();
    std::map<int, std::size_t> hit_counts{{1, 0}, {3, 0}, {10, 0}};
    double reciprocal = 0.0;
    for (auto r : ranks) {
        if (r < 1) throw ContractViolation("rank below 1: " + std::to_string(r));
        reciprocal += 1.0 / static_cast<double>(r);
        for (auto& [k, c] : hit_counts)
            if (r <= k) ++c;
    }
    const double n = static_cast<double>(ranks.size());
    m.mrr = reciprocal / n;
    for (const auto& [k, c] : hit_counts) m.hits[k] = static_cast<double>(c) / n;
    return m;
}

MetricsReport compute_metrics(std::span<const RankResult> ranks) {
    std::vector<std::int64_t> r;
    r.reserve(ranks.size());
    for (const auto& x : ranks) r.push_back(x.rank());
    return compute_metrics(r);
}

EvaluationResult evaluate_tail_queries(const kg::KnowledgeGraph& queries, const kg::KnowledgeGraph& filter,
                                       const TailScorer& scorer, std::size_t workers) {
    std::vector<kg::KvsAllGroup> groups;
    for (auto& g : kg::kvsall_groups(queries)) {
        std::erase_if(g.objects, [](const kg::Object& o) { return std::holds_alternative<double>(o); });
        if (!g.objects.empty()) groups.push_back(std::move(g));
    }
    std::vector<std::vector<RankResult>> raw(groups.size()), filtered(groups.size());
    parallel_for(groups.size(), workers, [&](std::size_t i) {
        const auto& g = groups[i];
        const auto scores = scorer(g.subject, g.relation);
        std::vector<kg::EntityId> positives;
        for (const auto& o : filter.objects(g.subject, g.relation))
            if (const auto* e = std::get_if<kg::EntityId>(&o)) positives.push_back(*e);
        for (const auto& o : g.objects) {
            const auto truth = std::get<kg::EntityId>(o);
            for (auto setting : {RankSetting::Raw, RankSetting::Filtered}) {
                auto r = rank_true_entity(scores, truth, positives, setting);
                r.subject = g.subject;
                r.relation = g.relation;
                (setting == RankSetting::Raw ? raw : filtered)[i].push_back(r);
            }
        }
    });
    EvaluationResult out;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        out.raw.insert(out.raw.end(), raw[i].begin(), raw[i].end());
        out.filtered.insert(out.filtered.end(), filtered[i].begin(), filtered[i].end());
    }
    if (!out.raw.empty()) {
        out.raw_metrics = compute_metrics(std::span<const RankResult>(out.raw));
        out.filtered_metrics = compute_metrics(std::span<const RankResult>(out.filtered));
    }
    return out;
}

namespace {

std::string fixed(double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
}

}  // namespace

std::string csv_header() { return "model,setting,n,mrr,hits@1,hits@3,hits@10"; }

std::string csv_row(const std::string& model, RankSetting setting, const MetricsReport& m) {
    std::ostringstream s;
    s << model << ',' << to_string(setting) << ',' << m.n_queries << ',' << fixed(m.mrr, 6);
    for (int k : {1, 3, 10}) s << ',' << fixed(m.hits.count(k) ? m.hits.at(k) : 0.0, 6);
    return s.str();
}

void write_table(std::ostream& out, const std::vector<std::tuple<std::string, RankSetting, MetricsReport>>& rows) {
    std::size_t width = 5;
    for (const auto& row : rows) width = std::max(width, std::get<0>(row).size());
    out << std::left << std::setw(static_cast<int>(width)) << "Model" << "  " << std::setw(8) << "Setting"
        << std::right << std::setw(6) << "N" << std::setw(8) << "MRR" << std::setw(8) << "@1" << std::setw(8) << "@3"
        << std::setw(8) << "@10" << '\n';
    for (const auto& [model, setting, m] : rows) {
        out << std::left << std::setw(static_cast<int>(width)) << model << "  " << std::setw(8) << to_string(setting)
            << std::right << std::setw(6) << m.n_queries << std::setw(8) << fixed(m.mrr, 3);
        for (int k : {1, 3, 10}) out << std::setw(8) << fixed(m.hits.count(k) ? m.hits.at(k) : 0.0, 3);
        out << '\n';
    }
}

}  // namespace promptkg::eval
