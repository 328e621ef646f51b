#include "promptkg/cli/run.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>

#include "promptkg/cli/scripted_backend.hpp"
#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/enrich/enrich.hpp"
#include "promptkg/eval/rank.hpp"
#include "promptkg/kg/io.hpp"
#include "promptkg/kge/checkpoint.hpp"
#include "promptkg/kge/train.hpp"
#include "promptkg/lm/remote.hpp"
#include "promptkg/mipro/optimizer.hpp"
#include "promptkg/numeric/predict.hpp"
#include "promptkg/owl/retrieval.hpp"
#include "promptkg/prompt/pipeline.hpp"

namespace promptkg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error("cannot read " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string iso_utc(std::chrono::system_clock::time_point t, const char* format) {
    const std::time_t secs = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&secs, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, format);
    return out.str();
}

std::string fixed(double v, int digits = 4) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(digits) << v;
    return out.str();
}

json metrics_json(const eval::MetricsReport& m) {
    json j{{"mrr", m.mrr}, {"n", m.n_queries}};
    for (const auto& [k, v] : m.hits) j["hits@" + std::to_string(k)] = v;
    return j;
}

// State shared by one command's execution.
struct Run {
    Run(const RunConfig& c, std::string cmd, std::ostream& out) : cfg(c), command(std::move(cmd)), log(out) {}

    const RunConfig& cfg;
    std::string command;
    fs::path dir;
    std::ostream& log;
    std::uint64_t seed = 0;
    std::size_t workers = 1;
    json metrics = json::object();
    std::vector<std::string> warnings;
    std::vector<std::string> errors;
    std::string table;
    std::string csv;
    std::vector<std::string> files;
    std::shared_ptr<lm::LmGateway> gateway;
    std::mutex mutex;

    void write(const std::string& name, const std::string& content) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) throw Error("cannot write " + (dir / name).string());
        out << content;
        if (!out) throw Error("failed writing " + (dir / name).string());
        files.push_back(name);
    }
    void warn(std::string w) {
        std::lock_guard lock(mutex);
        warnings.push_back(std::move(w));
    }
    void fail(std::string e) {
        std::lock_guard lock(mutex);
        errors.push_back(std::move(e));
    }
    std::string choice(const std::string& key) const { return to_lower(cfg.require(key)); }
    std::optional<fs::path> path(const std::string& key) const {
        auto v = cfg.get(key);
        if (!v || v->empty()) return std::nullopt;
        return fs::path(*v);
    }
};

// ---- shared loading -------------------------------------------------------------

kg::Dataset load_data(Run& run) {
    auto d = kg::load_dataset(run.cfg.require("dataset"));
    if (auto labels = run.path("labels")) {
        const auto missing = kg::apply_label_map(d, kg::load_label_map(*labels));
        if (!missing.empty()) run.warn(std::to_string(missing.size()) + " entities without a label");
    }
    return d;
}

kg::KnowledgeGraph all_of(const kg::Dataset& d) { return d.all(); }

prompt::PromptState seed_state(Run& run) {
    if (auto p = run.path("prompt_state")) return prompt::parse_prompt_state(read_file(*p));
    return prompt::default_prompt_state(run.choice("prompt_preset"));
}

std::shared_ptr<lm::LmGateway> make_gateway(Run& run, const ScriptedReference& ref) {
    std::shared_ptr<lm::LmBackend> backend;
    if (run.choice("backend") == "remote") {
        auto opts = lm::remote_options_from_env();
        if (auto e = run.cfg.get("lm.endpoint"); e && !e->empty()) opts.base_url = *e;
        if (auto m = run.cfg.get("lm.model"); m && !m->empty()) opts.model = *m;
        backend = std::make_shared<lm::RemoteLm>(opts);
    } else {
        backend = make_scripted_backend(ref);
    }
    lm::GatewayOptions g;
    g.context_budget = static_cast<std::size_t>(run.cfg.integer("lm.context_budget"));
    g.chars_per_token = run.cfg.real("lm.chars_per_token");
    g.max_in_flight = run.workers;
    g.request_log = run.dir / "lm_timing.tsv";
    run.files.push_back("lm_timing.tsv");
    run.gateway = std::make_shared<lm::LmGateway>(std::move(backend), g);
    return run.gateway;
}

// Scripted link answers come from train (echo) or from every split (oracle).
ScriptedReference link_reference(const Run& run, const kg::Dataset& d, const kg::KnowledgeGraph& all) {
    ScriptedReference ref;
    ref.links = run.choice("scripted.mode") == "oracle" ? &all : &d.train;
    return ref;
}

prompt::PipelineOptions pipeline_options(const Run& run) {
    prompt::PipelineOptions p;
    p.composer_max_tokens = p.scorer_max_tokens = static_cast<int>(run.cfg.integer("lm.max_tokens"));
    return p;
}

const kg::KnowledgeGraph& split_of(const Run& run, const kg::Dataset& d) {
    return run.choice("split") == "valid" ? d.valid : d.test;
}

// ---- commands -----------------------------------------------------------------

void cmd_optimize(Run& run) {
    auto d = load_data(run);
    const auto all = all_of(d);
    auto gateway = make_gateway(run, link_reference(run, d, all));

    auto config = mipro::preset_config(mipro::parse_preset(run.choice("preset")));
    config.metric = mipro::parse_metric(run.choice("metric"));
    config.seed = substream_seed(run.seed, "optimizer");
    config.workers = run.workers;
    if (auto t = run.cfg.get("trials")) config.trials = static_cast<std::size_t>(run.cfg.integer("trials"));

    const kg::KnowledgeGraph* panel_source = &d.valid;
    if (d.valid.empty()) {
        run.warn("no validation split; the evaluation panel is drawn from train");
        panel_source = &d.train;
    }
    mipro::LmOptimizeInputs in{gateway, &d.train, panel_source, &all, seed_state(run), pipeline_options(run)};
    const auto out = mipro::optimize_with_lm(in, config);
    const auto& history = out.result.history;
    for (const auto& w : out.result.warnings) run.warn(w);
    for (const auto& t : history.trials())
        if (t.failed) run.fail("trial " + std::to_string(t.index) + " failed: " + t.error);

    run.write("best_prompt.txt", prompt::serialize(out.result.best));
    std::ostringstream log, timing;
    mipro::write_trial_log(log, history);
    mipro::write_trial_timing(timing, history);
    run.write("trials.tsv", log.str());
    run.write("trial_timing.tsv", timing.str());

    const auto best_so_far = history.best_so_far();
    std::ostringstream table, csv;
    csv << "trial,composer,scorer,demos,score,best_so_far\n";
    table << std::left << std::setw(7) << "trial" << std::setw(14) << "candidate" << std::setw(12) << "score"
          << "best\n";
    for (std::size_t i = 0; i < history.trials().size(); ++i) {
        const auto& t = history.trials()[i];
        const auto pos = std::to_string(t.candidate.composer) + "," + std::to_string(t.candidate.scorer) + "," +
                         std::to_string(t.candidate.demos);
        csv << t.index << ',' << t.candidate.composer << ',' << t.candidate.scorer << ',' << t.candidate.demos << ','
            << fixed(t.score, 6) << ',' << fixed(best_so_far[i], 6) << '\n';
        table << std::setw(7) << t.index << std::setw(14) << pos << std::setw(12) << fixed(t.score)
              << fixed(best_so_far[i]) << '\n';
    }
    run.table = table.str();
    run.csv = csv.str();
    run.metrics = {{"metric", mipro::to_string(config.metric)},
                   {"trials", history.trials().size()},
                   {"best_score", out.result.best_score},
                   {"best_trial", history.best().index},
                   {"best_state", prompt::state_hash(out.result.best)},
                   {"pool", {{"composer_instructions", out.pool.composer_instructions.size()},
                             {"scorer_instructions", out.pool.scorer_instructions.size()},
                             {"demo_subsets", out.pool.demo_subsets.size()}}},
                   {"panel", out.panel.size()}};
}

void cmd_predict(Run& run) {
    auto d = load_data(run);
    const auto all = all_of(d);
    auto gateway = make_gateway(run, link_reference(run, d, all));
    prompt::LinkPredictor predictor(gateway, d.train, seed_state(run), pipeline_options(run));
    const auto& queries = split_of(run, d);
    const auto top_k = static_cast<std::size_t>(run.cfg.integer("top_k"));

    std::vector<std::pair<kg::EntityId, kg::RelationId>> groups;
    for (const auto& g : kg::kvsall_groups(queries)) groups.emplace_back(g.subject, g.relation);
    std::vector<std::string> lines(groups.size());
    std::vector<std::size_t> hits(groups.size(), 0);
    const auto& v = d.vocab;
    parallel_for(groups.size(), run.workers, [&](std::size_t i) {
        const auto [s, r] = groups[i];
        try {
            const auto scores = predictor.predict(s, r);
            std::vector<std::uint32_t> order;
            for (std::uint32_t e = 0; e < scores.size(); ++e)
                if (scores[{e}] != scores.floor()) order.push_back(e);
            std::stable_sort(order.begin(), order.end(),
                             [&](auto a, auto b) { return scores[{a}] > scores[{b}]; });
            if (order.size() > top_k) order.resize(top_k);
            std::ostringstream out;
            for (std::size_t k = 0; k < order.size(); ++k) {
                const bool truth = queries.contains(s, r, {order[k]});
                hits[i] += truth;
                out << v->entity_name(s) << '\t' << v->relation_name(r) << '\t' << k + 1 << '\t'
                    << v->entity_name({order[k]}) << '\t' << fixed(scores[{order[k]}], 6) << '\t' << truth << '\n';
            }
            lines[i] = out.str();
        } catch (const Error& e) {
            run.fail(v->entity_name(s) + " " + v->relation_name(r) + ": " + e.what());
        }
    });
    std::string body = "subject\trelation\trank\tentity\tscore\ttrue\n";
    std::size_t predicted = 0, correct = 0;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        body += lines[i];
        predicted += !lines[i].empty();
        correct += hits[i];
    }
    run.write("predictions.tsv", body);
    std::sort(run.errors.begin(), run.errors.end());
    run.metrics = {{"queries", groups.size()}, {"answered", predicted}, {"true_in_top_k", correct}, {"top_k", top_k}};
    run.table = "queries " + std::to_string(groups.size()) + "\nanswered " + std::to_string(predicted) +
                "\ntrue tails in top " + std::to_string(top_k) + " " + std::to_string(correct) + "\n";
    run.csv = "queries,answered,top_k,true_in_top_k\n" + std::to_string(groups.size()) + "," +
              std::to_string(predicted) + "," + std::to_string(top_k) + "," + std::to_string(correct) + "\n";
}

void cmd_enrich(Run& run) {
    auto d = load_data(run);
    const auto all = all_of(d);
    auto gateway = make_gateway(run, link_reference(run, d, all));
    prompt::LinkPredictor predictor(gateway, d.train, seed_state(run), pipeline_options(run));
    enrich::EnrichmentConfig cfg;
    cfg.theta = run.cfg.real("theta");
    cfg.workers = run.workers;
    const auto result = enrich::enrich(d.train, predictor, cfg);
    for (const auto& e : result.report.errors) run.fail(e);

    enrich::write_augmented_split(d.train, result.missing, run.dir / "augmented_train.tsv");
    enrich::write_missing_report(d.train, result.missing, run.dir / "missing.tsv");
    run.files.push_back("augmented_train.tsv");
    run.files.push_back("missing.tsv");
    const auto& rep = result.report;
    run.metrics = {{"theta", cfg.theta},         {"pairs", rep.pairs},
                   {"failed_pairs", rep.failed_pairs}, {"candidates", rep.candidates},
                   {"known", rep.known},         {"below_threshold", rep.below_threshold},
                   {"missing", result.missing.size()}, {"augmented_size", d.train.size() + result.missing.size()}};
    std::ostringstream table, csv;
    csv << "pairs,failed_pairs,candidates,known,below_threshold,missing\n"
        << rep.pairs << ',' << rep.failed_pairs << ',' << rep.candidates << ',' << rep.known << ','
        << rep.below_threshold << ',' << result.missing.size() << '\n';
    table << "pairs swept        " << rep.pairs << "\nfailed pairs       " << rep.failed_pairs
          << "\ncandidates         " << rep.candidates << "\nalready known      " << rep.known
          << "\nbelow threshold    " << rep.below_threshold << "\nmissing triples    " << result.missing.size()
          << "\ntrain -> augmented " << d.train.size() << " -> " << d.train.size() + result.missing.size() << '\n';
    run.table = table.str();
    run.csv = csv.str();
}

void rank_table(Run& run, const std::vector<std::tuple<std::string, eval::RankSetting, eval::MetricsReport>>& rows) {
    std::ostringstream table;
    eval::write_table(table, rows);
    run.table = table.str();
    run.csv = eval::csv_header() + "\n";
    for (const auto& [model, setting, m] : rows) {
        run.csv += eval::csv_row(model, setting, m) + "\n";
        run.metrics[model][eval::to_string(setting)] = metrics_json(m);
    }
}

void cmd_eval_rank(Run& run) {
    if (auto ranks_path = run.path("ranks")) {
        const auto ranks = load_ranks(*ranks_path);
        rank_table(run, {{ranks_path->stem().string(), eval::RankSetting::Filtered, eval::compute_metrics(ranks)}});
        return;
    }
    auto d = load_data(run);
    const auto all = all_of(d);
    auto gateway = make_gateway(run, link_reference(run, d, all));
    prompt::LinkPredictor predictor(gateway, d.train, seed_state(run), pipeline_options(run));
    const auto n = d.vocab->entity_count();
    const auto scorer = [&](kg::EntityId s, kg::RelationId r) -> std::vector<double> {
        try {
            const auto scores = predictor.predict(s, r);
            return {scores.values().begin(), scores.values().end()};
        } catch (const Error& e) {
            run.fail(d.vocab->entity_name(s) + " " + d.vocab->relation_name(r) + ": " + e.what());
            return std::vector<double>(n, 0.0);
        }
    };
    const auto& queries = split_of(run, d);
    const auto result = eval::evaluate_tail_queries(queries, all, scorer, run.workers);
    std::sort(run.errors.begin(), run.errors.end());
    rank_table(run, {{"prompt", eval::RankSetting::Raw, result.raw_metrics},
                     {"prompt", eval::RankSetting::Filtered, result.filtered_metrics}});
}

void cmd_numeric(Run& run) {
    std::shared_ptr<kg::Vocabulary> vocab;
    std::optional<kg::Dataset> d;
    if (run.path("dataset")) {
        d = load_data(run);
        vocab = d->vocab;
    }
    auto loaded = kg::load_split(*run.path("literals"), {kg::TripleFormat::Tsv, true, kg::Split::Other}, vocab);
    if (loaded.stats.rejected_literals)
        run.warn(std::to_string(loaded.stats.rejected_literals) + " non-numeric literal lines skipped");
    const auto& literals = loaded.graph;
    if (literals.empty()) throw Error("no numeric literals in " + run.path("literals")->string());
    kg::KnowledgeGraph context = literals;
    if (d) {
        const kg::KnowledgeGraph* parts[] = {&literals, &d->train};
        context = kg::merge(parts);
    }
    ScriptedReference ref;
    ref.literals = &literals;
    auto gateway = make_gateway(run, ref);
    auto state = run.path("prompt_state") ? seed_state(run) : prompt::default_prompt_state("numeric");

    numeric::NumericRunOptions opts;
    opts.context.budget = static_cast<std::size_t>(run.cfg.integer("numeric.budget"));
    opts.context.chars_per_token = run.cfg.real("lm.chars_per_token");
    opts.context.outlier_z = run.cfg.real("numeric.outlier_z");
    opts.seed = substream_seed(run.seed, "sampling");
    opts.properties = static_cast<std::size_t>(run.cfg.integer("numeric.properties"));
    opts.max_queries_per_property = static_cast<std::size_t>(run.cfg.integer("numeric.max_queries"));
    opts.workers = run.workers;
    opts.max_tokens = static_cast<int>(run.cfg.integer("lm.max_tokens"));
    const auto result = numeric::run_numeric(*gateway, state, literals, context, opts);

    const auto& v = literals.vocab();
    std::ostringstream records;
    records << "subject\tproperty\ttruth\ty_min\ty_hat\ty_max\tcovered\tstatus\n";
    for (const auto& r : result.records) {
        const auto where = v.entity_name(r.query.subject) + " " + v.relation_name(r.query.property);
        records << v.entity_name(r.query.subject) << '\t' << v.relation_name(r.query.property) << '\t'
                << kg::format_number(r.truth) << '\t';
        if (r.ok) {
            const auto& p = r.prediction.interval;
            records << kg::format_number(p.y_min) << '\t' << kg::format_number(p.y_hat) << '\t'
                    << kg::format_number(p.y_max) << '\t' << numeric::covers(p, r.truth) << "\tok\n";
            for (const auto& w : r.prediction.warnings) run.warn(where + ": " + w);
        } else {
            records << "\t\t\t\tfailed\n";
            run.fail(where + ": " + r.error);
        }
    }
    run.write("predictions.tsv", records.str());
    std::ostringstream table;
    numeric::write_numeric_table(table, result.rows);
    run.table = table.str();
    run.csv = numeric::numeric_csv_header() + "\n";
    json rows = json::array();
    for (const auto& r : result.rows) {
        run.csv += numeric::numeric_csv_row(r) + "\n";
        rows.push_back({{"property", r.property}, {"n", r.n},       {"y_avg", r.y_avg}, {"sigma", r.sigma},
                        {"y_hat_avg", r.y_hat_avg}, {"icr", r.icr}, {"iw", r.iw},       {"mse", r.mse},
                        {"mae", r.mae}});
    }
    run.metrics = {{"queries", result.records.size()}, {"failures", result.failures}, {"properties", rows}};
}

std::vector<owl::Presentation> presentations(const Run& run) {
    const auto syntax = run.choice("syntax");
    const auto ns = run.choice("namespace");
    std::vector<owl::Presentation> out;
    for (const auto& p : owl::table_presentations()) {
        if (syntax != "both" && owl::parse_syntax(syntax) != p.syntax) continue;
        if (ns != "both" && (ns == "on") != p.with_namespace) continue;
        out.push_back(p);
    }
    return out;
}

void cmd_owl(Run& run) {
    const auto abox = kg::load_split(*run.path("owl.graph"), {}).graph;
    owl::ReasonerOptions ropts;
    if (auto sub = run.path("owl.subroles")) ropts.subroles = owl::parse_subrole_table(read_file(*sub));
    const auto concepts = owl::load_concept_list(*run.path("owl.concepts"));
    owl::RetrievalOptions opts;
    opts.namespace_prefix = run.cfg.require("owl.iri");
    opts.max_tokens = static_cast<int>(run.cfg.integer("lm.max_tokens"));

    owl::ClosedWorldReasoner oracle(abox, ropts);
    ScriptedReference ref;
    ref.reasoner = &oracle;
    ref.abox = &abox;
    ref.owl_prefix = opts.namespace_prefix;
    auto gateway = make_gateway(run, ref);
    owl::InstanceRetriever retriever(gateway, abox, prompt::default_prompt_state("owl"), ropts, opts);

    owl::OwlRunOptions ro;
    ro.seed = substream_seed(run.seed, "sampling");
    ro.examples = static_cast<std::size_t>(run.cfg.integer("owl.examples"));
    ro.workers = run.workers;
    ro.presentations = presentations(run);
    const auto result = owl::run_owl(retriever, concepts, ro);

    std::ostringstream csv, records;
    owl::write_owl_table(csv, result);
    owl::write_owl_records(records, result, concepts);
    run.write("records.csv", records.str());
    run.csv = csv.str();

    std::ostringstream table;
    table << std::left << std::setw(22) << "group" << std::setw(7) << "count";
    for (const auto& p : result.presentations) table << std::setw(10) << owl::label(p);
    table << '\n';
    json rows = json::array();
    for (const auto& row : result.rows) {
        table << std::setw(22) << owl::to_string(row.group) << std::setw(7) << row.count;
        json cells = json::object();
        for (std::size_t i = 0; i < result.presentations.size(); ++i) {
            const auto& m = row.mean_jaccard[i];
            table << std::setw(10) << (m ? fixed(*m, 3) : "na");
            cells[owl::label(result.presentations[i])] = m ? json(*m) : json(nullptr);
        }
        table << '\n';
        rows.push_back({{"group", owl::to_string(row.group)}, {"count", row.count}, {"jaccard", cells}});
    }
    run.table = table.str();
    for (const auto& r : result.records) {
        const auto where = "concept " + std::to_string(concepts[r.concept_index].line) + " [" +
                           owl::label(r.presentation) + "]";
        for (const auto& w : r.warnings) run.warn(where + ": " + w);
        if (!r.ok) run.fail(where + ": " + r.error);
    }
    run.metrics = {{"concepts", concepts.size()},
                   {"example_concepts", result.example_concepts},
                   {"failures", result.failures},
                   {"groups", rows}};
}

kge::TrainConfig kge_config(const Run& run) {
    kge::TrainConfig c;
    c.dim = static_cast<std::size_t>(run.cfg.integer("kge.dim"));
    c.lr = run.cfg.real("kge.lr");
    c.epochs = static_cast<std::size_t>(run.cfg.integer("kge.epochs"));
    c.batch_size = static_cast<std::size_t>(run.cfg.integer("kge.batch"));
    c.dropout = run.cfg.real("kge.dropout");
    c.strategy = kge::parse_strategy(run.choice("kge.strategy"));
    c.negatives = static_cast<std::size_t>(run.cfg.integer("kge.negatives"));
    c.seed = substream_seed(run.seed, "training");
    return c;
}

void cmd_kge_train(Run& run) {
    auto d = load_data(run);
    std::optional<kg::KnowledgeGraph> augmented;
    if (auto p = run.path("kge.augmented"))
        augmented = kg::load_split(*p, {kg::TripleFormat::Tsv, false, kg::Split::Train}, d.vocab).graph;
    const auto all = all_of(d);
    const auto cfg = kge_config(run);
    const auto n_ent = d.vocab->entity_count(), n_rel = d.vocab->relation_count();

    std::vector<std::tuple<std::string, eval::RankSetting, eval::MetricsReport>> rows;
    std::vector<std::vector<double>> losses;
    std::vector<std::string> names;
    auto train_one = [&](const kg::KnowledgeGraph& g, const std::string& name, const std::string& file) {
        run.log << "training " << name << " on " << g.size() << " triples\n";
        const auto trained = kge::train(g, cfg, n_ent, n_rel);
        kge::save_checkpoint(run.dir / file, {cfg.model, cfg.seed, trained.table});
        run.files.push_back(file);
        const auto ev = kge::evaluate_kge(trained.table, *kge::make_model(cfg.model), d.test, all, run.workers);
        for (const auto& w : ev.warnings) run.warn(name + ": " + w);
        rows.emplace_back(name, eval::RankSetting::Raw, ev.result.raw_metrics);
        rows.emplace_back(name, eval::RankSetting::Filtered, ev.result.filtered_metrics);
        losses.push_back(trained.epoch_loss);
        names.push_back(name);
    };
    train_one(d.train, cfg.model, "checkpoint.bin");
    if (augmented) train_one(*augmented, cfg.model + "+enriched", "checkpoint_enriched.bin");

    std::ostringstream loss;
    loss << "epoch";
    for (const auto& n : names) loss << ',' << n;
    loss << '\n' << std::setprecision(10);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        loss << e + 1;
        for (const auto& l : losses) loss << ',' << l[e];
        loss << '\n';
    }
    run.write("loss.csv", loss.str());
    rank_table(run, rows);
    run.metrics["final_loss"] = json::object();
    for (std::size_t i = 0; i < names.size(); ++i) run.metrics["final_loss"][names[i]] = losses[i].back();
}

void cmd_kge_eval(Run& run) {
    auto d = load_data(run);
    const auto all = all_of(d);
    const auto ckpt = kge::load_checkpoint(*run.path("checkpoint"));
    if (static_cast<long long>(ckpt.table.dim()) != run.cfg.integer("kge.dim"))
        run.warn("checkpoint dim " + std::to_string(ckpt.table.dim()) + " differs from kge.dim");
    const auto ev = kge::evaluate_kge(ckpt.table, *kge::make_model(ckpt.model), d.test, all, run.workers);
    for (const auto& w : ev.warnings) run.warn(w);
    rank_table(run, {{ckpt.model, eval::RankSetting::Raw, ev.result.raw_metrics},
                     {ckpt.model, eval::RankSetting::Filtered, ev.result.filtered_metrics}});
}

void dispatch(Run& run) {
    const auto& c = run.command;
    if (c == "optimize") return cmd_optimize(run);
    if (c == "predict") return cmd_predict(run);
    if (c == "enrich") return cmd_enrich(run);
    if (c == "eval-rank") return cmd_eval_rank(run);
    if (c == "numeric") return cmd_numeric(run);
    if (c == "owl") return cmd_owl(run);
    if (c == "kge-train") return cmd_kge_train(run);
    if (c == "kge-eval") return cmd_kge_eval(run);
    throw ContractViolation("unknown command " + c);
}

std::string strip_trailing_spaces(const std::string& text) {
    std::string out;
    for (const auto& line : split(text, '\n')) {
        auto end = line.find_last_not_of(' ');
        out += line.substr(0, end == std::string::npos ? 0 : end + 1) + '\n';
    }
    out.pop_back();
    return out;
}

std::string text_report(const json& report, const std::string& table) {
    std::ostringstream out;
    out << "promptkg " << report["command"].get<std::string>() << "\nconfig " << report["config_hash"].get<std::string>()
        << "\nstatus " << report["status"].get<std::string>() << "\n\n"
        << strip_trailing_spaces(table);
    if (report.contains("lm")) {
        const auto& lm = report["lm"];
        out << "\nlm " << lm["backend"].get<std::string>() << ": " << lm["calls"] << " calls, " << lm["prompt_tokens"]
            << " prompt tokens, " << lm["completion_tokens"] << " completion tokens\n";
    }
    for (const char* key : {"warnings", "errors"}) {
        const auto& list = report[key];
        if (list.empty()) continue;
        out << '\n' << key << " (" << list.size() << ")\n";
        for (const auto& w : list) out << "  " << w.get<std::string>() << '\n';
    }
    return out.str();
}

}  // namespace

fs::path fresh_run_dir(const fs::path& root, const std::string& command, std::chrono::system_clock::time_point now) {
    const auto base = command + "-" + iso_utc(now, "%Y%m%dT%H%M%SZ");
    auto dir = root / base;
    for (int n = 2; fs::exists(dir); ++n) dir = root / (base + "-" + std::to_string(n));
    return dir;
}

std::vector<std::int64_t> load_ranks(const fs::path& path) {
    std::vector<std::int64_t> ranks;
    std::size_t line_no = 0;
    for (const auto& raw : split(read_file(path), '\n')) {
        ++line_no;
        auto line = trim(raw.substr(0, raw.find('#')));
        if (line.empty()) continue;
        std::size_t used = 0;
        long long v = 0;
        try {
            v = std::stoll(line, &used);
        } catch (const std::logic_error&) {
            used = 0;
        }
        if (used != line.size() || v < 1) throw ParseError("ranks: expected a positive integer", line_no);
        ranks.push_back(v);
    }
    if (ranks.empty()) throw Error("no ranks in " + path.string());
    return ranks;
}

RunOutcome run(const std::string& command, const RunConfig& cfg, std::ostream& log) {
    RunOutcome outcome;
    outcome.errors = validate(command, cfg);
    if (!outcome.errors.empty()) {
        outcome.exit_code = kExitInvalid;
        return outcome;
    }
    const auto started = std::chrono::system_clock::now();
    const auto clock = std::chrono::steady_clock::now();
    Run r(cfg, command, log);
    r.seed = static_cast<std::uint64_t>(cfg.integer("seed"));
    r.workers = static_cast<std::size_t>(cfg.integer("workers"));
    r.dir = fresh_run_dir(cfg.require("out"), command, started);
    fs::create_directories(r.dir);
    outcome.dir = r.dir;
    r.write("config.txt", cfg.snapshot(command));
    log << "run directory " << r.dir.string() << '\n';

    try {
        dispatch(r);
    } catch (const std::exception& e) {
        r.errors.push_back(e.what());
    }

    json report{{"command", command},
                {"config_hash", cfg.hash(command)},
                {"status", r.errors.empty() ? "ok" : "failed"},
                {"metrics", r.metrics},
                {"warnings", r.warnings},
                {"errors", r.errors}};
    if (r.gateway) {
        const auto s = r.gateway->stats();
        report["lm"] = {{"backend", r.gateway->backend().name()},
                        {"calls", s.calls},
                        {"failures", s.failures},
                        {"prompt_tokens", s.prompt_tokens},
                        {"completion_tokens", s.completion_tokens}};
    }
    try {
        r.write("results.csv", r.csv);
        r.write("report.txt", text_report(report, r.table));
        auto files = r.files;
        files.push_back("report.json");
        files.push_back("timing.txt");
        std::sort(files.begin(), files.end());
        report["files"] = files;
        r.write("report.json", report.dump(2) + "\n");
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - clock).count();
        r.write("timing.txt", "started " + iso_utc(started, "%Y-%m-%dT%H:%M:%SZ") + "\nwall_seconds " +
                                  fixed(wall, 3) + "\n");
    } catch (const std::exception& e) {
        r.errors.push_back(e.what());
    }
    outcome.exit_code = r.errors.empty() ? kExitOk : kExitFailed;
    outcome.errors = std::move(r.errors);
    outcome.warnings = std::move(r.warnings);
    outcome.report = std::move(report);
    return outcome;
}

}  // namespace promptkg::cli
