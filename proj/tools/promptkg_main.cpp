// promptkg: one binary for every experiment.
//
//   promptkg <command> [--config FILE] [--seed N] [--set key=value ...] [flags]
//
// Exit status: 0 success (warnings allowed), 1 run errors, 2 invalid
// configuration or usage.

#include <iostream>

#include <CLI11.hpp>

#include "promptkg/cli/config.hpp"
#include "promptkg/cli/run.hpp"
#include "promptkg/common/error.hpp"

namespace cli = promptkg::cli;

namespace {

void print_keys() {
    for (const auto& k : cli::config_keys()) {
        std::cout << k.key;
        if (!k.default_value.empty()) std::cout << " = " << k.default_value;
        std::cout << "\n    " << k.help;
        if (!k.choices.empty()) {
            std::cout << " (";
            for (std::size_t i = 0; i < k.choices.size(); ++i) std::cout << (i ? "|" : "") << k.choices[i];
            std::cout << ')';
        }
        std::cout << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prompt-parameterized knowledge graph experiments"};
    app.require_subcommand(0, 1);

    std::string config_path;
    std::vector<std::string> sets;
    std::map<std::string, std::string> flags;
    bool list_keys = false;
    app.add_option("--config", config_path, "flat key = value configuration file")->check(CLI::ExistingFile);
    app.add_option("--set", sets, "override any key: --set key=value")->take_all();
    // Shorthand flags for frequently changed keys.
    const std::vector<std::pair<std::string, std::string>> shorthands{
        {"seed", "run seed"},
        {"preset", "optimizer preset: light|medium"},
        {"theta", "enrichment threshold"},
        {"syntax", "owl concept syntax: manchester|dl|both"},
        {"namespace", "owl namespaced names: on|off|both"},
        {"backend", "LM backend: scripted|remote"},
        {"out", "output root directory"}};
    for (const auto& [key, help] : shorthands) app.add_option("--" + key, flags[key], help);
    app.add_flag("--list-keys", list_keys, "print every configuration key and exit");
    app.fallthrough();

    std::vector<CLI::App*> subs;
    const std::map<std::string, std::string> help{
        {"optimize", "search instructions and demos for the link-prediction prompt"},
        {"predict", "top-k tail predictions for a split"},
        {"enrich", "mine missing triples and write the augmented train split"},
        {"eval-rank", "filtered and raw MRR/Hits@k of the prompt program, or of a ranks file"},
        {"numeric", "interval predictions for numeric literals"},
        {"owl", "instance retrieval for class expressions"},
        {"kge-train", "train DistMult on train (and an augmented split)"},
        {"kge-eval", "evaluate an embedding checkpoint"}};
    for (const auto& c : cli::commands()) subs.push_back(app.add_subcommand(c, help.at(c)));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::kExitInvalid;
    }
    if (list_keys) {
        print_keys();
        return 0;
    }
    std::string command;
    for (auto* s : subs)
        if (s->parsed()) command = s->get_name();
    if (command.empty()) {
        std::cerr << app.help();
        return cli::kExitInvalid;
    }

    cli::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = cli::RunConfig::load(config_path);
    } catch (const promptkg::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kExitInvalid;
    }
    for (const auto& [key, value] : flags)
        if (!value.empty()) cfg.set(key, value);
    for (const auto& s : sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos || eq == 0) {
            std::cerr << "error: --set expects key=value, got '" << s << "'\n";
            return cli::kExitInvalid;
        }
        cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }

    const auto outcome = cli::run(command, cfg, std::cerr);
    if (outcome.exit_code == cli::kExitInvalid) {
        std::cerr << "invalid configuration for " << command << ":\n";
        for (const auto& e : outcome.errors) std::cerr << "  - " << e << '\n';
        return outcome.exit_code;
    }
    std::cout << outcome.dir.string() << '\n';
    for (const auto& e : outcome.errors) std::cerr << "error: " << e << '\n';
    if (!outcome.warnings.empty()) std::cerr << outcome.warnings.size() << " warning(s); see report.txt\n";
    return outcome.exit_code;
}
