#include "promptkg/cli/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::cli {

namespace {

using K = ValueKind;

const std::vector<std::string> kLinkCommands{"optimize", "predict", "enrich", "eval-rank"};
const std::vector<std::string> kLmCommands{"optimize", "predict", "enrich", "eval-rank", "numeric", "owl"};
const std::vector<std::string> kKgeCommands{"kge-train", "kge-eval"};

std::vector<std::string> join(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

bool in_scope(const KeySpec& k, const std::string& command) {
    return k.scope.empty() || std::find(k.scope.begin(), k.scope.end(), command) != k.scope.end();
}

// Required keys beyond seed; alternatives separated by '|'.
std::vector<std::string> required_keys(const std::string& command) {
    if (command == "eval-rank") return {"dataset|ranks"};
    if (command == "numeric") return {"literals"};
    if (command == "owl") return {"owl.graph", "owl.concepts"};
    if (command == "kge-eval") return {"dataset", "checkpoint"};
    return {"dataset"};
}

std::optional<long long> parse_integer(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stoll(s, &used);
        if (used == s.size()) return v;
    } catch (const std::logic_error&) {
    }
    return std::nullopt;
}

std::optional<double> parse_real(const std::string& s) {
    try {
        std::size_t used = 0;
        const auto v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::logic_error&) {
    }
    return std::nullopt;
}

}  // namespace

const std::vector<std::string>& commands() {
    static const std::vector<std::string> all{"optimize", "predict",  "enrich",    "eval-rank",
                                              "numeric",  "owl",      "kge-train", "kge-eval"};
    return all;
}

const std::vector<KeySpec>& config_keys() {
    static const std::vector<KeySpec> keys{
        {"seed", K::Integer, "", {}, "run seed; every random choice derives from it", {}},
        {"out", K::Text, "runs", {}, "root for timestamped run directories", {}},
        {"workers", K::Integer, "1", {}, "worker budget shared by LM calls and evaluation", {}},
        {"backend", K::Choice, "scripted", {"scripted", "remote"}, "LM backend", kLmCommands},
        {"scripted.mode", K::Choice, "echo", {"echo", "oracle"},
         "scripted answers from the train graph (echo) or from train+valid+test (oracle)", kLmCommands},
        {"lm.endpoint", K::Text, "", {}, "OpenAI-compatible base URL (remote backend)", kLmCommands},
        {"lm.model", K::Text, "", {}, "model name (remote backend)", kLmCommands},
        {"lm.context_budget", K::Integer, "32768", {}, "context window in tokens", kLmCommands},
        {"lm.chars_per_token", K::Real, "4", {}, "token estimate divisor", kLmCommands},
        {"lm.max_tokens", K::Integer, "1024", {}, "completion tokens per call", kLmCommands},
        {"dataset", K::Directory, "", {}, "directory with train/valid/test splits",
         join(kLinkCommands, join(kKgeCommands, {"numeric"}))},
        {"labels", K::Path, "", {}, "optional id<TAB>label file", join(kLinkCommands, {"numeric"})},
        {"prompt_preset", K::Choice, "countries", {"generic", "countries", "numeric", "owl"},
         "shipped seed prompts", join(kLinkCommands, {"numeric"})},
        {"prompt_state", K::Path, "", {}, "prompt state file, e.g. best_prompt.txt from optimize",
         join(kLinkCommands, {"numeric"})},
        {"preset", K::Choice, "light", {"light", "medium"}, "optimizer budget", {"optimize"}},
        {"metric", K::Choice, "cross-entropy", {"cross-entropy", "mrr"}, "optimizer objective", {"optimize"}},
        {"trials", K::Integer, "", {}, "override the preset's trial count", {"optimize"}},
        {"split", K::Choice, "test", {"valid", "test"}, "query split", {"predict", "eval-rank"}},
        {"top_k", K::Integer, "10", {}, "predictions kept per query", {"predict"}},
        {"ranks", K::Path, "", {}, "precomputed ranks, one integer per line", {"eval-rank"}},
        {"theta", K::Real, "0.51", {}, "enrichment threshold, > 0.5", {"enrich"}},
        {"literals", K::Path, "", {}, "subject<TAB>property<TAB>number file", {"numeric"}},
        {"numeric.properties", K::Integer, "10", {}, "properties sampled", {"numeric"}},
        {"numeric.max_queries", K::Integer, "0", {}, "queries per property, 0 = all", {"numeric"}},
        {"numeric.budget", K::Integer, "2048", {}, "context tokens per query", {"numeric"}},
        {"numeric.outlier_z", K::Real, "0", {}, "outlier filter on relation context, 0 = off", {"numeric"}},
        {"owl.graph", K::Path, "", {}, "ABox triples", {"owl"}},
        {"owl.subroles", K::Path, "", {}, "sub<TAB>super role table", {"owl"}},
        {"owl.concepts", K::Path, "", {}, "syntax<TAB>class expression list", {"owl"}},
        {"owl.examples", K::Integer, "2", {}, "concepts turned into worked examples", {"owl"}},
        {"owl.iri", K::Text, "http://example.com/family#", {}, "namespace used when namespace = on", {"owl"}},
        {"syntax", K::Choice, "both", {"manchester", "dl", "both"}, "concept syntax shown to the LM", {"owl"}},
        {"namespace", K::Choice, "both", {"on", "off", "both"}, "namespaced names in prompts", {"owl"}},
        {"kge.dim", K::Integer, "32", {}, "embedding dimension", kKgeCommands},
        {"kge.lr", K::Real, "0.1", {}, "Adam learning rate", {"kge-train"}},
        {"kge.epochs", K::Integer, "256", {}, "training epochs", {"kge-train"}},
        {"kge.batch", K::Integer, "1024", {}, "mini-batch size", {"kge-train"}},
        {"kge.dropout", K::Real, "0.3", {}, "dropout on head and relation rows", {"kge-train"}},
        {"kge.strategy", K::Choice, "kvsall", {"kvsall", "negsample"}, "training targets", {"kge-train"}},
        {"kge.negatives", K::Integer, "8", {}, "corruptions per triple (negsample)", {"kge-train"}},
        {"kge.augmented", K::Path, "", {}, "augmented train split; adds a second model row", {"kge-train"}},
        {"checkpoint", K::Path, "", {}, "embedding checkpoint", {"kge-eval"}},
    };
    return keys;
}

const KeySpec* find_key(std::string_view key) {
    for (const auto& k : config_keys())
        if (k.key == key) return &k;
    return nullptr;
}

RunConfig RunConfig::parse(std::string_view text) {
    RunConfig cfg;
    std::size_t line_no = 0;
    for (const auto& raw : split(text, '\n')) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("config: expected 'key = value'", line_no);
        const auto key = trim(std::string_view(line).substr(0, eq));
        if (key.empty()) throw ParseError("config: empty key", line_no);
        cfg.values_[key] = trim(std::string_view(line).substr(eq + 1));
    }
    return cfg;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

void RunConfig::set(const std::string& key, const std::string& value) { values_[key] = value; }

std::optional<std::string> RunConfig::get(const std::string& key) const {
    if (auto it = values_.find(key); it != values_.end()) return it->second;
    if (const auto* spec = find_key(key); spec && !spec->default_value.empty()) return spec->default_value;
    return std::nullopt;
}

std::string RunConfig::require(const std::string& key) const {
    auto v = get(key);
    if (!v || v->empty()) throw ContractViolation("config key '" + key + "' is required");
    return *v;
}

long long RunConfig::integer(const std::string& key) const {
    const auto s = require(key);
    auto v = parse_integer(s);
    if (!v) throw ContractViolation("config key '" + key + "': not an integer: " + s);
    return *v;
}

double RunConfig::real(const std::string& key) const {
    const auto s = require(key);
    auto v = parse_real(s);
    if (!v) throw ContractViolation("config key '" + key + "': not a number: " + s);
    return *v;
}

std::string RunConfig::snapshot(const std::string& command) const {
    std::map<std::string, std::string> lines;
    for (const auto& k : config_keys()) {
        if (!in_scope(k, command) || k.key == "out") continue;
        if (auto v = get(k.key)) lines[k.key] = *v;
    }
    std::ostringstream out;
    out << "command = " << command << '\n';
    for (const auto& [k, v] : lines) out << k << " = " << v << '\n';
    return out.str();
}

std::string RunConfig::hash(const std::string& command) const { return hex64(fnv1a(snapshot(command))); }

std::vector<std::string> validate(const std::string& command, const RunConfig& cfg) {
    std::vector<std::string> errors;
    const auto& cmds = commands();
    if (std::find(cmds.begin(), cmds.end(), command) == cmds.end()) {
        errors.push_back("unknown command '" + command + "'");
        return errors;
    }
    for (const auto& [key, value] : cfg.values()) {
        const auto* spec = find_key(key);
        if (!spec) {
            errors.push_back("unknown key '" + key + "'");
            continue;
        }
        if (value.empty()) continue;
        switch (spec->kind) {
            case K::Integer:
                if (!parse_integer(value)) errors.push_back(key + ": not an integer: '" + value + "'");
                break;
            case K::Real:
                if (!parse_real(value)) errors.push_back(key + ": not a number: '" + value + "'");
                break;
            case K::Choice: {
                const auto v = to_lower(value);
                if (std::find(spec->choices.begin(), spec->choices.end(), v) == spec->choices.end()) {
                    std::string options;
                    for (const auto& c : spec->choices) options += (options.empty() ? "" : "|") + c;
                    errors.push_back(key + ": '" + value + "' is not one of " + options);
                }
                break;
            }
            case K::Path:
                if (in_scope(*spec, command) && !std::filesystem::is_regular_file(value))
                    errors.push_back(key + ": file not found: " + value);
                break;
            case K::Directory:
                if (in_scope(*spec, command) && !std::filesystem::is_directory(value))
                    errors.push_back(key + ": directory not found: " + value);
                break;
            case K::Text:
                break;
        }
    }
    if (!cfg.has("seed") || cfg.values().at("seed").empty()) errors.push_back("seed is required");
    for (const auto& req : required_keys(command)) {
        bool present = false;
        for (const auto& alt : split(req, '|'))
            if (cfg.has(alt) && !cfg.values().at(alt).empty()) present = true;
        if (!present) {
            std::string names = req;
            std::replace(names.begin(), names.end(), '|', '/');
            errors.push_back(names + " is required for " + command);
        }
    }
    const auto positive = [&](const std::string& key) {
        if (!cfg.has(key)) return;
        if (auto v = parse_integer(cfg.values().at(key)); v && *v <= 0) errors.push_back(key + " must be positive");
    };
    for (const auto* key : {"workers", "lm.context_budget", "lm.max_tokens", "top_k", "numeric.properties",
                            "numeric.budget", "kge.dim", "kge.epochs", "kge.batch", "kge.negatives", "trials"})
        positive(key);
    if (cfg.has("theta"))
        if (auto v = parse_real(cfg.values().at("theta")); v && (*v <= 0.5 || *v > 1.0))
            errors.push_back("theta must lie in (0.5, 1]");
    if (cfg.has("kge.dropout"))
        if (auto v = parse_real(cfg.values().at("kge.dropout")); v && (*v < 0.0 || *v >= 1.0))
            errors.push_back("kge.dropout must lie in [0, 1)");
    if (cfg.has("kge.lr"))
        if (auto v = parse_real(cfg.values().at("kge.lr")); v && !(*v > 0.0)) errors.push_back("kge.lr must be positive");
    if (cfg.get("backend") == "remote" && in_scope(*find_key("backend"), command) &&
        !cfg.get("lm.endpoint") && !std::getenv("PROMPTKG_LM_ENDPOINT"))
        errors.push_back("remote backend needs lm.endpoint or PROMPTKG_LM_ENDPOINT");
    return errors;
}

}  // namespace promptkg::cli
