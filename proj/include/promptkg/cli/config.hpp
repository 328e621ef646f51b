#pragma once
// Run configuration: a flat "key = value" file overlaid with flag overrides.
//
//   # comment
//   seed = 7
//   dataset = data/countries-s1
//   backend = scripted
//
// Keys are fixed (see config_keys()); relative paths resolve against the
// working directory. Secrets never live here: the remote backend reads its
// API key from the environment.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace promptkg::cli {

enum class ValueKind { Integer, Real, Text, Path, Directory, Choice };

struct KeySpec {
    std::string key;
    ValueKind kind = ValueKind::Text;
    std::string default_value;         // empty: no default
    std::vector<std::string> choices;  // for Choice
    std::string help;
    std::vector<std::string> scope;    // commands using the key; empty: all
};

const std::vector<KeySpec>& config_keys();
const KeySpec* find_key(std::string_view key);

const std::vector<std::string>& commands();

class RunConfig {
public:
    // Throws ParseError with the line number on a line without '='.
    static RunConfig parse(std::string_view text);
    static RunConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    bool has(const std::string& key) const { return values_.contains(key); }
    // Explicit value, else the key's default, else nullopt.
    std::optional<std::string> get(const std::string& key) const;
    // get() or ContractViolation.
    std::string require(const std::string& key) const;
    long long integer(const std::string& key) const;
    double real(const std::string& key) const;

    const std::map<std::string, std::string>& values() const noexcept { return values_; }

    // "command = ..." then sorted "key = value" lines for the keys in the
    // command's scope, defaults filled in. The output root is left out so
    // identical experiments hash alike wherever they are written.
    std::string snapshot(const std::string& command) const;
    // 16 hex digits (FNV-1a 64) of the snapshot.
    std::string hash(const std::string& command) const;

private:
    std::map<std::string, std::string> values_;
};

// Every problem with (command, cfg), in a stable order; empty when valid.
// Checks: known command and keys, seed present, per-command required keys,
// value syntax and choices, referenced files and directories exist.
std::vector<std::string> validate(const std::string& command, const RunConfig& cfg);

}  // namespace promptkg::cli
