#include "promptkg/prompt/state.hpp"

#include <set>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"

namespace promptkg::prompt {

void Signature::validate() const {
    if (trim(instruction).empty()) throw ContractViolation("signature '" + name + "' has an empty instruction");
    std::set<std::string> seen;
    for (const auto* group : {&inputs, &outputs})
        for (const auto& f : *group)
            if (!seen.insert(f.name).second)
                throw ContractViolation("signature '" + name + "' repeats field '" + f.name + "'");
}

namespace {

std::string escape(std::string_view v) {
    std::string out;
    for (char c : v) {
        if (c == '\\')
            out += "\\\\";
        else if (c == '\n')
            out += "\\n";
        else
            out.push_back(c);
    }
    return out;
}

std::string unescape(std::string_view v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] == '\\' && i + 1 < v.size()) {
            out.push_back(v[i + 1] == 'n' ? '\n' : v[i + 1]);
            ++i;
        } else {
            out.push_back(v[i]);
        }
    }
    return out;
}

void write_instruction(std::ostream& out, const char* tag, const std::string& text) {
    out << '@' << tag << '\n';
    for (const auto& line : split(text, '\n')) {
        if (!line.empty() && line[0] == '@') out << '@';
        out << line << '\n';
    }
}

void write_demo(std::ostream& out, const char* tag, const Demo& d) {
    out << '@' << tag << '\n';
    for (const auto& [k, v] : d.inputs) out << "input " << k << ": " << escape(v) << '\n';
    for (const auto& [k, v] : d.outputs) out << "output " << k << ": " << escape(v) << '\n';
    out << "@end\n";
}

}  // namespace

std::string serialize(const PromptState& s) {
    std::ostringstream out;
    out << "@prompt-state v1\n@token_cap " << s.token_cap << '\n';
    write_instruction(out, "composer_instruction", s.composer_instruction);
    write_instruction(out, "scorer_instruction", s.scorer_instruction);
    for (const auto& d : s.composer_demos) write_demo(out, "composer_demo", d);
    for (const auto& d : s.scorer_demos) write_demo(out, "scorer_demo", d);
    return out.str();
}

PromptState parse_prompt_state(std::string_view text) {
    PromptState s;
    auto lines = split(text, '\n');
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    std::size_t i = 0;
    auto line_no = [&] { return i + 1; };
    if (lines.empty() || trim(lines[0]) != "@prompt-state v1") throw ParseError("missing '@prompt-state v1' header", 1);
    ++i;
    auto read_instruction = [&]() {
        std::vector<std::string> body;
        while (i < lines.size() && !(lines[i].size() > 0 && lines[i][0] == '@' &&
                                     !(lines[i].size() > 1 && lines[i][1] == '@'))) {
            const auto& l = lines[i];
            body.push_back(l.size() > 1 && l[0] == '@' && l[1] == '@' ? l.substr(1) : l);
            ++i;
        }
        std::string out;
        for (std::size_t k = 0; k < body.size(); ++k) {
            if (k) out.push_back('\n');
            out += body[k];
        }
        return out;
    };
    auto read_demo = [&]() {
        Demo d;
        while (i < lines.size() && trim(lines[i]) != "@end") {
            const auto& l = lines[i];
            const bool is_input = l.rfind("input ", 0) == 0;
            const bool is_output = l.rfind("output ", 0) == 0;
            const auto colon = l.find(": ");
            if ((!is_input && !is_output) || colon == std::string::npos)
                throw ParseError("demo line must be 'input|output <field>: <value>'", line_no());
            const std::size_t name_start = is_input ? 6 : 7;
            auto key = l.substr(name_start, colon - name_start);
            auto value = unescape(l.substr(colon + 2));
            (is_input ? d.inputs : d.outputs)[key] = value;
            ++i;
        }
        if (i == lines.size()) throw ParseError("unterminated demo block", line_no());
        ++i;  // @end
        return d;
    };
    while (i < lines.size()) {
        const std::string tag = trim(lines[i]);
        if (tag.empty()) {
            ++i;
            continue;
        }
        if (tag.rfind("@token_cap ", 0) == 0) {
            try {
                s.token_cap = std::stoul(tag.substr(11));
            } catch (const std::exception&) {
                throw ParseError("bad token cap", line_no());
            }
            ++i;
        } else if (tag == "@composer_instruction") {
            ++i;
            s.composer_instruction = read_instruction();
        } else if (tag == "@scorer_instruction") {
            ++i;
            s.scorer_instruction = read_instruction();
        } else if (tag == "@composer_demo") {
            ++i;
            s.composer_demos.push_back(read_demo());
        } else if (tag == "@scorer_demo") {
            ++i;
            s.scorer_demos.push_back(read_demo());
        } else {
            throw ParseError("unknown prompt-state section '" + tag + "'", line_no());
        }
    }
    // instructions keep interior newlines but not trailing blank lines
    auto rstrip = [](std::string& v) {
        while (!v.empty() && (v.back() == '\n' || v.back() == ' ')) v.pop_back();
    };
    rstrip(s.composer_instruction);
    rstrip(s.scorer_instruction);
    return s;
}

std::string state_hash(const PromptState& state) { return hex64(fnv1a(serialize(state))).substr(0, 12); }

namespace {

// Resource layout: "@preset <name>" lines separate prompt-state bodies.
std::map<std::string, std::string> preset_bodies() {
    std::map<std::string, std::string> out;
    std::string current;
    std::ostringstream body;
    auto flush = [&] {
        if (!current.empty()) out[current] = "@prompt-state v1\n" + body.str();
        body.str("");
    };
    for (const auto& line : split(default_prompts_resource(), '\n')) {
        if (line.rfind("@preset ", 0) == 0) {
            flush();
            current = trim(line.substr(8));
        } else if (!current.empty()) {
            body << line << '\n';
        }
    }
    flush();
    return out;
}

}  // namespace

PromptState default_prompt_state(std::string_view preset) {
    static const auto bodies = preset_bodies();
    auto it = bodies.find(std::string(preset));
    if (it == bodies.end()) throw ContractViolation("unknown prompt preset '" + std::string(preset) + "'");
    return parse_prompt_state(it->second);
}

std::vector<std::string> prompt_presets() {
    std::vector<std::string> names;
    for (const auto& [k, _] : preset_bodies()) names.push_back(k);
    return names;
}

}  // namespace promptkg::prompt
