#include "promptkg/prompt/render.hpp"

#include <cctype>
#include <sstream>

#include "promptkg/common/error.hpp"
#include "promptkg/common/util.hpp"
#include "promptkg/lm/gateway.hpp"

namespace promptkg::prompt {

std::string field_label(const std::string& name) {
    std::string out;
    bool start = true;
    for (char c : name) {
        if (c == '_') {
            out.push_back(' ');
            start = true;
        } else {
            out.push_back(start ? static_cast<char>(std::toupper(static_cast<unsigned char>(c))) : c);
            start = false;
        }
    }
    return out;
}

namespace {

std::string value_or_none(const std::map<std::string, std::string>& m, const std::string& key) {
    auto it = m.find(key);
    if (it == m.end() || trim(it->second).empty()) return "(none)";
    return it->second;
}

void render_fields(std::ostream& out, const std::vector<Field>& fields, const std::map<std::string, std::string>& values,
                   bool skip_absent = false) {
    for (const auto& f : fields) {
        if (skip_absent && !values.contains(f.name)) continue;
        const std::string v = value_or_none(values, f.name);
        out << field_label(f.name) << ':' << (v.find('\n') != std::string::npos ? "\n" : " ") << v << '\n';
    }
}

std::string render_header(const Signature& sig) {
    std::ostringstream out;
    out << trim(sig.instruction) << "\n\n---\n\nFollow the following format.\n\n";
    for (const auto* group : {&sig.inputs, &sig.outputs})
        for (const auto& f : *group) out << field_label(f.name) << ": " << f.description << '\n';
    return out.str();
}

std::string render_demo(const Signature& sig, const Demo& d, std::size_t index) {
    std::ostringstream out;
    out << "---\n\nExample " << index + 1 << ":\n";
    render_fields(out, sig.inputs, d.inputs, true);
    render_fields(out, sig.outputs, d.outputs, true);
    out << '\n';
    return out.str();
}

std::string render_query(const Signature& sig, const std::map<std::string, std::string>& query) {
    std::ostringstream out;
    out << "---\n\n";
    render_fields(out, sig.inputs, query);
    if (!sig.outputs.empty()) out << field_label(sig.outputs.front().name) << ':';
    return out.str();
}

}  // namespace

RenderedPrompt initialize_prompt(const Signature& sig, std::span<const Demo> demos,
                                 const std::map<std::string, std::string>& query, std::size_t token_cap,
                                 double chars_per_token) {
    sig.validate();
    const std::string header = render_header(sig) + "\n";
    const std::string tail = render_query(sig, query);
    std::vector<std::string> rendered;
    rendered.reserve(demos.size());
    for (std::size_t i = 0; i < demos.size(); ++i) rendered.push_back(render_demo(sig, demos[i], i));

    std::size_t used = rendered.size();
    auto assemble = [&](std::size_t n) {
        std::string text = header;
        for (std::size_t i = 0; i < n; ++i) text += rendered[i];
        text += tail;
        return text;
    };
    std::string text = assemble(used);
    std::size_t tokens = lm::estimate_tokens(text, chars_per_token);
    while (tokens > token_cap && used > 0) {
        --used;
        text = assemble(used);
        tokens = lm::estimate_tokens(text, chars_per_token);
    }
    if (tokens > token_cap)
        throw SizeError("prompt for '" + sig.name + "' needs " + std::to_string(tokens) +
                        " tokens without demos; cap is " + std::to_string(token_cap));
    return {std::move(text), used, tokens};
}

std::string extract_field(const std::string& prompt, const std::string& field_name) {
    const std::string key = field_label(field_name) + ": ";
    std::size_t best = std::string::npos;
    for (std::size_t pos = prompt.find(key); pos != std::string::npos; pos = prompt.find(key, pos + 1))
        if (pos == 0 || prompt[pos - 1] == '\n') best = pos;
    if (best == std::string::npos) return {};
    const std::size_t start = best + key.size();
    const std::size_t end = prompt.find('\n', start);
    return prompt.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

}  // namespace promptkg::prompt
