#include "promptkg/prompt/parse.hpp"

#include <cctype>
#include <regex>

#include "promptkg/common/util.hpp"
#include "promptkg/kg/io.hpp"

namespace promptkg::prompt {

namespace {

std::string strip_markup(std::string s) {
    s = trim(s);
    // bullets / numbering
    static const std::regex bullet(R"(^(?:[-*+•]|\d+[.)])\s+)");
    s = std::regex_replace(s, bullet, "");
    // surrounding emphasis and quotes
    while (s.size() >= 2 && ((s.front() == '*' && s.back() == '*') || (s.front() == '`' && s.back() == '`') ||
                             (s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        s = trim(s.substr(1, s.size() - 2));
    return s;
}

std::optional<double> to_number(std::string_view token) {
    double v = 0;
    std::string t = trim(token);
    if (!t.empty() && t.back() == '%') {
        t.pop_back();
        if (kg::parse_numeric_literal(t, v)) return v / 100.0;
        return std::nullopt;
    }
    if (kg::parse_numeric_literal(t, v)) return v;
    return std::nullopt;
}

struct Block {
    std::vector<std::string> lines;
};

// Contents of ``` fenced blocks, in order.
std::vector<Block> fenced_blocks(const std::vector<std::string>& lines) {
    std::vector<Block> out;
    bool inside = false;
    for (const auto& l : lines) {
        if (trim(l).rfind("```", 0) == 0) {
            if (inside) {
                inside = false;
            } else {
                inside = true;
                out.emplace_back();
            }
            continue;
        }
        if (inside) out.back().lines.push_back(l);
    }
    return out;
}

std::optional<NamedScore> tab_line(const std::string& line) {
    if (line.find('\t') == std::string::npos) return std::nullopt;
    auto fields = split(line, '\t');
    NamedScore ns;
    ns.name = strip_markup(fields[0]);
    if (ns.name.empty()) return std::nullopt;
    if (fields.size() >= 2) ns.score = to_number(fields[1]);
    if (fields.size() >= 3) ns.rationale = trim(fields[2]);
    return ns;
}

std::vector<NamedScore> names_from_lines(const std::vector<std::string>& lines) {
    std::vector<NamedScore> out;
    for (const auto& raw : lines) {
        if (trim(raw).empty()) continue;
        if (auto t = tab_line(raw)) {
            out.push_back(*t);
            continue;
        }
        NamedScore ns;
        ns.name = strip_markup(raw);
        if (!ns.name.empty()) out.push_back(ns);
    }
    return out;
}

}  // namespace

std::vector<std::string> parse_name_list(std::string_view text) {
    std::string t = trim(text);
    if (!t.empty() && (t.front() == '[' || t.front() == '{')) t = t.substr(1);
    if (!t.empty() && (t.back() == ']' || t.back() == '}')) t.pop_back();
    std::vector<std::string> out;
    for (auto& part : split(t, ',')) {
        auto name = strip_markup(part);
        if (!name.empty()) out.push_back(name);
    }
    return out;
}

std::vector<NamedScore> parse_candidates(std::string_view text, std::string_view label) {
    const auto lines = split(text, '\n');
    const std::string key = to_lower(label);

    // last "label:" line
    for (std::size_t i = lines.size(); i-- > 0;) {
        std::string l = trim(lines[i]);
        while (!l.empty() && (l.front() == '*' || l.front() == '#')) l = trim(l.substr(1));
        if (!starts_with_ci(l, key)) continue;
        std::string rest = trim(l.substr(key.size()));
        while (!rest.empty() && rest.front() == '*') rest = trim(rest.substr(1));
        if (rest.empty() || rest.front() != ':') continue;
        rest = trim(rest.substr(1));
        while (!rest.empty() && rest.front() == '*') rest = trim(rest.substr(1));

        if (!rest.empty() && rest.front() == '[') {
            std::size_t j = i;
            while (rest.find(']') == std::string::npos && ++j < lines.size()) rest += " " + trim(lines[j]);
            std::vector<NamedScore> out;
            for (auto& n : parse_name_list(rest.substr(0, rest.find(']') + 1))) out.push_back({n, std::nullopt, {}});
            return out;
        }
        if (!rest.empty()) {
            std::vector<NamedScore> out;
            for (auto& n : parse_name_list(rest)) out.push_back({n, std::nullopt, {}});
            return out;
        }
        // label alone: a fenced block or bullet lines follow
        std::vector<std::string> following(lines.begin() + static_cast<std::ptrdiff_t>(i) + 1, lines.end());
        auto blocks = fenced_blocks(following);
        if (!blocks.empty()) return names_from_lines(blocks.front().lines);
        std::vector<std::string> bullets;
        for (const auto& f : following) {
            if (trim(f).empty()) {
                if (!bullets.empty()) break;
                continue;
            }
            bullets.push_back(f);
        }
        return names_from_lines(bullets);
    }

    auto blocks = fenced_blocks(lines);
    if (!blocks.empty()) return names_from_lines(blocks.back().lines);
    throw OutputParseError("no candidate list in LM output", std::string(text));
}

std::vector<NamedScore> parse_scores(std::string_view text) {
    const auto lines = split(text, '\n');
    std::vector<NamedScore> out;
    auto blocks = fenced_blocks(lines);
    const std::vector<std::string>* scope = &lines;
    for (const auto& b : blocks)
        for (const auto& l : b.lines)
            if (l.find('\t') != std::string::npos) scope = &b.lines;
    for (const auto& l : *scope) {
        auto t = tab_line(l);
        if (t && t->score) out.push_back(*t);
    }
    if (!out.empty()) return out;

    static const std::regex pair(
        R"(^\s*(?:[-*+]|\d+[.)])?\s*\**["'`]?([^:="'`*\t]+?)["'`]?\**\s*[:=]\s*\**(-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)(%?)\**\s*(.*)$)");
    for (const auto& l : lines) {
        std::smatch m;
        if (!std::regex_match(l, m, pair)) continue;
        NamedScore ns;
        ns.name = trim(m[1].str());
        double v = std::stod(m[2].str());
        if (m[3].matched && m[3].length() > 0) v /= 100.0;
        ns.score = v;
        std::string rest = trim(m[4].str());
        while (!rest.empty() && (rest.front() == '-' || rest.front() == '(' || rest.front() == ',')) rest = trim(rest.substr(1));
        if (!rest.empty() && rest.back() == ')') rest.pop_back();
        ns.rationale = rest;
        if (!ns.name.empty()) out.push_back(ns);
    }
    return out;
}

std::vector<double> extract_numbers(std::string_view text) {
    std::vector<double> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    auto digit = [&](std::size_t k) { return k < n && std::isdigit(static_cast<unsigned char>(text[k])); };
    while (i < n) {
        const bool neg = text[i] == '-' && (digit(i + 1) || (i + 2 < n && text[i + 1] == '.' && digit(i + 2))) &&
                         (i == 0 || !std::isalnum(static_cast<unsigned char>(text[i - 1])));
        if (!digit(i) && !(text[i] == '.' && digit(i + 1)) && !neg) {
            ++i;
            continue;
        }
        std::string token;
        if (neg) {
            token.push_back('-');
            ++i;
        }
        while (i < n) {
            if (digit(i)) {
                token.push_back(text[i++]);
            } else if (text[i] == ',' && digit(i + 1) && digit(i + 2) && digit(i + 3) && !digit(i + 4)) {
                ++i;  // thousands separator
            } else if (text[i] == '.' && digit(i + 1) && token.find('.') == std::string::npos) {
                token.push_back(text[i++]);
            } else if ((text[i] == 'e' || text[i] == 'E') &&
                       (digit(i + 1) || ((text[i + 1] == '-' || text[i + 1] == '+') && digit(i + 2)))) {
                token.push_back(text[i++]);
                if (text[i] == '-' || text[i] == '+') token.push_back(text[i++]);
                while (digit(i)) token.push_back(text[i++]);
                break;
            } else {
                break;
            }
        }
        double v = 0;
        if (kg::parse_numeric_literal(token, v)) out.push_back(v);
    }
    return out;
}

std::optional<double> labeled_number(std::string_view text, std::string_view label) {
    std::optional<double> found;
    for (const auto& raw : split(text, '\n')) {
        std::string l = trim(raw);
        while (!l.empty() && (l.front() == '*' || l.front() == '-' || l.front() == '#')) l = trim(l.substr(1));
        if (!starts_with_ci(l, label)) continue;
        std::string rest = l.substr(label.size());
        while (!rest.empty() && (rest.front() == '*' || rest.front() == ' ')) rest = rest.substr(1);
        if (rest.empty() || (rest.front() != ':' && rest.front() != '=')) continue;
        auto nums = extract_numbers(rest.substr(1));
        if (!nums.empty()) found = nums.front();
    }
    return found;
}

}  // namespace promptkg::prompt
