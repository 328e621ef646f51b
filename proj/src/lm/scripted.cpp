#include "promptkg/lm/scripted.hpp"

namespace promptkg::lm {

ScriptedLm::ScriptedLm(std::string default_response) : default_response_(std::move(default_response)) {}

ScriptedLm& ScriptedLm::when_contains(std::string needle, std::string response) {
    return when([needle = std::move(needle)](const std::string& p) { return p.find(needle) != std::string::npos; },
                std::move(response));
}

ScriptedLm& ScriptedLm::when(Predicate pred, std::string response) {
    rules_.push_back([pred = std::move(pred), response = std::move(response)](
                         const LmRequest& req) -> std::optional<std::string> {
        if (pred(req.prompt_text())) return response;
        return std::nullopt;
    });
    return *this;
}

ScriptedLm& ScriptedLm::respond_with(Responder responder) {
    rules_.push_back(std::move(responder));
    return *this;
}

LmResponse ScriptedLm::complete(const LmRequest& req) {
    ++calls_;
    LmResponse resp;
    resp.text = default_response_;
    for (const auto& rule : rules_) {
        if (auto hit = rule(req)) {
            resp.text = std::move(*hit);
            break;
        }
    }
    resp.usage.prompt_tokens = static_cast<std::int64_t>(estimate_tokens(req));
    resp.usage.completion_tokens = static_cast<std::int64_t>(estimate_tokens(resp.text));
    return resp;
}

std::shared_ptr<ScriptedLm> ScriptedLm::from_json(const nlohmann::json& script) {
    if (!script.contains("default") || !script["default"].is_string())
        throw ParseError("LM script needs a string \"default\" response");
    auto lm = std::make_shared<ScriptedLm>(script["default"].get<std::string>());
    if (script.contains("rules")) {
        for (const auto& rule : script["rules"]) {
            if (!rule.contains("contains") || !rule.contains("response"))
                throw ParseError("LM script rule needs \"contains\" and \"response\"");
            lm->when_contains(rule["contains"].get<std::string>(), rule["response"].get<std::string>());
        }
    }
    return lm;
}

}  // namespace promptkg::lm
