#pragma once

#include <atomic>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "promptkg/lm/gateway.hpp"

namespace promptkg::lm {

// Deterministic test double. Rules are tried in insertion order; the first
// match answers, otherwise the mandatory default response is returned.
class ScriptedLm : public LmBackend {
public:
    using Predicate = std::function<bool(const std::string& prompt)>;
    // Dynamic rule: nullopt means "no match, try the next rule".
    using Responder = std::function<std::optional<std::string>(const LmRequest&)>;

    explicit ScriptedLm(std::string default_response);

    ScriptedLm& when_contains(std::string needle, std::string response);
    ScriptedLm& when(Predicate pred, std::string response);
    ScriptedLm& respond_with(Responder responder);

    LmResponse complete(const LmRequest& req) override;
    std::string name() const override { return "scripted"; }
    std::size_t calls() const noexcept { return calls_.load(); }

    // {"default": "...", "rules": [{"contains": "...", "response": "..."}]}
    static std::shared_ptr<ScriptedLm> from_json(const nlohmann::json& script);

private:
    std::vector<Responder> rules_;
    std::string default_response_;
    std::atomic<std::size_t> calls_{0};
};

}  // namespace promptkg::lm
