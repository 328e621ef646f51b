#include "promptkg/lm/gateway.hpp"

#include <chrono>
#include <cmath>

#include <json.hpp>

#include "promptkg/common/util.hpp"

namespace promptkg::lm {

std::string LmRequest::prompt_text() const {
    std::string out;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (i) out.push_back('\n');
        out += messages[i].content;
    }
    return out;
}

std::size_t estimate_tokens(std::string_view text, double chars_per_token) {
    if (chars_per_token <= 0) throw ContractViolation("chars_per_token must be positive");
    return static_cast<std::size_t>(std::ceil(static_cast<double>(text.size()) / chars_per_token));
}

std::size_t estimate_tokens(const LmRequest& req, double chars_per_token) {
    std::size_t total = 0;
    for (const auto& m : req.messages) total += 4 + estimate_tokens(m.content, chars_per_token);
    return total;
}

LmRequest user_request(std::string prompt, int max_tokens) {
    LmRequest req;
    req.messages.push_back({"user", std::move(prompt)});
    req.max_tokens = max_tokens;
    return req;
}

namespace {

std::string request_fingerprint(const LmRequest& req) {
    nlohmann::json j;
    j["temperature"] = req.temperature;
    j["max_tokens"] = req.max_tokens;
    if (req.seed) j["seed"] = *req.seed;
    for (const auto& m : req.messages) j["messages"].push_back({{"role", m.role}, {"content", m.content}});
    return j.dump();
}

}  // namespace

LmGateway::LmGateway(std::shared_ptr<LmBackend> backend, GatewayOptions opts)
    : backend_(std::move(backend)), opts_(std::move(opts)) {
    if (!backend_) throw ContractViolation("gateway requires a backend");
    if (opts_.max_in_flight == 0) opts_.max_in_flight = 1;
    if (opts_.request_log) {
        log_.open(*opts_.request_log, std::ios::app);
        if (!log_) throw Error("cannot open request log " + opts_.request_log->string());
    }
}

LmResponse LmGateway::complete(const LmRequest& req) {
    if (req.messages.empty()) throw ContractViolation("LM request needs at least one message");
    if (req.max_tokens <= 0) throw ContractViolation("max_tokens must be positive");
    if (req.temperature < 0) throw ContractViolation("temperature must be >= 0");
    const std::size_t estimate = estimate_tokens(req, opts_.chars_per_token);
    if (estimate + static_cast<std::size_t>(req.max_tokens) > opts_.context_budget)
        throw BudgetError("prompt estimate " + std::to_string(estimate) + " + max_tokens " +
                          std::to_string(req.max_tokens) + " exceeds context budget " +
                          std::to_string(opts_.context_budget));

    {
        std::unique_lock lock(mutex_);
        slot_free_.wait(lock, [&] { return in_flight_ < opts_.max_in_flight; });
        ++in_flight_;
    }
    const auto start = std::chrono::steady_clock::now();
    LmResponse resp;
    try {
        resp = backend_->complete(req);
    } catch (...) {
        std::lock_guard lock(mutex_);
        --in_flight_;
        ++stats_.calls;
        ++stats_.failures;
        slot_free_.notify_one();
        throw;
    }
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    std::lock_guard lock(mutex_);
    --in_flight_;
    slot_free_.notify_one();
    ++stats_.calls;
    stats_.prompt_tokens += resp.usage.prompt_tokens;
    stats_.completion_tokens += resp.usage.completion_tokens;
    if (log_) {
        log_ << hex64(fnv1a(request_fingerprint(req))) << '\t' << hex64(fnv1a(resp.text)) << '\t' << ms.count()
             << '\n';
        log_.flush();
    }
    return resp;
}

GatewayStats LmGateway::stats() const {
    std::lock_guard lock(mutex_);
    return stats_;
}

}  // namespace promptkg::lm
