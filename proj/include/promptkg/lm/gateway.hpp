#pragma once
// Single entry point for language-model calls.
//
// Every LM call in the project goes through LmGateway::complete. Backends
// implement LmBackend: RemoteLm talks to an OpenAI-compatible
// /v1/chat/completions endpoint, ScriptedLm replays canned responses.

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptkg/common/error.hpp"

namespace promptkg::lm {

struct ChatMessage {
    std::string role;
    std::string content;
    bool operator==(const ChatMessage&) const = default;
};

struct LmRequest {
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    int max_tokens = 1024;
    std::optional<std::int64_t> seed;

    // Message contents joined by newlines; what scripted matchers look at.
    std::string prompt_text() const;
};

struct TokenUsage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

struct LmResponse {
    std::string text;
    TokenUsage usage;
};

class BudgetError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class ProtocolError : public Error {
public:
    ProtocolError(int status, std::string body_excerpt)
        : Error("LM endpoint returned HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          body_(std::move(body_excerpt)) {}
    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

class LmBackend {
public:
    virtual ~LmBackend() = default;
    virtual LmResponse complete(const LmRequest& req) = 0;
    virtual std::string name() const = 0;
};

// ceil(bytes / chars_per_token). Monotone in length; "" -> 0.
std::size_t estimate_tokens(std::string_view text, double chars_per_token = 4.0);
// Content estimate plus a fixed per-message overhead of 4 tokens.
std::size_t estimate_tokens(const LmRequest& req, double chars_per_token = 4.0);

struct GatewayOptions {
    std::size_t context_budget = 32768;  // c
    double chars_per_token = 4.0;
    std::size_t max_in_flight = 4;
    std::optional<std::filesystem::path> request_log;
};

struct GatewayStats {
    std::size_t calls = 0;
    std::size_t failures = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

class LmGateway {
public:
    explicit LmGateway(std::shared_ptr<LmBackend> backend, GatewayOptions opts = {});

    // Throws BudgetError before contacting the backend when the prompt
    // estimate plus max_tokens exceeds the context budget.
    LmResponse complete(const LmRequest& req);

    std::size_t estimate(std::string_view text) const { return estimate_tokens(text, opts_.chars_per_token); }
    const GatewayOptions& options() const noexcept { return opts_; }
    GatewayStats stats() const;
    const LmBackend& backend() const noexcept { return *backend_; }

private:
    std::shared_ptr<LmBackend> backend_;
    GatewayOptions opts_;
    mutable std::mutex mutex_;
    std::condition_variable slot_free_;
    std::size_t in_flight_ = 0;
    GatewayStats stats_;
    std::ofstream log_;
};

// Convenience: one user message at temperature 0.
LmRequest user_request(std::string prompt, int max_tokens = 1024);

}  // namespace promptkg::lm
