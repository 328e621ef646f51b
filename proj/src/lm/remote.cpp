#include "promptkg/lm/remote.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace promptkg::lm {

namespace {

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

}  // namespace

RemoteOptions remote_options_from_env(RemoteOptions base) {
    base.base_url = env_or("PROMPTKG_LM_ENDPOINT", base.base_url);
    base.model = env_or("PROMPTKG_LM_MODEL", base.model);
    base.api_key = env_or("PROMPTKG_LM_API_KEY", env_or("OPENAI_API_KEY", base.api_key));
    return base;
}

RemoteLm::RemoteLm(RemoteOptions opts) : opts_(std::move(opts)) {
    if (opts_.max_attempts < 1) opts_.max_attempts = 1;
    std::string url = opts_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ContractViolation("LM endpoint must include a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    host_ = url.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
    if (prefix.size() >= 3 && prefix.compare(prefix.size() - 3, 3, "/v1") == 0)
        path_ = prefix + "/chat/completions";
    else
        path_ = prefix + "/v1/chat/completions";
}

nlohmann::json RemoteLm::request_body(const LmRequest& req) const {
    nlohmann::json body;
    body["model"] = opts_.model;
    body["messages"] = nlohmann::json::array();
    for (const auto& m : req.messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    body["temperature"] = req.temperature;
    body["max_tokens"] = req.max_tokens;
    if (req.seed) body["seed"] = *req.seed;
    return body;
}

LmResponse RemoteLm::parse_response(const std::string& body) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error&) {
        throw ProtocolError(200, "malformed JSON: " + body.substr(0, 200));
    }
    if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
        throw ProtocolError(200, "response has no choices: " + body.substr(0, 200));
    const auto& msg = j["choices"][0]["message"];
    LmResponse resp;
    if (msg.contains("content") && msg["content"].is_string()) resp.text = msg["content"].get<std::string>();
    if (j.contains("usage") && j["usage"].is_object()) {
        resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
        resp.usage.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
    }
    return resp;
}

LmResponse RemoteLm::complete(const LmRequest& req) {
    const std::string payload = request_body(req).dump();
    httplib::Client client(host_);
    client.set_connection_timeout(opts_.timeout);
    client.set_read_timeout(opts_.timeout);
    client.set_write_timeout(opts_.timeout);
    httplib::Headers headers;
    if (!opts_.api_key.empty()) headers.emplace("Authorization", "Bearer " + opts_.api_key);

    auto backoff = opts_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
        auto res = client.Post(path_, headers, payload, "application/json");
        if (res) {
            if (res->status < 200 || res->status >= 300) throw ProtocolError(res->status, res->body.substr(0, 200));
            return parse_response(res->body);
        }
        last_error = httplib::to_string(res.error());
        if (attempt < opts_.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<std::int64_t>(static_cast<double>(backoff.count()) * opts_.backoff_multiplier));
        }
    }
    throw TransportError("LM endpoint " + host_ + path_ + " unreachable after " + std::to_string(opts_.max_attempts) +
                         " attempt(s): " + last_error);
}

}  // namespace promptkg::lm
