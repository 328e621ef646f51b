#pragma once

#include <chrono>
#include <string>

#include <json.hpp>

#include "promptkg/lm/gateway.hpp"

namespace promptkg::lm {

struct RemoteOptions {
    std::string base_url = "http://localhost:8000";
    std::string model = "Qwen/Qwen2.5-32B-Instruct";
    std::string api_key;
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double backoff_multiplier = 2.0;
    std::chrono::seconds timeout{300};
};

// Reads PROMPTKG_LM_ENDPOINT, PROMPTKG_LM_MODEL and PROMPTKG_LM_API_KEY
// (falling back to OPENAI_API_KEY) over the given defaults.
RemoteOptions remote_options_from_env(RemoteOptions base = {});

// OpenAI-compatible chat-completions client. Transport failures are retried
// with exponential backoff; HTTP errors are not.
class RemoteLm : public LmBackend {
public:
    explicit RemoteLm(RemoteOptions opts);
    LmResponse complete(const LmRequest& req) override;
    std::string name() const override { return "remote:" + opts_.model; }

    nlohmann::json request_body(const LmRequest& req) const;
    static LmResponse parse_response(const std::string& body);

private:
    RemoteOptions opts_;
    std::string host_;  // scheme://host[:port]
    std::string path_;  // .../v1/chat/completions
};

}  // namespace promptkg::lm
