#pragma once

#include <string>

#include "ttc/gateway.hpp"

// ===== HTTP chat backend =====
//
// Speaks the common chat-completions wire protocol:
//   POST {base}/chat/completions
//   {"model": ..., "messages": [...], "temperature": ..., ...}
//
// The endpoint URL and the bearer credential are read from named environment
// variables at construction.  Neither value is ever logged, echoed, or
// embedded in error messages — errors name the variable, not its contents.
// Timeouts, HTTP 429 and 5xx map to TransientBackendError so the gateway
// retries them; other non-200 statuses are permanent GatewayErrors.

namespace ttc {

struct HttpBackendOptions {
    std::string base_url_env = "TTC_BASE_URL"; // e.g. http://localhost:8000/v1
    std::string api_key_env = "TTC_API_KEY";   // optional; sent as a bearer token
    int timeout_ms = 60000;
};

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(HttpBackendOptions options = {});

    ChatResponse complete(const ChatRequest& request, int ordinal) override;
    std::string name() const override { return "http"; }

private:
    HttpBackendOptions options_;
    std::string scheme_host_;   // scheme://host[:port], resolved once
    std::string base_path_;     // path prefix from the URL, may be empty
    std::string api_key_;       // empty when the variable is unset
};

} // namespace ttc
