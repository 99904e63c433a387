#include "ttc/http_backend.hpp"

#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "ttc/errors.hpp"

namespace ttc {

namespace {

std::string env_or_empty(const std::string& name) {
    const char* value = std::getenv(name.c_str());
    return value ? std::string(value) : std::string();
}

} // namespace

HttpBackend::HttpBackend(HttpBackendOptions options) : options_(std::move(options)) {
    const std::string url = env_or_empty(options_.base_url_env);
    if (url.empty())
        throw ConfigError("environment variable " + options_.base_url_env +
                          " must hold the endpoint URL");
    if (url.rfind("https://", 0) == 0)
        throw ConfigError("this build speaks plain http; point " + options_.base_url_env +
                          " at an http endpoint or a local TLS-terminating proxy");
    if (url.rfind("http://", 0) != 0)
        throw ConfigError("value of " + options_.base_url_env + " must start with http://");

    // Split "http://host:port/prefix" into the client target and the path
    // prefix every request is rooted under.
    const std::size_t authority = std::string("http://").size();
    const std::size_t slash = url.find('/', authority);
    if (slash == std::string::npos) {
        scheme_host_ = url;
    } else {
        scheme_host_ = url.substr(0, slash);
        base_path_ = url.substr(slash);
        while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
    }
    api_key_ = env_or_empty(options_.api_key_env);
}

ChatResponse HttpBackend::complete(const ChatRequest& request, int ordinal) {
    nlohmann::json messages = nlohmann::json::array();
    if (!request.system_prompt.empty())
        messages.push_back({{"role", "system"}, {"content", request.system_prompt}});
    messages.push_back({{"role", "user"}, {"content", request.user_prompt}});

    nlohmann::json body{
        {"model", request.model_id},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
        {"top_p", request.top_p},
        {"max_tokens", request.max_tokens},
    };
    // Distinct calls at the same sampling settings still need distinct
    // samples, so the stream position is folded into the seed.
    if (request.seed) body["seed"] = *request.seed + static_cast<std::uint64_t>(ordinal);

    httplib::Client client(scheme_host_);
    client.set_connection_timeout(0, options_.timeout_ms * 1000LL);
    client.set_read_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);
    client.set_write_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    const std::string path = base_path_ + "/chat/completions";
    auto res = client.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw TransientBackendError("chat endpoint transport failure: " +
                                    httplib::to_string(res.error()));
    if (res->status == 429 || res->status >= 500)
        throw TransientBackendError("chat endpoint returned status " +
                                    std::to_string(res->status));
    if (res->status != 200)
        throw GatewayError("chat endpoint returned status " + std::to_string(res->status));

    nlohmann::json payload = nlohmann::json::parse(res->body, nullptr, false);
    if (payload.is_discarded())
        throw GatewayError("chat endpoint returned a non-JSON body");
    if (!payload.contains("choices") || !payload.at("choices").is_array() ||
        payload.at("choices").empty())
        throw GatewayError("chat endpoint response has no choices");

    const auto& first = payload.at("choices").at(0);
    if (!first.contains("message") || !first.at("message").contains("content") ||
        !first.at("message").at("content").is_string())
        throw GatewayError("chat endpoint response has no message content");

    ChatResponse response;
    response.text = first.at("message").at("content").get<std::string>();
    response.model_id = payload.value("model", request.model_id);
    if (payload.contains("usage") && payload.at("usage").is_object()) {
        const auto& usage = payload.at("usage");
        response.prompt_tokens = usage.value("prompt_tokens", 0);
        response.completion_tokens = usage.value("completion_tokens", 0);
    }
    return response;
}

} // namespace ttc
