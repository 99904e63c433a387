#include "ttc/gateway.hpp"

#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace ttc {

using nlohmann::json;

int estimate_tokens(const std::string& text) {
    if (text.empty()) return 0;
    return static_cast<int>((text.size() + 3) / 4);
}

// ===== scripted backend =====

void ScriptedBackend::add(const std::string& key, std::string text) {
    add(key, ScriptEntry{std::move(text), std::nullopt, std::nullopt});
}

void ScriptedBackend::add(const std::string& key, ScriptEntry entry) {
    entries_[key] = Sequence{std::move(entry)};
}

void ScriptedBackend::add_sequence(const std::string& key, Sequence seq) {
    entries_[key] = std::move(seq);
}

void ScriptedBackend::append(const std::string& key, std::string text) {
    append(key, ScriptEntry{std::move(text), std::nullopt, std::nullopt});
}

void ScriptedBackend::append(const std::string& key, ScriptEntry entry) {
    entries_[key].push_back(std::move(entry));
}

const ScriptedBackend::Sequence* ScriptedBackend::find(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end() || it->second.empty()) return nullptr;
    return &it->second;
}

ChatResponse ScriptedBackend::complete(const ChatRequest& request, int ordinal) {
    const std::string purpose = request.purpose.empty() ? "*" : request.purpose;
    const std::string scoped = purpose + ":" + request.problem_id;

    const Sequence* seq = nullptr;
    std::size_t index = 0;

    if (const Sequence* exact = find(scoped + ":" + std::to_string(ordinal))) {
        seq = exact;
        index = 0;
    } else if (const Sequence* by_problem = find(scoped)) {
        seq = by_problem;
        index = static_cast<std::size_t>(ordinal);
    } else if (const Sequence* by_purpose = find(purpose + ":*")) {
        seq = by_purpose;
        index = static_cast<std::size_t>(ordinal);
    } else if (const Sequence* any = find("*")) {
        seq = any;
        index = static_cast<std::size_t>(ordinal);
    }
    if (!seq)
        throw GatewayError("no scripted response for key '" + scoped + "' (ordinal " +
                           std::to_string(ordinal) + ")");
    if (index >= seq->size()) index = seq->size() - 1;  // repeat the last entry

    const ScriptEntry& entry = (*seq)[index];
    ChatResponse resp;
    resp.text = entry.text;
    resp.model_id = request.model_id;
    resp.prompt_tokens = entry.prompt_tokens.value_or(0);
    resp.completion_tokens = entry.completion_tokens.value_or(0);
    return resp;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json_text(const std::string& text) {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw GatewayError("script is not a JSON object");
    auto backend = std::make_shared<ScriptedBackend>();
    auto parse_entry = [](const json& v) -> ScriptEntry {
        if (v.is_string()) return ScriptEntry{v.get<std::string>(), std::nullopt, std::nullopt};
        if (v.is_object()) {
            ScriptEntry e;
            e.text = v.at("text").get<std::string>();
            if (v.contains("prompt_tokens")) e.prompt_tokens = v["prompt_tokens"].get<int>();
            if (v.contains("completion_tokens"))
                e.completion_tokens = v["completion_tokens"].get<int>();
            return e;
        }
        throw GatewayError("script entries must be strings or objects");
    };
    for (auto it = j.begin(); it != j.end(); ++it) {
        const json& v = it.value();
        if (v.is_array()) {
            Sequence seq;
            for (const json& item : v) seq.push_back(parse_entry(item));
            backend->add_sequence(it.key(), std::move(seq));
        } else {
            backend->add(it.key(), parse_entry(v));
        }
    }
    return backend;
}

std::shared_ptr<ScriptedBackend> ScriptedBackend::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GatewayError("cannot open script file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

std::string ScriptedBackend::to_json_text() const {
    json j = json::object();
    for (const auto& [key, seq] : entries_) {
        json arr = json::array();
        for (const ScriptEntry& e : seq) {
            if (e.prompt_tokens || e.completion_tokens) {
                json obj{{"text", e.text}};
                if (e.prompt_tokens) obj["prompt_tokens"] = *e.prompt_tokens;
                if (e.completion_tokens) obj["completion_tokens"] = *e.completion_tokens;
                arr.push_back(obj);
            } else {
                arr.push_back(e.text);
            }
        }
        j[key] = arr;
    }
    return j.dump(2);
}

// ===== session recorder =====

void SessionRecorder::note(const std::string& purpose, const std::string& problem_id,
                           const ChatResponse& response) {
    std::lock_guard<std::mutex> lock(mu_);
    by_key_[purpose + ":" + problem_id].push_back(
        ScriptEntry{response.text, response.prompt_tokens, response.completion_tokens});
}

std::shared_ptr<ScriptedBackend> SessionRecorder::to_backend() const {
    std::lock_guard<std::mutex> lock(mu_);
    auto backend = std::make_shared<ScriptedBackend>();
    for (const auto& [key, seq] : by_key_) backend->add_sequence(key, seq);
    return backend;
}

std::string SessionRecorder::to_json_text() const {
    return to_backend()->to_json_text();
}

// ===== gateway =====

Gateway::Gateway(std::shared_ptr<ChatBackend> backend, std::vector<BackendProfile> profiles,
                 RetryPolicy retry)
    : backend_(std::move(backend)), profiles_(std::move(profiles)), retry_(retry) {
    if (!backend_) throw GatewayError("gateway needs a backend");
    for (const BackendProfile& p : profiles_) {
        if (p.model_id.empty() || p.param_count <= 0 || p.context_length <= 0)
            throw GatewayError("invalid backend profile" +
                               (p.model_id.empty() ? "" : " for " + p.model_id));
        if (!by_id_.emplace(p.model_id, p).second)
            throw GatewayError("duplicate backend profile for " + p.model_id);
    }
    sleep_ms_ = [](int ms) {
        if (ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(ms));
    };
}

const BackendProfile& Gateway::profile(const std::string& model_id) const {
    auto it = by_id_.find(model_id);
    if (it == by_id_.end()) throw GatewayError("model " + model_id + " is not registered");
    return it->second;
}

int Gateway::next_ordinal(const std::string& purpose, const std::string& problem_id) {
    std::lock_guard<std::mutex> lock(mu_);
    return ordinals_[purpose + ":" + problem_id]++;
}

ChatResponse Gateway::chat(const ChatRequest& request, ComputeLedger& ledger) {
    const BackendProfile& prof = profile(request.model_id);
    if (request.max_tokens <= 0) throw GatewayError("max_tokens must be positive");
    if (request.top_p <= 0.0 || request.top_p > 1.0)
        throw GatewayError("top_p must be in (0, 1]");
    if (request.temperature < 0.0) throw GatewayError("temperature must be non-negative");

    const int prompt_estimate =
        estimate_tokens(request.system_prompt) + estimate_tokens(request.user_prompt);
    if (prompt_estimate > prof.context_length)
        throw ContextOverflowError("prompt (~" + std::to_string(prompt_estimate) +
                                   " tokens) exceeds context window of " + request.model_id +
                                   " (" + std::to_string(prof.context_length) + ")");

    const int ordinal = next_ordinal(request.purpose, request.problem_id);

    ChatResponse resp;
    int backoff = retry_.initial_backoff_ms;
    for (int attempt = 0;; ++attempt) {
        try {
            resp = backend_->complete(request, ordinal);
            break;
        } catch (const TransientBackendError&) {
            if (attempt >= retry_.max_retries) throw;
            sleep_ms_(backoff);
            backoff *= 2;
        }
    }

    if (resp.model_id.empty()) resp.model_id = request.model_id;
    if (resp.prompt_tokens <= 0) resp.prompt_tokens = prompt_estimate;
    if (resp.completion_tokens <= 0) resp.completion_tokens = estimate_tokens(resp.text);

    if (recorder_) recorder_->note(request.purpose, request.problem_id, resp);

    CallRecord rec;
    rec.model_id = request.model_id;
    rec.role = prof.role;
    rec.prompt_tokens = resp.prompt_tokens;
    rec.completion_tokens = resp.completion_tokens;
    rec.forward_count = 1;
    rec.problem_id = request.problem_id;
    rec.purpose = request.purpose;
    rec.ordinal = ordinal;
    ledger.record(std::move(rec));

    return resp;
}

} // namespace ttc
