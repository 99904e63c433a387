#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttc/ledger.hpp"

// ===== model gateway =====
//
// Single choke point for talking to models.  Callers build a ChatRequest,
// the gateway routes it to a backend, fills in token counts, retries
// transient transport failures, and writes exactly one CallRecord into the
// ledger supplied by the caller.  Two backends ship: an HTTP client speaking
// the common chat-completions wire protocol (see http_backend.hpp) and a
// scripted backend that replays canned responses for tests and demos.

namespace ttc {

// ceil(bytes / 4) — the byte-length proxy used whenever a backend does not
// report token usage.  Empty text estimates to zero.
int estimate_tokens(const std::string& text);

struct ChatRequest {
    std::string model_id;
    std::string system_prompt;
    std::string user_prompt;
    double temperature = 0.0;
    double top_p = 1.0;                 // in (0, 1]
    int max_tokens = 1024;              // > 0
    std::optional<std::uint64_t> seed;

    // Routing & accounting metadata.  `purpose` names the call site
    // ("plan", "tools", "compute", "step", "sample", "prm", "extract",
    // "direct", "reframe", "verify", "numeric_verify", "summarize");
    // `problem_id` scopes the call-ordinal stream and the ledger row.
    std::string purpose;
    std::string problem_id;
};

struct ChatResponse {
    std::string text;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    std::string model_id;
};

// Thrown by backends for failures worth retrying (timeouts, 429/5xx).
class TransientBackendError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

// A backend resolves one request to one response.  `ordinal` is the 0-based
// position of this call within its (purpose, problem_id) stream, assigned by
// the gateway; deterministic backends key on it.
class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    virtual ChatResponse complete(const ChatRequest& request, int ordinal) = 0;
    virtual std::string name() const = 0;
};

// ---------------------------------------------------------------------------
// scripted backend
// ---------------------------------------------------------------------------

// One canned response; token counts are optional (estimated when absent) so
// recorded real sessions can replay with their exact original usage numbers.
struct ScriptEntry {
    std::string text;
    std::optional<int> prompt_tokens;
    std::optional<int> completion_tokens;
};

// Deterministic canned-response backend.  Resolution for a request with key
// parts (purpose, problem, ordinal) tries, in order:
//   1. "purpose:problem:ordinal"   exact entry
//   2. "purpose:problem"           a single entry, or a list indexed by
//                                  ordinal (past-the-end repeats the last)
//   3. "purpose:*"                 same forms, problem-independent
//   4. "*"                         global fallback
// No match raises GatewayError.  Given the same key parts the same response
// always comes back, so replays are bit-for-bit reproducible.
class ScriptedBackend : public ChatBackend {
public:
    using Sequence = std::vector<ScriptEntry>;

    void add(const std::string& key, std::string text);
    void add(const std::string& key, ScriptEntry entry);
    void add_sequence(const std::string& key, Sequence seq);
    void append(const std::string& key, std::string text);   // grow a sequence
    void append(const std::string& key, ScriptEntry entry);

    // Load/serialize the JSON script form: values are a string, an object
    // {"text": ..., "prompt_tokens": ..., "completion_tokens": ...}, or a
    // list of either.
    static std::shared_ptr<ScriptedBackend> from_json_text(const std::string& text);
    static std::shared_ptr<ScriptedBackend> from_json_file(const std::string& path);
    std::string to_json_text() const;

    ChatResponse complete(const ChatRequest& request, int ordinal) override;
    std::string name() const override { return "scripted"; }

private:
    const Sequence* find(const std::string& key) const;
    std::map<std::string, Sequence> entries_;
};

// ---------------------------------------------------------------------------
// session recording
// ---------------------------------------------------------------------------

// Captures every (key, response) pair flowing through a gateway so a live run
// can later be replayed through a ScriptedBackend, reproducing the ledger
// bit-for-bit.  Append order within a key equals call-ordinal order.
class SessionRecorder {
public:
    void note(const std::string& purpose, const std::string& problem_id,
              const ChatResponse& response);
    std::shared_ptr<ScriptedBackend> to_backend() const;
    std::string to_json_text() const;

private:
    std::map<std::string, ScriptedBackend::Sequence> by_key_;
    mutable std::mutex mu_;
};

// ---------------------------------------------------------------------------
// gateway
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_retries = 3;                // retries after the first attempt
    int initial_backoff_ms = 50;        // doubles per retry; 0 in tests
};

class Gateway {
public:
    Gateway(std::shared_ptr<ChatBackend> backend, std::vector<BackendProfile> profiles,
            RetryPolicy retry = {});

    // Validates the request, checks the estimated prompt against the model's
    // context window, dispatches with retries, fills missing token counts by
    // estimate, and appends exactly one CallRecord to `ledger`.
    ChatResponse chat(const ChatRequest& request, ComputeLedger& ledger);

    const BackendProfile& profile(const std::string& model_id) const;
    const std::vector<BackendProfile>& profiles() const { return profiles_; }

    void set_recorder(std::shared_ptr<SessionRecorder> recorder) { recorder_ = std::move(recorder); }

    // Sleep hook so tests can observe/skip backoff waits.
    void set_sleeper(std::function<void(int)> sleep_ms) { sleep_ms_ = std::move(sleep_ms); }

private:
    int next_ordinal(const std::string& purpose, const std::string& problem_id);

    std::shared_ptr<ChatBackend> backend_;
    std::vector<BackendProfile> profiles_;
    std::map<std::string, BackendProfile> by_id_;
    RetryPolicy retry_;
    std::shared_ptr<SessionRecorder> recorder_;
    std::function<void(int)> sleep_ms_;
    std::map<std::string, int> ordinals_;
    std::mutex mu_;
};

} // namespace ttc
