#include <doctest.h>

#include <sstream>

#include "ttc/errors.hpp"
#include "ttc/gateway.hpp"

using namespace ttc;

namespace {

std::vector<BackendProfile> demo_profiles() {
    return {{"base", 7'000'000'000, 32768, Role::Base},
            {"tiny", 1'000'000'000, 16, Role::Base}};
}

ChatRequest request_for(const std::string& purpose, const std::string& problem,
                        const std::string& user = "hello") {
    ChatRequest r;
    r.model_id = "base";
    r.user_prompt = user;
    r.purpose = purpose;
    r.problem_id = problem;
    return r;
}

// Fails with a transient error a fixed number of times, then succeeds.
class FlakyBackend : public ChatBackend {
public:
    explicit FlakyBackend(int failures) : failures_(failures) {}
    ChatResponse complete(const ChatRequest& request, int) override {
        if (failures_-- > 0) throw TransientBackendError("flaky");
        ChatResponse r;
        r.text = "ok";
        r.model_id = request.model_id;
        return r;
    }
    std::string name() const override { return "flaky"; }

private:
    int failures_;
};

} // namespace

TEST_CASE("token estimation rule") {
    CHECK(estimate_tokens("") == 0);
    CHECK(estimate_tokens("12345678") == 2);   // 8 bytes
    CHECK(estimate_tokens("123456789") == 3);  // 9 bytes
    CHECK(estimate_tokens("a") == 1);
}

TEST_CASE("scripted backend resolution order") {
    ScriptedBackend backend;
    backend.add("plan:prob-1", "the plan");
    backend.add_sequence("step:prob-1", {ScriptEntry{"s0", {}, {}}, ScriptEntry{"s1", {}, {}}});
    backend.add("step:prob-1:5", "exact-five");
    backend.add("prm:*", "prm-any");
    backend.add("*", "fallback");

    ChatRequest req = request_for("plan", "prob-1");
    CHECK(backend.complete(req, 0).text == "the plan");

    req = request_for("step", "prob-1");
    CHECK(backend.complete(req, 0).text == "s0");
    CHECK(backend.complete(req, 1).text == "s1");
    CHECK(backend.complete(req, 3).text == "s1");  // past the end repeats the last
    CHECK(backend.complete(req, 5).text == "exact-five");

    req = request_for("prm", "whatever");
    CHECK(backend.complete(req, 7).text == "prm-any");

    req = request_for("mystery", "prob-9");
    CHECK(backend.complete(req, 0).text == "fallback");
}

TEST_CASE("scripted backend errors without a match") {
    ScriptedBackend backend;
    backend.add("plan:prob-1", "x");
    ChatRequest req = request_for("tools", "prob-1");
    CHECK_THROWS_AS(backend.complete(req, 0), GatewayError);
}

TEST_CASE("scripted backend json round trip") {
    ScriptedBackend backend;
    backend.add("plan:p", ScriptEntry{"body", 12, 34});
    backend.add_sequence("step:p", {ScriptEntry{"a", {}, {}}, ScriptEntry{"b", {}, {}}});

    auto clone = ScriptedBackend::from_json_text(backend.to_json_text());
    ChatRequest req = request_for("plan", "p");
    ChatResponse got = clone->complete(req, 0);
    CHECK(got.text == "body");
    CHECK(got.prompt_tokens == 12);
    CHECK(got.completion_tokens == 34);
    req = request_for("step", "p");
    CHECK(clone->complete(req, 1).text == "b");

    CHECK_THROWS_AS(ScriptedBackend::from_json_text("[1,2]"), GatewayError);
    CHECK_THROWS_AS(ScriptedBackend::from_json_text("not json"), GatewayError);
}

TEST_CASE("gateway records exactly one call per chat") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add("plan:p", "response text");
    Gateway gateway(backend, demo_profiles());
    ComputeLedger ledger;

    ChatResponse resp = gateway.chat(request_for("plan", "p", "user prompt"), ledger);
    CHECK(resp.text == "response text");
    REQUIRE(ledger.size() == 1);
    const CallRecord& rec = ledger.records().front();
    CHECK(rec.model_id == "base");
    CHECK(rec.role == Role::Base);
    CHECK(rec.purpose == "plan");
    CHECK(rec.problem_id == "p");
    CHECK(rec.ordinal == 0);
    // Counts were estimated from byte lengths: ceil(11/4), ceil(13/4).
    CHECK(rec.prompt_tokens == estimate_tokens("user prompt"));
    CHECK(rec.completion_tokens == estimate_tokens("response text"));
}

TEST_CASE("gateway ordinals advance per purpose and problem") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add("*", "x");
    Gateway gateway(backend, demo_profiles());
    ComputeLedger ledger;

    gateway.chat(request_for("step", "p1"), ledger);
    gateway.chat(request_for("step", "p1"), ledger);
    gateway.chat(request_for("step", "p2"), ledger);
    gateway.chat(request_for("plan", "p1"), ledger);

    REQUIRE(ledger.size() == 4);
    CHECK(ledger.records()[0].ordinal == 0);
    CHECK(ledger.records()[1].ordinal == 1);  // same stream
    CHECK(ledger.records()[2].ordinal == 0);  // new problem
    CHECK(ledger.records()[3].ordinal == 0);  // new purpose
}

TEST_CASE("gateway greedy determinism with a single-entry script") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add("plan:p", "stable");
    Gateway gateway(backend, demo_profiles());
    ComputeLedger ledger;

    ChatResponse a = gateway.chat(request_for("plan", "p"), ledger);
    ChatResponse b = gateway.chat(request_for("plan", "p"), ledger);
    CHECK(a.text == b.text);
    CHECK(a.prompt_tokens == b.prompt_tokens);
    CHECK(a.completion_tokens == b.completion_tokens);
}

TEST_CASE("gateway validates request parameters") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add("*", "x");
    Gateway gateway(backend, demo_profiles());
    ComputeLedger ledger;

    ChatRequest bad = request_for("plan", "p");
    bad.model_id = "ghost";
    CHECK_THROWS_AS(gateway.chat(bad, ledger), GatewayError);

    bad = request_for("plan", "p");
    bad.max_tokens = 0;
    CHECK_THROWS_AS(gateway.chat(bad, ledger), GatewayError);

    bad = request_for("plan", "p");
    bad.top_p = 0.0;
    CHECK_THROWS_AS(gateway.chat(bad, ledger), GatewayError);

    bad = request_for("plan", "p");
    bad.temperature = -0.1;
    CHECK_THROWS_AS(gateway.chat(bad, ledger), GatewayError);
    CHECK(ledger.size() == 0);
}

TEST_CASE("gateway rejects prompts beyond the context window") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add("*", "x");
    Gateway gateway(backend, demo_profiles());
    ComputeLedger ledger;

    ChatRequest req = request_for("plan", "p", std::string(100, 'a'));  // ~25 tokens
    req.model_id = "tiny";                                              // 16-token window
    CHECK_THROWS_AS(gateway.chat(req, ledger), ContextOverflowError);
    CHECK(ledger.size() == 0);
}

TEST_CASE("gateway retries transient failures with backoff") {
    Gateway gateway(std::make_shared<FlakyBackend>(2), demo_profiles());
    std::vector<int> sleeps;
    gateway.set_sleeper([&](int ms) { sleeps.push_back(ms); });
    ComputeLedger ledger;

    ChatResponse resp = gateway.chat(request_for("plan", "p"), ledger);
    CHECK(resp.text == "ok");
    REQUIRE(sleeps.size() == 2);
    CHECK(sleeps[0] == 50);
    CHECK(sleeps[1] == 100);  // doubling
    CHECK(ledger.size() == 1);
}

TEST_CASE("gateway gives up after max retries") {
    RetryPolicy retry;
    retry.max_retries = 2;
    Gateway gateway(std::make_shared<FlakyBackend>(10), demo_profiles(), retry);
    gateway.set_sleeper([](int) {});
    ComputeLedger ledger;
    CHECK_THROWS_AS(gateway.chat(request_for("plan", "p"), ledger), TransientBackendError);
    CHECK(ledger.size() == 0);
}

TEST_CASE("recorded sessions replay with identical ledgers") {
    auto backend = std::make_shared<ScriptedBackend>();
    backend->add_sequence("step:p", {ScriptEntry{"first", {}, {}}, ScriptEntry{"second", {}, {}}});
    backend->add("plan:p", "the plan");

    Gateway live(backend, demo_profiles());
    auto recorder = std::make_shared<SessionRecorder>();
    live.set_recorder(recorder);
    ComputeLedger live_ledger;
    live.chat(request_for("plan", "p"), live_ledger);
    live.chat(request_for("step", "p"), live_ledger);
    live.chat(request_for("step", "p"), live_ledger);

    Gateway replay(recorder->to_backend(), demo_profiles());
    ComputeLedger replay_ledger;
    CHECK(replay.chat(request_for("plan", "p"), replay_ledger).text == "the plan");
    CHECK(replay.chat(request_for("step", "p"), replay_ledger).text == "first");
    CHECK(replay.chat(request_for("step", "p"), replay_ledger).text == "second");

    std::ostringstream a, b;
    live_ledger.write_jsonl(a);
    replay_ledger.write_jsonl(b);
    CHECK(a.str() == b.str());
}
