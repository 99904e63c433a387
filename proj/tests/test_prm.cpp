#include <doctest.h>

#include <memory>

#include "ttc/errors.hpp"
#include "ttc/prm.hpp"

using namespace ttc;

namespace {

std::vector<BackendProfile> profiles() {
    return {{"prm", 7'000'000'000, 16384, Role::Prm}};
}

struct Rig {
    std::shared_ptr<ScriptedBackend> backend = std::make_shared<ScriptedBackend>();
    std::unique_ptr<Gateway> gateway;
    PromptSet prompts = PromptSet::defaults();
    ComputeLedger ledger;

    Rig() { gateway = std::make_unique<Gateway>(backend, profiles()); }

    StepScorer scorer(PrmAdapter adapter = PrmAdapter::VerdictJson) {
        ScorerOptions options;
        options.model_id = "prm";
        options.adapter = adapter;
        return StepScorer(*gateway, prompts, options);
    }

    CallScope scope() { return CallScope{"p1", &ledger}; }
};

// Captures PRM prompts so tests can assert what the judge actually sees.
class CapturingBackend : public ChatBackend {
public:
    explicit CapturingBackend(std::string reply) : reply_(std::move(reply)) {}
    ChatResponse complete(const ChatRequest& request, int) override {
        prompts.push_back(request.user_prompt);
        temperatures.push_back(request.temperature);
        ChatResponse r;
        r.text = reply_;
        r.model_id = request.model_id;
        return r;
    }
    std::string name() const override { return "capture"; }

    std::vector<std::string> prompts;
    std::vector<double> temperatures;

private:
    std::string reply_;
};

} // namespace

TEST_CASE("verdict parsing maps confidence to the score") {
    Rig rig;
    rig.backend->add("prm:p1", R"({"is correct": true, "confidence": 0.95})");
    StepScore s = rig.scorer().score_transition("prev", "cur", rig.scope());
    CHECK(s.value == 0.95);
    CHECK(s.verdict == true);
    CHECK_FALSE(s.clamped);
}

TEST_CASE("verdict anchor points map exactly") {
    for (const char* conf : {"0.0", "0.5", "1.0"}) {
        Rig rig;
        rig.backend->add("prm:p1",
                         std::string(R"({"is correct": true, "confidence": )") + conf + "}");
        StepScore s = rig.scorer().score_transition("a", "b", rig.scope());
        CHECK(s.value == std::stod(conf));
    }
}

TEST_CASE("negative verdict scores zero") {
    Rig rig;
    rig.backend->add("prm:p1", R"({"is correct": false, "confidence": 0.0})");
    StepScore s = rig.scorer().score_transition("prev", "cur", rig.scope());
    CHECK(s.value == 0.0);
    CHECK(s.verdict == false);
}

TEST_CASE("out-of-range confidence clamps with a flag") {
    Rig rig;
    rig.backend->add("prm:p1", R"({"is correct": true, "confidence": 1.4})");
    StepScore s = rig.scorer().score_transition("prev", "cur", rig.scope());
    CHECK(s.value == 1.0);
    CHECK(s.clamped);
}

TEST_CASE("fenced or prose-wrapped verdicts still parse") {
    Rig rig;
    rig.backend->add("prm:p1",
                     "Here is my assessment:\n```json\n"
                     R"({"is correct": true, "confidence": 0.75})"
                     "\n```\nHope that helps!");
    StepScore s = rig.scorer().score_transition("prev", "cur", rig.scope());
    CHECK(s.value == 0.75);
}

TEST_CASE("underscore key variant is accepted") {
    Rig rig;
    rig.backend->add("prm:p1", R"({"is_correct": true, "confidence": 0.6})");
    StepScore s = rig.scorer().score_transition("prev", "cur", rig.scope());
    CHECK(s.value == 0.6);
    CHECK(s.verdict == true);
}

TEST_CASE("malformed verdicts retry once then raise with the raw text") {
    Rig rig;
    rig.backend->add_sequence("prm:p1", {ScriptEntry{"gibberish one", {}, {}},
                                         ScriptEntry{"gibberish two", {}, {}}});
    StepScorer scorer = rig.scorer();
    CHECK_THROWS_WITH_AS(scorer.score_transition("prev", "cur", rig.scope(), 2),
                         doctest::Contains("gibberish two"), ScoringError);
    CHECK(rig.ledger.size() == 2);  // both attempts hit the gateway
}

TEST_CASE("a malformed first attempt recovers on the retry") {
    Rig rig;
    rig.backend->add_sequence(
        "prm:p1", {ScriptEntry{"not json", {}, {}},
                   ScriptEntry{R"({"is correct": true, "confidence": 0.8})", {}, {}}});
    StepScore s = rig.scorer().score_transition("prev", "cur", rig.scope());
    CHECK(s.value == 0.8);
    CHECK(rig.ledger.size() == 2);
}

TEST_CASE("native scalar adapter reads the body as the score") {
    Rig rig;
    rig.backend->add("prm:p1", "0.87\n");
    StepScore s = rig.scorer(PrmAdapter::NativeScalar).score_transition("prev", "cur", rig.scope());
    CHECK(s.value == 0.87);

    Rig bad;
    bad.backend->add("prm:p1", "almost 0.9");
    StepScorer scorer = bad.scorer(PrmAdapter::NativeScalar);
    CHECK_THROWS_AS(scorer.score_transition("prev", "cur", bad.scope()), ScoringError);
}

TEST_CASE("verdict-confidence inconsistencies are counted, not rejected") {
    Rig rig;
    rig.backend->add("prm:p1", R"({"is correct": true, "confidence": 0.3})");
    StepScorer scorer = rig.scorer();
    StepScore s = scorer.score_transition("prev", "cur", rig.scope());
    CHECK(s.value == 0.3);
    CHECK(scorer.inconsistencies() == 1);
}

TEST_CASE("trajectory scoring walks transitions in order") {
    Rig rig;
    rig.backend->add_sequence(
        "prm:p1", {ScriptEntry{R"({"is correct": true, "confidence": 0.5})", {}, {}},
                   ScriptEntry{R"({"is correct": true, "confidence": 1.0})", {}, {}}});

    Trajectory t;
    t.steps.push_back(Step{1, StepOrigin::CoT, "first", {}, {}});
    t.steps.push_back(Step{2, StepOrigin::CoT, "second", {}, {}});
    t.terminal = true;

    Trajectory scored = rig.scorer().score_trajectory(t, "the problem", rig.scope());
    REQUIRE(scored.scores.size() == 2);
    CHECK(scored.scores[0].value == 0.5);
    CHECK(scored.scores[1].value == 1.0);
    CHECK(mean_reward(scored) == 0.75);
}

TEST_CASE("single-step trajectory scores against the origin") {
    Rig rig;
    rig.backend->add("prm:p1", R"({"is correct": true, "confidence": 1.0})");
    Trajectory t;
    t.steps.push_back(Step{1, StepOrigin::CoT, "only step", {}, {}});
    t.terminal = true;
    Trajectory scored = rig.scorer().score_trajectory(t, "origin text", rig.scope());
    CHECK(mean_reward(scored) == 1.0);
}

TEST_CASE("a failing middle transition names its index") {
    Rig rig;
    // Transition 1 parses; transitions for index 2 are garbage twice.
    rig.backend->add_sequence(
        "prm:p1", {ScriptEntry{R"({"is correct": true, "confidence": 1.0})", {}, {}},
                   ScriptEntry{"??", {}, {}}, ScriptEntry{"??", {}, {}}});
    Trajectory t;
    t.steps.push_back(Step{1, StepOrigin::CoT, "a", {}, {}});
    t.steps.push_back(Step{2, StepOrigin::CoT, "b", {}, {}});
    t.steps.push_back(Step{3, StepOrigin::CoT, "c", {}, {}});
    StepScorer scorer = rig.scorer();
    try {
        scorer.score_trajectory(t, "origin", rig.scope());
        FAIL("expected a scoring error");
    } catch (const ScoringError& e) {
        CHECK(e.transition_index == 2);
    }
}

TEST_CASE("the judge sees only the two texts, never tool identity") {
    auto capture = std::make_shared<CapturingBackend>(R"({"is correct": true, "confidence": 1.0})");
    Gateway gateway(capture, profiles());
    PromptSet prompts = PromptSet::defaults();
    ScorerOptions options;
    options.model_id = "prm";
    StepScorer scorer(gateway, prompts, options);
    ComputeLedger ledger;
    CallScope scope{"p1", &ledger};

    scorer.score_transition("prev text", "cur text", scope);
    REQUIRE(capture->prompts.size() == 1);
    CHECK(capture->prompts[0].find("prev text") != std::string::npos);
    CHECK(capture->prompts[0].find("cur text") != std::string::npos);
    // No tool names leak into the judgement prompt.
    for (const char* name : {"cot", "self_reflection", "verifier", "reframer", "summarizer"})
        CHECK(capture->prompts[0].find(name) == std::string::npos);
    // Scoring decodes greedily.
    CHECK(capture->temperatures[0] == 0.0);

    // Two steps differing only in origin produce byte-identical prompts.
    Trajectory a, b;
    a.steps.push_back(Step{1, StepOrigin::CoT, "same content", {}, {}});
    b.steps.push_back(Step{1, StepOrigin::SelfReflection, "same content", {}, {}});
    a.terminal = b.terminal = true;
    scorer.score_trajectory(a, "origin", scope);
    scorer.score_trajectory(b, "origin", scope);
    REQUIRE(capture->prompts.size() == 3);
    CHECK(capture->prompts[1] == capture->prompts[2]);
}
