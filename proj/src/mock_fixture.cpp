#include "ttc/mock_fixture.hpp"

namespace ttc::demo {

Problem demo_problem() {
    Problem p;
    p.id = "log-xy";
    p.statement =
        "Let x and y be real numbers, both greater than 1, such that "
        "log_x(y^x) = 10 and log_y(x^(4y)) = 10. Find xy.";
    p.reference_answer = "25";
    p.level = 5;
    p.subject = "Intermediate Algebra";
    return p;
}

std::shared_ptr<ScriptedBackend> demo_backend() {
    auto backend = std::make_shared<ScriptedBackend>();

    // Single-pass mode: a fluent, confidently wrong answer.
    backend->add("direct:log-xy", R"({"answer": "64"})");

    // Adaptive mode: plan, tool choice, strategy choice.
    backend->add("plan:log-xy",
                 "<plan>Rewrite both logarithmic equations with the power rule, substitute "
                 "t = log_x(y) to couple them, and solve the resulting system for the "
                 "product xy.</plan>");
    backend->add("tools:log-xy", R"({"tools": ["cot", "numeric verifier"]})");
    backend->add("compute:log-xy", R"({"strategy": "lookahead", "param": 3})");

    // Reasoning steps.  Lookahead at depth 3 with branching 3 proposes each
    // level three times; identical proposals collapse, so the exploration
    // tree degenerates into one chain and iteration one consumes exactly
    // eighteen entries.  Later iterations re-read the trailing terminal
    // step, producing short low-reward trajectories.
    const std::string s1 =
        "<reasoning>Apply the power rule to both equations: log_x(y^x) = x*log_x(y) = 10 "
        "and log_y(x^(4y)) = 4y*log_y(x) = 10.</reasoning>\n"
        "<action>PerformComputation: rewrite both equations using the power rule</action>";
    const std::string s2 =
        "<reasoning>Let t = log_x(y). Then log_y(x) = 1/t, so the system becomes "
        "x*t = 10 and 4y/t = 10.</reasoning>\n"
        "<action>PerformComputation: substitute t = log_x(y) and simplify</action>";
    const std::string s3 =
        "<reasoning>Multiplying the two relations gives (x*t)*(4y/t) = 4xy = 100, "
        "so xy = \\boxed{25}.</reasoning>\n"
        "<action>BoxFinalAnswer: xy = 25</action>";
    ScriptedBackend::Sequence steps;
    for (const std::string* block : {&s1, &s2, &s3, &s2, &s3, &s3})
        for (int i = 0; i < 3; ++i) steps.push_back(ScriptEntry{*block, {}, {}});
    backend->add_sequence("step:log-xy", std::move(steps));

    // Numeric check appended after the reasoning settles.
    backend->add("numeric_verify:log-xy",
                 "Numeric check: with xy = 25 the product of the left-hand sides is "
                 "4xy = 100, matching the product of the right-hand sides 10*10 = 100. "
                 "The answer xy = 25 is consistent.");

    // Transition scores: iteration one earns (1 + 0.9375 + 0.875 + 1)/4 =
    // 0.953125; every later transition scores a flat 0.5.
    backend->add_sequence(
        "prm:log-xy",
        {ScriptEntry{R"({"is correct": true, "confidence": 1.0})", {}, {}},
         ScriptEntry{R"({"is correct": true, "confidence": 0.9375})", {}, {}},
         ScriptEntry{R"({"is correct": true, "confidence": 0.875})", {}, {}},
         ScriptEntry{R"({"is correct": true, "confidence": 1.0})", {}, {}},
         ScriptEntry{R"({"is correct": true, "confidence": 0.5})", {}, {}}});

    backend->add("extract:log-xy", R"({"answer": "25"})");
    return backend;
}

RunConfig demo_config(RunMode mode) {
    RunConfig c;
    c.mode = mode;
    c.label = mode == RunMode::Direct ? "demo-direct" : "demo-adaptive";
    c.iterations = 10;
    c.base = {"demo-base-7b", 7'000'000'000, 32768};
    c.controller = {"demo-controller-72b", 72'000'000'000, 32768};
    c.prm = {"demo-prm-7b", 7'000'000'000, 16384};
    return c;
}

} // namespace ttc::demo
