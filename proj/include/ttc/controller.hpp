#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttc/gateway.hpp"
#include "ttc/prm.hpp"
#include "ttc/prompts.hpp"
#include "ttc/types.hpp"

// ===== controller =====
//
// The decision-making layer around the base model.  Per iteration it can
// produce a plan, pick a tool sequence, pick a compute strategy, generate
// reasoning steps one at a time, run auxiliary tools, and extract the final
// answer.  Control outputs (plan/tools/strategy/answer) decode greedily;
// reasoning steps sample with the configured base decoding.
//
// Malformed control output is never accepted silently: each selector gets
// `max_attempts` total calls (the re-prompt carries a violation report),
// then a deterministic repair, and only then a typed error — or, when
// `fallback` says so, a documented default configuration.

namespace ttc {

struct DecodingParams {
    double temperature = 0.7;
    double top_p = 0.9;
    int max_tokens = 1024;
};

enum class RepairFallback {
    Error,          // exhausting repairs raises the operation's typed error
    DefaultConfig,  // plan/tool/strategy selectors fall back to defaults
};

struct ControllerOptions {
    std::string controller_model_id;   // plan/tool/compute/extract calls
    std::string base_model_id;         // step, auxiliary-tool, solve calls
    DecodingParams base_decoding;      // controller calls are always greedy
    int controller_max_tokens = 512;
    int max_attempts = 2;              // total calls per control operation
    RepairFallback fallback = RepairFallback::Error;
    std::optional<std::uint64_t> seed; // forwarded to backends verbatim
};

// Defaults used by RepairFallback::DefaultConfig.
ToolSequence default_tool_sequence();     // [cot]
ComputePlan default_compute_plan();       // best_of_n(3)
std::string default_plan_text();

// ---------------------------------------------------------------------------
// pure parsing helpers (exposed for tests and fuzzing)
// ---------------------------------------------------------------------------

// First <plan>...</plan> span, trimmed; nullopt when missing or empty.
std::optional<std::string> extract_plan_span(const std::string& text);

// Prompt-facing tool names ("numeric verifier", "self-reflection", ...) to
// ToolKind; normalization folds case and separator characters.
std::optional<ToolKind> map_tool_name(const std::string& name);

// Prompt-facing strategy names ("best of n", "beam search", "lookahead").
std::optional<Strategy> map_strategy_name(const std::string& name);

// Parse a <reasoning>/<action> step response.  Content is the reasoning text
// when present, otherwise the action description.  Nullopt when there is no
// usable action tag or no usable content.
std::optional<Step> parse_step_response(const std::string& text, StepOrigin origin,
                                        int index);

// Content of the last \boxed{...} span (balanced), nullopt when absent.
std::optional<std::string> extract_boxed(const std::string& text);

// {"answer": ...} payload; numbers are rendered canonically.
std::optional<std::string> parse_answer_payload(const std::string& text);

// ---------------------------------------------------------------------------
// controller
// ---------------------------------------------------------------------------

class Controller {
public:
    Controller(Gateway& gateway, const PromptSet& prompts, ControllerOptions options);

    // Produce a plan for `obs` (the problem statement, possibly reframed).
    // Raises PlanningError after repairs unless falling back.
    Plan plan(const std::string& obs, const CallScope& scope);

    // Choose the iteration's tool sequence.  Invalid output triggers one
    // re-prompt carrying the violation report, then deterministic repair,
    // then ToolSelectionError / fallback.
    ToolSequence select_tools(const std::string& obs, const Plan& plan,
                              const CallScope& scope);

    // Choose strategy + parameter.  Out-of-range parameters clamp (flagged);
    // unknown strategies re-prompt, then ComputeSelectionError / fallback.
    ComputePlan select_compute(const std::string& obs, const Plan& plan,
                               const ToolSequence& tools, const CallScope& scope);

    // One reasoning step continuing `history`.  Raises StepGenerationError
    // when the model cannot produce a parseable step within max_attempts.
    Step next_step(const std::string& obs, const std::string& plan_text,
                   ToolKind reasoning_tool, const std::vector<Step>& history,
                   const CallScope& scope);

    // Run one auxiliary tool, yielding exactly one step.  Reframer only
    // before any reasoning exists; the others only after.
    Step run_auxiliary_tool(ToolKind tool, const std::string& problem_statement,
                            const std::vector<Step>& history, const CallScope& scope);

    // Extract the final answer: JSON payload, else last \boxed in the
    // response, else last \boxed in the trajectory.  Nullopt means the
    // caller must mark the trajectory extraction-failed.
    std::optional<std::string> extract_answer(const std::string& problem_statement,
                                              const std::string& plan_text,
                                              const Trajectory& trajectory,
                                              const CallScope& scope);

    // Single-pass JSON-answer solve (no planner, no tools).
    std::string direct_solve(const std::string& problem_statement, const CallScope& scope);

    // Single-pass boxed-answer solution used for best-of-N sampling.
    std::string sample_solution(const std::string& obs, const std::string& plan_text,
                                const CallScope& scope);

    int repairs_applied() const { return repairs_; }
    int fallbacks_taken() const { return fallbacks_; }

private:
    ChatResponse call_control(PromptRole system_role, std::string system_override,
                              const std::string& user, const std::string& purpose,
                              const CallScope& scope);
    ChatResponse call_base(const std::string& system, const std::string& user,
                           const std::string& purpose, const CallScope& scope);

    Gateway& gateway_;
    const PromptSet& prompts_;
    ControllerOptions options_;
    int repairs_ = 0;
    int fallbacks_ = 0;
};

} // namespace ttc
