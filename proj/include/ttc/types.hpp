#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttc/errors.hpp"

// ===== core value types for step-wise reasoning =====
//
// A solution attempt is a Trajectory: an ordered list of Steps plus one
// validity score per step transition.  Step 0 is implicit — it is the problem
// statement itself — so a trajectory with T steps has exactly T scored
// transitions.  Everything here is a plain value type: copy it, share const
// references across threads, never mutate after construction.

namespace ttc {

// Tolerance used when cross-checking a stored reward against the mean of its
// trajectory's transition scores.
inline constexpr double kRewardTolerance = 1e-12;

// ---------------------------------------------------------------------------
// tools & strategies
// ---------------------------------------------------------------------------

// The closed set of tools the controller may schedule for one iteration.
// CoT and SelfReflection are the two reasoning tools (exactly one per
// sequence); the rest are auxiliary and only ever add steps to a trajectory.
enum class ToolKind {
    CoT,
    SelfReflection,
    Verifier,
    NumericVerifier,
    Reframer,
    Summarizer,
};

// Where a step came from: one of the tools above, or a direct single-pass
// solve that bypasses the controller entirely.
enum class StepOrigin {
    CoT,
    SelfReflection,
    Verifier,
    NumericVerifier,
    Reframer,
    Summarizer,
    DirectSolve,
};

// Test-time compute strategies for growing trajectories.
enum class Strategy {
    BestOfN,
    BeamSearch,
    Lookahead,
};

std::string to_string(ToolKind k);
std::string to_string(StepOrigin o);
std::string to_string(Strategy s);

// Serialization names ("cot", "self_reflection", ...) back to enums.
std::optional<ToolKind> tool_from_string(const std::string& name);
std::optional<Strategy> strategy_from_string(const std::string& name);

StepOrigin origin_of(ToolKind k);

// ---------------------------------------------------------------------------
// problem & plan
// ---------------------------------------------------------------------------

struct Problem {
    std::string id;                            // unique within a dataset
    std::string statement;                     // non-empty
    std::optional<std::string> reference_answer;
    std::optional<int> level;                  // difficulty 1..5 when present
    std::optional<std::string> subject;
};

// High-level solution approach produced before reasoning starts.  The text is
// what was inside the <plan> tags, never the raw tagged response.
struct Plan {
    std::string text;                          // non-empty after extraction
};

// ---------------------------------------------------------------------------
// tool sequences
// ---------------------------------------------------------------------------

// Validated, ordered tool list for one iteration.  Construct through
// validate_tool_sequence / repair_tool_sequence; the invariants are:
//   * length 1..3
//   * exactly one reasoning tool (CoT xor SelfReflection)
//   * Reframer, when present, is first
//   * Summarizer, when present, is last
//   * NumericVerifier, when present, immediately follows the reasoning tool
//   * Verifier, when present, has NumericVerifier somewhere before it
struct ToolSequence {
    std::vector<ToolKind> tools;

    bool contains(ToolKind k) const;
    ToolKind reasoning_tool() const;           // the CoT-or-SelfReflection member
    std::string label() const;                 // "cot+numeric_verifier" style tag
};

// Outcome of validating a raw tool list.  `violations` names every broken
// rule (it is never silently truncated to the first failure).
struct ToolSequenceCheck {
    bool ok = false;
    std::vector<std::string> violations;
    std::optional<ToolSequence> value;         // set iff ok
};

ToolSequenceCheck validate_tool_sequence(const std::vector<ToolKind>& tools);

// Deterministic canonicalization used after re-prompting has failed:
// de-duplicate, drop SelfReflection when both reasoning tools are present,
// drop Verifier when NumericVerifier is absent, reorder to the mandated slot
// order, truncate to three.  Returns nullopt when no valid sequence can be
// recovered (e.g. no reasoning tool at all).
std::optional<ToolSequence> repair_tool_sequence(const std::vector<ToolKind>& tools);

// ---------------------------------------------------------------------------
// compute plans
// ---------------------------------------------------------------------------

// A strategy plus its exploration parameter (N for best-of-N, beam width k,
// lookahead depth d).  `clamped` records that a controller-proposed parameter
// was pulled back into the strategy's admissible range.
struct ComputePlan {
    Strategy strategy = Strategy::BestOfN;
    int param = 1;                             // >= 1
    bool clamped = false;

    std::string label() const;                 // "best_of_n(3)" style tag
};

// Admissible controller ranges per strategy; values outside are clamped.
int controller_param_min(Strategy s);          // BoN 3, Beam 3, Lookahead 2
int controller_param_max(Strategy s);          // BoN 5, Beam 6, Lookahead 4

// Clamp a proposed parameter into the controller range, flagging if moved.
ComputePlan make_controller_plan(Strategy s, int requested_param);

// Fixed-sweep plans admit only parameters in {1, 5, 10}; throws ConfigError.
ComputePlan make_grid_plan(Strategy s, int param);

// ---------------------------------------------------------------------------
// steps, scores, trajectories
// ---------------------------------------------------------------------------

struct Step {
    int index = 0;                             // 1-based position in trajectory
    StepOrigin origin = StepOrigin::CoT;
    std::string content;                       // non-empty; what gets scored
    std::optional<std::string> reasoning_text; // raw <reasoning> block, if any
    std::optional<std::string> action_label;   // e.g. "PerformComputation"
};

// Labels that end a trajectory once a step carries them.
bool terminal_intent(const Step& s);

// Validity score for one step transition, as judged by the step verifier.
struct StepScore {
    double value = 0.0;                        // in [0, 1] after clamping
    std::optional<bool> verdict;               // the verifier's boolean, if any
    bool clamped = false;                      // true when value was clipped
    std::string raw_response;                  // verbatim verifier output
};

struct Trajectory {
    std::vector<Step> steps;
    std::vector<StepScore> scores;             // empty (unscored) or 1:1 with steps
    bool terminal = false;
    std::optional<std::string> answer;         // extracted final answer
    bool extraction_failed = false;

    bool scored() const { return !steps.empty() && scores.size() == steps.size(); }
    std::string last_content() const;          // "" when empty
};

// Throws Error when the shape invariants above do not hold.
void validate_trajectory(const Trajectory& t);

// Mean step validity over all transitions:  R(tau) = (1/T) * sum_t v_t.
// Accumulates in long double so the result is stable under permutation.
// Throws Error on an unscored or empty trajectory.
double mean_reward(const Trajectory& t);

// Split a single-pass solution text into steps at blank-line boundaries.
// Whitespace-only text yields no segments.
std::vector<std::string> segment_reasoning(const std::string& text);

// ---------------------------------------------------------------------------
// iteration results
// ---------------------------------------------------------------------------

// One completed iteration: the trajectory the strategy settled on, its mean
// reward, and the configuration that produced it.  Direct (controller-free)
// iterations carry no tool sequence or compute plan.
struct IterationResult {
    int iteration_index = 0;                   // 1-based
    Trajectory trajectory;
    double reward = 0.0;
    std::optional<ToolSequence> tools;
    std::optional<ComputePlan> compute;
};

// Factory enforcing |reward - mean_reward(trajectory)| <= kRewardTolerance
// for scored trajectories.  Unscored trajectories carry reward 0.
IterationResult make_iteration_result(int index,
                                      Trajectory trajectory,
                                      std::optional<ToolSequence> tools,
                                      std::optional<ComputePlan> compute);

} // namespace ttc
