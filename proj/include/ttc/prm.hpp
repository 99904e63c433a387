#pragma once

#include <string>

#include "ttc/gateway.hpp"
#include "ttc/prompts.hpp"
#include "ttc/types.hpp"

// ===== step-transition scoring =====
//
// Scores the validity of each step transition (s_{t-1} -> s_t) in [0, 1]
// using a process-reward endpoint.  The first transition is scored against
// the problem statement itself.  Scoring sees only the two texts — never the
// tool that produced a step — and always decodes greedily, so the same
// transition scores identically every time.

namespace ttc {

// How the scoring endpoint answers.
enum class PrmAdapter {
    VerdictJson,   // {"is correct": bool, "confidence": x} — parsed & clamped
    NativeScalar,  // the response body is the score itself, e.g. "0.87"
};

// Which call the caller is accounting against: a problem id plus the ledger
// fragment the resulting CallRecords belong to.
struct CallScope {
    std::string problem_id;
    ComputeLedger* ledger = nullptr;
};

struct ScorerOptions {
    std::string model_id;
    PrmAdapter adapter = PrmAdapter::VerdictJson;
    int max_tokens = 256;
    int max_attempts = 2;   // total calls per transition before ScoringError
};

class StepScorer {
public:
    StepScorer(Gateway& gateway, const PromptSet& prompts, ScorerOptions options);

    // One transition.  `transition_index` (1-based) only decorates errors.
    StepScore score_transition(const std::string& previous, const std::string& current,
                               const CallScope& scope, int transition_index = 0);

    // Score every transition of a completed trajectory; transition t compares
    // steps[t-1] (or `origin` for t=1) against steps[t].  Returns the scored
    // copy; a failed transition raises ScoringError naming its index.
    Trajectory score_trajectory(Trajectory trajectory, const std::string& origin,
                                const CallScope& scope);

    // Verdict-vs-confidence disagreements seen so far (verdict true with
    // confidence < 0.5 or false with > 0.5).  They score as the clamped
    // confidence; this counter just makes them visible.
    int inconsistencies() const { return inconsistencies_; }

private:
    StepScore parse_verdict(const std::string& text) const;

    Gateway& gateway_;
    const PromptSet& prompts_;
    ScorerOptions options_;
    int inconsistencies_ = 0;
};

} // namespace ttc
