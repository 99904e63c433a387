#pragma once

#include <memory>

#include "ttc/gateway.hpp"
#include "ttc/harness.hpp"
#include "ttc/types.hpp"

// ===== scripted demo fixture =====
//
// A fully scripted end-to-end scenario contrasting a single-pass direct
// answer with the adaptive pipeline on the same problem.  The direct pass
// confidently returns a wrong answer; the adaptive run plans, picks
// chain-of-thought plus a numeric check, explores with lookahead, and the
// reward-based selection lands on the correct answer.  Everything is canned,
// so the demo runs offline and always produces the same numbers.

namespace ttc::demo {

// A two-equation logarithm problem whose reference answer is 25.
Problem demo_problem();

// Canned responses for both modes over demo_problem().
std::shared_ptr<ScriptedBackend> demo_backend();

// Ready-to-run config for the given mode (Direct or DynamicPrmSel) wired
// for the demo models; pair with demo_backend() and demo_problem().
RunConfig demo_config(RunMode mode);

// Expected headline numbers, kept next to the script that produces them.
inline constexpr const char* kDirectAnswer = "64";     // wrong
inline constexpr const char* kAdaptiveAnswer = "25";   // right
inline constexpr double kAdaptiveTopReward = 0.953125; // dyadic, exact
inline constexpr int kAdaptiveSelectedIteration = 1;

} // namespace ttc::demo
