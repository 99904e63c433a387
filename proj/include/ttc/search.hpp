#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttc/types.hpp"

// ===== search strategies =====
//
// Three ways to spend generation budget inside one iteration:
//
//   best_of_n    n independent complete candidates, scored after completion,
//                best mean wins.  No prefix is ever pruned.
//   beam_search  prefixes expand in lockstep at each step boundary; the top-k
//                by accumulated mean validity survive; finished trajectories
//                leave the beam and compete at the final ranking.
//   lookahead    candidate next steps are evaluated by expanding rollout
//                continuations to depth d (bounded enumeration, `branching`
//                proposals per node); only the first step of the best-scoring
//                rollout is committed, everything else is discarded.
//
// The engine is generation-agnostic: callers supply closures that propose
// steps, sample complete trajectories, and score transitions.  Ties anywhere
// break toward the earliest-generated candidate, so runs replay exactly.

namespace ttc {

// Strategy internals emit JSON events (per-boundary candidates, scores, kept
// sets, final selection) through this sink for offline inspection.
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void record(const nlohmann::json& event) = 0;
};

class JsonlTraceSink : public TraceSink {
public:
    explicit JsonlTraceSink(std::ostream& out) : out_(out) {}
    void record(const nlohmann::json& event) override;

private:
    std::ostream& out_;
};

struct SearchContext {
    // Propose one candidate next step continuing `history`.  Called multiple
    // times per boundary; sampling backends return varied steps, scripted
    // backends advance through their canned sequence.
    std::function<Step(const std::vector<Step>& history)> propose;

    // Produce one complete candidate trajectory (best_of_n only).  May
    // return an unscored trajectory; the engine scores it post-completion.
    std::function<Trajectory()> sample_complete;

    // Score one step transition.  The engine memoizes per strategy call, so
    // re-encountered transitions are never re-scored.
    std::function<StepScore(const std::string& previous, const std::string& current)> score;

    std::string origin;          // scored against the first step
    int max_steps = 12;          // trajectory length cutoff
    int branching = 3;           // proposals per expanded node
    int max_rollout_paths = 128; // lookahead frontier cap (see lookahead())

    TraceSink* trace = nullptr;  // optional
    std::string problem_id;     // trace decoration only
    int iteration_index = 0;     // trace decoration only
};

// Index of the largest reward, first occurrence on ties.
std::size_t argmax_reward(const std::vector<double>& rewards);

// Candidate volume one boundary of a strategy generates, used for budget
// forecasting: best_of_n -> param, beam_search -> branching * param,
// lookahead -> branching rollouts (of length <= param).
int candidate_count(Strategy strategy, int param, int branching = 3);

// Run n complete candidates and return the best by mean validity.
// Individual candidate failures are tolerated while at least one candidate
// completes; otherwise StrategyError.
Trajectory best_of_n(const SearchContext& ctx, int n);

// Beam search with width k.  Every live prefix sits at the same boundary
// before any prune; each expands `branching` candidates (content-deduplicated
// within one expansion).  k >= 1; with k = 1 this is greedy stepwise search.
Trajectory beam_search(const SearchContext& ctx, int k);

// Lookahead with rollout depth d >= 1.  At each boundary the rollout tree
// below the committed prefix is enumerated level by level (up to `branching`
// children per node, frontier capped at max_rollout_paths by partial mean);
// each completed rollout is scored by the mean of its own transitions only,
// and the best rollout's first step is committed.  With d >= the remaining
// depth of a (small enough) scripted tree this reproduces the full-horizon
// best continuation exactly.
Trajectory lookahead(const SearchContext& ctx, int d);

Trajectory run_strategy(const SearchContext& ctx, const ComputePlan& plan);

// Final-answer selection across iterations: the answer of the
// highest-reward iteration that produced one (ties -> lowest iteration
// index).  SelectionError when no iteration has an answer.
struct SelectedAnswer {
    int iteration_index = 0;   // 1-based
    std::string answer;
    double reward = 0.0;
};

SelectedAnswer select_final(const std::vector<IterationResult>& iterations);

} // namespace ttc
