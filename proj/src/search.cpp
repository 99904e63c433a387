#include "ttc/search.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

namespace ttc {

using nlohmann::json;

void JsonlTraceSink::record(const json& event) { out_ << event.dump() << "\n"; }

std::size_t argmax_reward(const std::vector<double>& rewards) {
    if (rewards.empty()) throw SelectionError("argmax over an empty reward list");
    std::size_t best = 0;
    for (std::size_t i = 1; i < rewards.size(); ++i)
        if (rewards[i] > rewards[best]) best = i;
    return best;
}

int candidate_count(Strategy strategy, int param, int branching) {
    switch (strategy) {
        case Strategy::BestOfN: return param;
        case Strategy::BeamSearch: return branching * param;
        case Strategy::Lookahead: return branching;
    }
    return 0;
}

namespace {

// Shared per-call transition-score memo; identical transitions (which beam
// and lookahead revisit constantly) are scored exactly once.
class ScoreMemo {
public:
    explicit ScoreMemo(const SearchContext& ctx) : ctx_(ctx) {}

    StepScore operator()(const std::string& prev, const std::string& cur) {
        const auto key = std::make_pair(prev, cur);
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        StepScore s = ctx_.score(prev, cur);
        cache_.emplace(key, s);
        return s;
    }

private:
    const SearchContext& ctx_;
    std::map<std::pair<std::string, std::string>, StepScore> cache_;
};

struct Branch {
    std::vector<Step> steps;
    std::vector<StepScore> scores;
    long double sum = 0.0L;
    int birth = 0;  // creation ordinal; ties break toward the smallest

    double mean() const {
        return steps.empty() ? 0.0
                             : static_cast<double>(sum / static_cast<long double>(steps.size()));
    }
};

void emit(const SearchContext& ctx, json event) {
    if (!ctx.trace) return;
    event["problem"] = ctx.problem_id;
    event["iteration"] = ctx.iteration_index;
    ctx.trace->record(event);
}

Trajectory to_trajectory(Branch b) {
    Trajectory t;
    t.steps = std::move(b.steps);
    t.scores = std::move(b.scores);
    t.terminal = true;
    return t;
}

} // namespace

// ===== best of n =====

Trajectory best_of_n(const SearchContext& ctx, int n) {
    if (n < 1) throw StrategyError("best_of_n needs n >= 1");
    if (!ctx.sample_complete) throw StrategyError("best_of_n needs a sample_complete source");

    ScoreMemo scored(ctx);
    std::vector<Trajectory> candidates;
    std::vector<double> rewards;
    std::string first_failure;

    for (int i = 0; i < n; ++i) {
        try {
            Trajectory t = ctx.sample_complete();
            if (t.steps.empty()) throw StrategyError("candidate trajectory is empty");
            if (t.scores.size() != t.steps.size()) {
                t.scores.clear();
                t.scores.reserve(t.steps.size());
                for (std::size_t s = 0; s < t.steps.size(); ++s) {
                    const std::string& prev = s == 0 ? ctx.origin : t.steps[s - 1].content;
                    t.scores.push_back(scored(prev, t.steps[s].content));
                }
            }
            t.terminal = true;
            const double reward = mean_reward(t);
            emit(ctx, json{{"event", "bon_candidate"},
                           {"candidate", i},
                           {"steps", t.steps.size()},
                           {"reward", reward}});
            candidates.push_back(std::move(t));
            rewards.push_back(reward);
        } catch (const Error& e) {
            if (first_failure.empty()) first_failure = e.what();
            emit(ctx, json{{"event", "bon_candidate"}, {"candidate", i}, {"failed", e.what()}});
        }
    }
    if (candidates.empty())
        throw StrategyError("best_of_n: all " + std::to_string(n) + " candidates failed (" +
                            first_failure + ")");

    const std::size_t best = argmax_reward(rewards);
    emit(ctx, json{{"event", "bon_select"}, {"chosen", best}, {"reward", rewards[best]}});
    return std::move(candidates[best]);
}

// ===== beam search =====

Trajectory beam_search(const SearchContext& ctx, int k) {
    if (k < 1) throw StrategyError("beam_search needs width k >= 1");
    if (!ctx.propose) throw StrategyError("beam_search needs a propose source");
    if (ctx.max_steps < 1) throw StrategyError("beam_search needs max_steps >= 1");

    ScoreMemo scored(ctx);
    int births = 0;
    std::vector<Branch> live{Branch{}};
    std::vector<Branch> finished;
    std::string first_failure;

    for (int boundary = 1; !live.empty() && boundary <= ctx.max_steps; ++boundary) {
        std::vector<Branch> survivors_pool;
        json trace_candidates = json::array();

        for (Branch& parent : live) {
            std::set<std::string> seen;  // dedupe within one expansion
            for (int j = 0; j < ctx.branching; ++j) {
                try {
                    Step step = ctx.propose(parent.steps);
                    step.index = static_cast<int>(parent.steps.size()) + 1;
                    if (step.content.empty()) throw StrategyError("proposed step is empty");
                    if (!seen.insert(step.content).second) continue;

                    const std::string& prev =
                        parent.steps.empty() ? ctx.origin : parent.steps.back().content;
                    const StepScore v = scored(prev, step.content);

                    Branch child = parent;
                    child.steps.push_back(std::move(step));
                    child.scores.push_back(v);
                    child.sum += static_cast<long double>(v.value);
                    child.birth = births++;

                    trace_candidates.push_back(json{{"content", child.steps.back().content},
                                                    {"score", v.value},
                                                    {"mean", child.mean()}});

                    if (terminal_intent(child.steps.back()) ||
                        static_cast<int>(child.steps.size()) >= ctx.max_steps)
                        finished.push_back(std::move(child));
                    else
                        survivors_pool.push_back(std::move(child));
                } catch (const Error& e) {
                    if (first_failure.empty()) first_failure = e.what();
                }
            }
        }

        std::stable_sort(survivors_pool.begin(), survivors_pool.end(),
                         [](const Branch& a, const Branch& b) { return a.mean() > b.mean(); });
        if (static_cast<int>(survivors_pool.size()) > k) survivors_pool.resize(k);

        json kept = json::array();
        for (const Branch& b : survivors_pool) kept.push_back(b.steps.back().content);
        emit(ctx, json{{"event", "beam_boundary"},
                       {"boundary", boundary},
                       {"candidates", trace_candidates},
                       {"kept", kept},
                       {"finished_total", finished.size()}});

        live = std::move(survivors_pool);
    }

    if (finished.empty())
        throw StrategyError("beam_search: no trajectory finished (" + first_failure + ")");

    // Final ranking over everything that finished, whenever it left the beam.
    std::size_t best = 0;
    for (std::size_t i = 1; i < finished.size(); ++i) {
        if (finished[i].mean() > finished[best].mean() ||
            (finished[i].mean() == finished[best].mean() &&
             finished[i].birth < finished[best].birth))
            best = i;
    }
    emit(ctx, json{{"event", "beam_select"},
                   {"chosen_birth", finished[best].birth},
                   {"reward", finished[best].mean()}});
    return to_trajectory(std::move(finished[best]));
}

// ===== lookahead =====

namespace {

struct RolloutPath {
    std::vector<Step> ext;          // steps beyond the committed prefix
    std::vector<StepScore> ext_scores;
    long double sum = 0.0L;
    int birth = 0;
    bool terminal = false;

    double mean() const {
        return ext.empty() ? 0.0
                           : static_cast<double>(sum / static_cast<long double>(ext.size()));
    }
};

} // namespace

Trajectory lookahead(const SearchContext& ctx, int d) {
    if (d < 1) throw StrategyError("lookahead needs depth d >= 1");
    if (!ctx.propose) throw StrategyError("lookahead needs a propose source");
    if (ctx.max_steps < 1) throw StrategyError("lookahead needs max_steps >= 1");

    ScoreMemo scored(ctx);
    Branch committed;

    while (static_cast<int>(committed.steps.size()) < ctx.max_steps) {
        int births = 0;
        std::vector<RolloutPath> frontier{RolloutPath{}};
        std::vector<RolloutPath> completed;
        std::string first_failure;

        for (int level = 1; level <= d && !frontier.empty(); ++level) {
            std::vector<RolloutPath> next_frontier;
            for (RolloutPath& path : frontier) {
                std::vector<Step> hist = committed.steps;
                hist.insert(hist.end(), path.ext.begin(), path.ext.end());

                std::set<std::string> seen;
                for (int j = 0; j < ctx.branching; ++j) {
                    try {
                        Step step = ctx.propose(hist);
                        step.index = static_cast<int>(hist.size()) + 1;
                        if (step.content.empty())
                            throw StrategyError("proposed step is empty");
                        if (!seen.insert(step.content).second) continue;

                        const std::string& prev =
                            hist.empty() ? ctx.origin : hist.back().content;
                        const StepScore v = scored(prev, step.content);

                        RolloutPath child = path;
                        child.ext.push_back(std::move(step));
                        child.ext_scores.push_back(v);
                        child.sum += static_cast<long double>(v.value);
                        child.birth = births++;
                        child.terminal =
                            terminal_intent(child.ext.back()) ||
                            static_cast<int>(committed.steps.size() + child.ext.size()) >=
                                ctx.max_steps;

                        if (child.terminal || level == d)
                            completed.push_back(std::move(child));
                        else
                            next_frontier.push_back(std::move(child));
                    } catch (const Error& e) {
                        if (first_failure.empty()) first_failure = e.what();
                    }
                }
            }
            // Cap the frontier so pathological depths cannot explode; within
            // test scales (branching^depth <= max_rollout_paths) this never
            // triggers and the enumeration is exhaustive.
            if (static_cast<int>(next_frontier.size()) > ctx.max_rollout_paths) {
                std::stable_sort(next_frontier.begin(), next_frontier.end(),
                                 [](const RolloutPath& a, const RolloutPath& b) {
                                     return a.mean() > b.mean();
                                 });
                next_frontier.resize(static_cast<std::size_t>(ctx.max_rollout_paths));
            }
            frontier = std::move(next_frontier);
        }

        if (completed.empty())
            throw StrategyError("lookahead: no rollout completed (" + first_failure + ")");

        std::size_t best = 0;
        for (std::size_t i = 1; i < completed.size(); ++i) {
            if (completed[i].mean() > completed[best].mean() ||
                (completed[i].mean() == completed[best].mean() &&
                 completed[i].birth < completed[best].birth))
                best = i;
        }

        if (ctx.trace) {
            json rollouts = json::array();
            for (const RolloutPath& p : completed)
                rollouts.push_back(json{{"first", p.ext.front().content},
                                        {"depth", p.ext.size()},
                                        {"score", p.mean()}});
            emit(ctx, json{{"event", "lookahead_commit"},
                           {"boundary", committed.steps.size() + 1},
                           {"rollouts", rollouts},
                           {"chosen", completed[best].ext.front().content}});
        }

        // Commit only the chosen rollout's first step; discard the rest.
        Step chosen = completed[best].ext.front();
        const StepScore v = completed[best].ext_scores.front();
        chosen.index = static_cast<int>(committed.steps.size()) + 1;
        committed.steps.push_back(std::move(chosen));
        committed.scores.push_back(v);
        committed.sum += static_cast<long double>(v.value);

        if (terminal_intent(committed.steps.back())) break;
    }

    if (committed.steps.empty()) throw StrategyError("lookahead committed nothing");
    return to_trajectory(std::move(committed));
}

Trajectory run_strategy(const SearchContext& ctx, const ComputePlan& plan) {
    switch (plan.strategy) {
        case Strategy::BestOfN: return best_of_n(ctx, plan.param);
        case Strategy::BeamSearch: return beam_search(ctx, plan.param);
        case Strategy::Lookahead: return lookahead(ctx, plan.param);
    }
    throw StrategyError("unknown strategy");
}

// ===== final selection =====

SelectedAnswer select_final(const std::vector<IterationResult>& iterations) {
    if (iterations.empty()) throw SelectionError("no iterations to select from");
    const IterationResult* best = nullptr;
    for (const IterationResult& it : iterations) {
        if (!it.trajectory.answer) continue;
        if (!best || it.reward > best->reward) best = &it;
    }
    if (!best) throw SelectionError("no iteration produced an answer");
    return SelectedAnswer{best->iteration_index, *best->trajectory.answer, best->reward};
}

} // namespace ttc
