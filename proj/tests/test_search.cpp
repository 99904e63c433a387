#include <doctest.h>

#include <random>
#include <sstream>

#include "ttc/errors.hpp"
#include "ttc/search.hpp"

#include "oracle.hpp"

using namespace ttc;
using ttc::testing::ScriptedTree;
using ttc::testing::random_tree;

namespace {

SearchContext tree_context(const ScriptedTree& tree, int branching = 3, int max_steps = 12) {
    SearchContext ctx;
    ctx.propose = tree.proposer();
    ctx.score = tree.scorer();
    ctx.origin = tree.origin;
    ctx.branching = branching;
    ctx.max_steps = max_steps;
    return ctx;
}

std::vector<std::string> contents(const Trajectory& t) {
    std::vector<std::string> out;
    for (const Step& s : t.steps) out.push_back(s.content);
    return out;
}

std::vector<std::string> contents(const ScriptedTree& tree,
                                  const std::vector<std::size_t>& path) {
    std::vector<std::string> out;
    for (std::size_t idx : path) out.push_back(tree.nodes[idx].content);
    return out;
}

Trajectory canned(const std::vector<std::pair<std::string, double>>& steps) {
    Trajectory t;
    int i = 1;
    for (const auto& [content, score] : steps) {
        t.steps.push_back(Step{i++, StepOrigin::CoT, content, {}, {}});
        StepScore s;
        s.value = score;
        t.scores.push_back(s);
    }
    t.terminal = true;
    return t;
}

// Two full paths with a classic trap: the first edge of the worse path
// scores higher, so shallow methods commit to it.
//   origin -> A(0.9) -> A1(0.1)     mean 0.50
//   origin -> B(0.8) -> B1(0.9)     mean 0.85
ScriptedTree trap_tree() {
    ScriptedTree t;
    t.nodes.resize(5);
    t.nodes[0].children = {1, 2};
    t.nodes[1] = {"A", 0.9, {3}};
    t.nodes[2] = {"B", 0.8, {4}};
    t.nodes[3] = {"A1", 0.1, {}};
    t.nodes[4] = {"B1", 0.9, {}};
    t.depth = 2;
    t.max_degree = 2;
    return t;
}

} // namespace

// ---------------------------------------------------------------------------
// shared helpers
// ---------------------------------------------------------------------------

TEST_CASE("argmax prefers the first of equal rewards") {
    CHECK(argmax_reward({0.2, 0.9, 0.4}) == 1);
    CHECK(argmax_reward({0.7, 0.7}) == 0);
    CHECK(argmax_reward({0.5}) == 0);
    CHECK_THROWS_AS(argmax_reward({}), SelectionError);
}

TEST_CASE("candidate volume per boundary") {
    CHECK(candidate_count(Strategy::BestOfN, 5) == 5);
    CHECK(candidate_count(Strategy::BeamSearch, 2, 3) == 6);
    CHECK(candidate_count(Strategy::Lookahead, 4) == 3);
}

// ---------------------------------------------------------------------------
// best of n
// ---------------------------------------------------------------------------

TEST_CASE("best of n keeps the highest-mean candidate") {
    std::vector<Trajectory> pool{canned({{"low", 0.2}}), canned({{"high", 0.9}}),
                                 canned({{"mid", 0.4}})};
    std::size_t cursor = 0;
    SearchContext ctx;
    ctx.sample_complete = [&] { return pool[cursor++]; };
    Trajectory best = best_of_n(ctx, 3);
    CHECK(contents(best) == std::vector<std::string>{"high"});
    CHECK(best.terminal);
}

TEST_CASE("best of n ties break toward the earliest candidate") {
    std::vector<Trajectory> pool{canned({{"first", 0.7}}), canned({{"second", 0.7}})};
    std::size_t cursor = 0;
    SearchContext ctx;
    ctx.sample_complete = [&] { return pool[cursor++]; };
    CHECK(contents(best_of_n(ctx, 2)) == std::vector<std::string>{"first"});
}

TEST_CASE("best of n scores unscored candidates itself") {
    int score_calls = 0;
    SearchContext ctx;
    ctx.origin = "the problem";
    ctx.sample_complete = [&] {
        Trajectory t;
        t.steps.push_back(Step{1, StepOrigin::CoT, "s1", {}, {}});
        t.steps.push_back(Step{2, StepOrigin::CoT, "s2", {}, {}});
        return t;  // no scores attached
    };
    ctx.score = [&](const std::string& prev, const std::string& cur) {
        ++score_calls;
        StepScore s;
        s.value = prev == "the problem" ? 1.0 : 0.5;
        CHECK((cur == "s1" || cur == "s2"));
        return s;
    };
    Trajectory best = best_of_n(ctx, 2);
    REQUIRE(best.scores.size() == 2);
    CHECK(mean_reward(best) == 0.75);
    // Identical transitions across candidates are memoized within the call.
    CHECK(score_calls == 2);
}

TEST_CASE("best of n tolerates partial failures") {
    std::size_t cursor = 0;
    SearchContext ctx;
    ctx.sample_complete = [&]() -> Trajectory {
        if (cursor++ == 0) throw StrategyError("sampler glitch");
        return canned({{"ok", 0.6}});
    };
    CHECK(contents(best_of_n(ctx, 3)) == std::vector<std::string>{"ok"});
}

TEST_CASE("best of n fails only when every candidate fails") {
    SearchContext ctx;
    ctx.sample_complete = []() -> Trajectory { throw StrategyError("sampler down"); };
    CHECK_THROWS_WITH_AS(best_of_n(ctx, 3), doctest::Contains("sampler down"), StrategyError);
}

TEST_CASE("best of n validates its inputs") {
    SearchContext ctx;
    ctx.sample_complete = [] { return canned({{"x", 1.0}}); };
    CHECK_THROWS_AS(best_of_n(ctx, 0), StrategyError);
    SearchContext no_sampler;
    CHECK_THROWS_AS(best_of_n(no_sampler, 2), StrategyError);
}

// ---------------------------------------------------------------------------
// beam search
// ---------------------------------------------------------------------------

TEST_CASE("a wide beam finds the globally best path") {
    ScriptedTree tree = trap_tree();
    SearchContext ctx = tree_context(tree);
    Trajectory best = beam_search(ctx, 4);
    CHECK(contents(best) == std::vector<std::string>{"B", "B1"});
    CHECK(mean_reward(best) == doctest::Approx(0.85));
}

TEST_CASE("a greedy beam falls into the first-edge trap") {
    ScriptedTree tree = trap_tree();
    SearchContext ctx = tree_context(tree);
    Trajectory best = beam_search(ctx, 1);
    CHECK(contents(best) == std::vector<std::string>{"A", "A1"});
}

TEST_CASE("width two is enough to recover from the trap") {
    ScriptedTree tree = trap_tree();
    SearchContext ctx = tree_context(tree);
    CHECK(contents(beam_search(ctx, 2)) == std::vector<std::string>{"B", "B1"});
}

TEST_CASE("finished ties break toward the earlier-generated branch") {
    ScriptedTree tree;
    tree.nodes.resize(3);
    tree.nodes[0].children = {1, 2};
    tree.nodes[1] = {"X", 0.5, {}};
    tree.nodes[2] = {"Y", 0.5, {}};
    SearchContext ctx = tree_context(tree);
    CHECK(contents(beam_search(ctx, 2)) == std::vector<std::string>{"X"});
}

TEST_CASE("the step cutoff finishes over-long branches") {
    ScriptedTree tree;
    tree.nodes.resize(5);
    tree.nodes[0].children = {1};
    tree.nodes[1] = {"c1", 0.9, {2}};
    tree.nodes[2] = {"c2", 0.8, {3}};
    tree.nodes[3] = {"c3", 0.7, {4}};
    tree.nodes[4] = {"c4", 0.6, {}};
    SearchContext ctx = tree_context(tree, 3, /*max_steps=*/2);
    Trajectory best = beam_search(ctx, 2);
    CHECK(contents(best) == std::vector<std::string>{"c1", "c2"});
    CHECK(best.terminal);
}

TEST_CASE("beam search propagates total proposal failure") {
    SearchContext ctx;
    ctx.propose = [](const std::vector<Step>&) -> Step {
        throw StrategyError("proposer down");
    };
    ctx.score = [](const std::string&, const std::string&) { return StepScore{}; };
    CHECK_THROWS_WITH_AS(beam_search(ctx, 2), doctest::Contains("proposer down"),
                         StrategyError);
}

TEST_CASE("beam search validates its inputs") {
    ScriptedTree tree = trap_tree();
    SearchContext ctx = tree_context(tree);
    CHECK_THROWS_AS(beam_search(ctx, 0), StrategyError);
    SearchContext no_proposer;
    no_proposer.score = tree.scorer();
    CHECK_THROWS_AS(beam_search(no_proposer, 2), StrategyError);
}

TEST_CASE("an exhaustive beam matches brute force on random trees") {
    std::mt19937 gen(20240817);
    int tested = 0;
    for (int trial = 0; trial < 40; ++trial) {
        ScriptedTree tree = random_tree(gen);
        if (tree.has_mean_collision()) continue;
        ++tested;
        SearchContext ctx = tree_context(tree, std::max(3, tree.max_degree),
                                         tree.depth + 2);
        Trajectory got = beam_search(ctx, std::max(4, tree.leaf_count()));
        CHECK(contents(got) == contents(tree, tree.best_full_path()));
    }
    CHECK(tested >= 20);  // collisions are rare with continuous scores
}

// ---------------------------------------------------------------------------
// lookahead
// ---------------------------------------------------------------------------

TEST_CASE("depth one lookahead takes the first-edge trap") {
    ScriptedTree tree = trap_tree();
    SearchContext ctx = tree_context(tree);
    Trajectory got = lookahead(ctx, 1);
    CHECK(contents(got) == std::vector<std::string>{"A", "A1"});
}

TEST_CASE("depth two lookahead sees past the trap") {
    ScriptedTree tree = trap_tree();
    SearchContext ctx = tree_context(tree);
    Trajectory got = lookahead(ctx, 2);
    CHECK(contents(got) == std::vector<std::string>{"B", "B1"});
    CHECK(mean_reward(got) == doctest::Approx(0.85));
}

TEST_CASE("rollouts are ranked by their extension edges only") {
    // From committed A, edge P (terminal, 0.6) against Q -> Q2 (mean 0.65).
    // Extension-only ranking picks Q; mixing in the committed 0.99 edge
    // would pick P instead.
    ScriptedTree tree;
    tree.nodes.resize(5);
    tree.nodes[0].children = {1};
    tree.nodes[1] = {"A", 0.99, {2, 3}};
    tree.nodes[2] = {"P", 0.6, {}};
    tree.nodes[3] = {"Q", 0.5, {4}};
    tree.nodes[4] = {"Q2", 0.8, {}};
    SearchContext ctx = tree_context(tree);
    Trajectory got = lookahead(ctx, 2);
    CHECK(contents(got) == std::vector<std::string>{"A", "Q", "Q2"});
}

TEST_CASE("committing a terminal step ends the search early") {
    ScriptedTree tree;
    tree.nodes.resize(3);
    tree.nodes[0].children = {1, 2};
    tree.nodes[1] = {"stop", 0.9, {}};
    tree.nodes[2] = {"go", 0.1, {}};
    SearchContext ctx = tree_context(tree, 3, /*max_steps=*/10);
    Trajectory got = lookahead(ctx, 3);
    CHECK(contents(got) == std::vector<std::string>{"stop"});
    CHECK(got.terminal);
}

TEST_CASE("transition scores are memoized across boundaries") {
    ScriptedTree tree = trap_tree();
    int score_calls = 0;
    SearchContext ctx = tree_context(tree);
    auto inner = tree.scorer();
    ctx.score = [&](const std::string& prev, const std::string& cur) {
        ++score_calls;
        return inner(prev, cur);
    };
    lookahead(ctx, 2);
    // Four distinct edges; boundary two revisits B -> B1 without re-scoring.
    CHECK(score_calls == 4);
}

TEST_CASE("lookahead validates its inputs") {
    ScriptedTree tree = trap_tree();
    SearchContext ctx = tree_context(tree);
    CHECK_THROWS_AS(lookahead(ctx, 0), StrategyError);
    SearchContext no_proposer;
    no_proposer.score = tree.scorer();
    CHECK_THROWS_AS(lookahead(no_proposer, 2), StrategyError);
}

TEST_CASE("full-depth lookahead matches the per-commit oracle on random trees") {
    std::mt19937 gen(99118822);
    int tested = 0;
    for (int trial = 0; trial < 40; ++trial) {
        ScriptedTree tree = random_tree(gen);
        if (tree.has_mean_collision()) continue;
        ++tested;
        SearchContext ctx = tree_context(tree, std::max(3, tree.max_degree),
                                         tree.depth + 2);
        Trajectory got = lookahead(ctx, tree.depth);
        CHECK(contents(got) == contents(tree, tree.greedy_commit_path()));
    }
    CHECK(tested >= 20);
}

TEST_CASE("run_strategy dispatches on the plan") {
    ScriptedTree tree = trap_tree();
    SearchContext ctx = tree_context(tree);
    ComputePlan beam{Strategy::BeamSearch, 4, false};
    CHECK(contents(run_strategy(ctx, beam)) == std::vector<std::string>{"B", "B1"});

    ScriptedTree tree2 = trap_tree();
    SearchContext ctx2 = tree_context(tree2);
    ComputePlan la{Strategy::Lookahead, 2, false};
    CHECK(contents(run_strategy(ctx2, la)) == std::vector<std::string>{"B", "B1"});
}

TEST_CASE("strategies emit machine-readable trace events") {
    ScriptedTree tree = trap_tree();
    std::ostringstream out;
    JsonlTraceSink sink(out);
    SearchContext ctx = tree_context(tree);
    ctx.trace = &sink;
    ctx.problem_id = "p1";
    ctx.iteration_index = 3;
    lookahead(ctx, 2);

    std::istringstream lines(out.str());
    std::string line;
    int commits = 0;
    while (std::getline(lines, line)) {
        const auto event = nlohmann::json::parse(line);
        CHECK(event.at("problem") == "p1");
        CHECK(event.at("iteration") == 3);
        if (event.at("event") == "lookahead_commit") {
            ++commits;
            CHECK(event.at("rollouts").is_array());
        }
    }
    CHECK(commits == 2);  // one commit per step of [B, B1]
}

// ---------------------------------------------------------------------------
// final selection across iterations
// ---------------------------------------------------------------------------

namespace {
IterationResult iteration(int index, double reward, std::optional<std::string> answer) {
    IterationResult it;
    it.iteration_index = index;
    it.reward = reward;
    it.trajectory = canned({{"step", reward}});
    it.trajectory.answer = std::move(answer);
    return it;
}
} // namespace

TEST_CASE("selection takes the best-reward answer") {
    auto sel = select_final({iteration(1, 0.2, "a"), iteration(2, 0.9, "b"),
                             iteration(3, 0.4, "c")});
    CHECK(sel.iteration_index == 2);
    CHECK(sel.answer == "b");
    CHECK(sel.reward == 0.9);
}

TEST_CASE("selection ties break toward the earliest iteration") {
    auto sel = select_final({iteration(1, 0.8, "a"), iteration(2, 0.8, "b"),
                             iteration(3, 0.3, "c")});
    CHECK(sel.iteration_index == 1);
    CHECK(sel.answer == "a");
}

TEST_CASE("a single iteration selects itself") {
    auto sel = select_final({iteration(1, 0.1, "only")});
    CHECK(sel.iteration_index == 1);
    CHECK(sel.answer == "only");
}

TEST_CASE("answerless iterations never win") {
    auto sel = select_final({iteration(1, 0.9, std::nullopt), iteration(2, 0.4, "b")});
    CHECK(sel.iteration_index == 2);
    CHECK(sel.answer == "b");
}

TEST_CASE("selection fails when nothing produced an answer") {
    CHECK_THROWS_AS(select_final({iteration(1, 0.9, std::nullopt)}), SelectionError);
    CHECK_THROWS_AS(select_final({}), SelectionError);
}
