#include "ttc/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace ttc {

// ===== enum names =====

std::string to_string(ToolKind k) {
    switch (k) {
        case ToolKind::CoT: return "cot";
        case ToolKind::SelfReflection: return "self_reflection";
        case ToolKind::Verifier: return "verifier";
        case ToolKind::NumericVerifier: return "numeric_verifier";
        case ToolKind::Reframer: return "reframer";
        case ToolKind::Summarizer: return "summarizer";
    }
    return "?";
}

std::string to_string(StepOrigin o) {
    switch (o) {
        case StepOrigin::CoT: return "cot";
        case StepOrigin::SelfReflection: return "self_reflection";
        case StepOrigin::Verifier: return "verifier";
        case StepOrigin::NumericVerifier: return "numeric_verifier";
        case StepOrigin::Reframer: return "reframer";
        case StepOrigin::Summarizer: return "summarizer";
        case StepOrigin::DirectSolve: return "direct_solve";
    }
    return "?";
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::BestOfN: return "best_of_n";
        case Strategy::BeamSearch: return "beam_search";
        case Strategy::Lookahead: return "lookahead";
    }
    return "?";
}

std::optional<ToolKind> tool_from_string(const std::string& name) {
    static const std::array<std::pair<const char*, ToolKind>, 6> kMap{{
        {"cot", ToolKind::CoT},
        {"self_reflection", ToolKind::SelfReflection},
        {"verifier", ToolKind::Verifier},
        {"numeric_verifier", ToolKind::NumericVerifier},
        {"reframer", ToolKind::Reframer},
        {"summarizer", ToolKind::Summarizer},
    }};
    for (const auto& [n, k] : kMap)
        if (name == n) return k;
    return std::nullopt;
}

std::optional<Strategy> strategy_from_string(const std::string& name) {
    if (name == "best_of_n") return Strategy::BestOfN;
    if (name == "beam_search") return Strategy::BeamSearch;
    if (name == "lookahead") return Strategy::Lookahead;
    return std::nullopt;
}

StepOrigin origin_of(ToolKind k) {
    switch (k) {
        case ToolKind::CoT: return StepOrigin::CoT;
        case ToolKind::SelfReflection: return StepOrigin::SelfReflection;
        case ToolKind::Verifier: return StepOrigin::Verifier;
        case ToolKind::NumericVerifier: return StepOrigin::NumericVerifier;
        case ToolKind::Reframer: return StepOrigin::Reframer;
        case ToolKind::Summarizer: return StepOrigin::Summarizer;
    }
    return StepOrigin::CoT;
}

// ===== tool sequences =====

namespace {

bool is_reasoning(ToolKind k) {
    return k == ToolKind::CoT || k == ToolKind::SelfReflection;
}

int count_of(const std::vector<ToolKind>& v, ToolKind k) {
    return static_cast<int>(std::count(v.begin(), v.end(), k));
}

std::optional<size_t> index_of(const std::vector<ToolKind>& v, ToolKind k) {
    auto it = std::find(v.begin(), v.end(), k);
    if (it == v.end()) return std::nullopt;
    return static_cast<size_t>(it - v.begin());
}

// Canonical slot order used by the deterministic repair:
// Reframer, reasoning tool, NumericVerifier, Verifier, Summarizer.
int slot_of(ToolKind k) {
    switch (k) {
        case ToolKind::Reframer: return 0;
        case ToolKind::CoT:
        case ToolKind::SelfReflection: return 1;
        case ToolKind::NumericVerifier: return 2;
        case ToolKind::Verifier: return 3;
        case ToolKind::Summarizer: return 4;
    }
    return 5;
}

} // namespace

bool ToolSequence::contains(ToolKind k) const {
    return std::find(tools.begin(), tools.end(), k) != tools.end();
}

ToolKind ToolSequence::reasoning_tool() const {
    for (ToolKind k : tools)
        if (is_reasoning(k)) return k;
    throw Error("tool sequence has no reasoning tool");
}

std::string ToolSequence::label() const {
    std::string out;
    for (size_t i = 0; i < tools.size(); ++i) {
        if (i) out += "+";
        out += to_string(tools[i]);
    }
    return out;
}

ToolSequenceCheck validate_tool_sequence(const std::vector<ToolKind>& tools) {
    ToolSequenceCheck check;
    auto& v = check.violations;

    if (tools.empty()) v.push_back("empty: sequence has no tools");
    if (tools.size() > 3) v.push_back("length: more than three tools");

    const int n_cot = count_of(tools, ToolKind::CoT);
    const int n_sr  = count_of(tools, ToolKind::SelfReflection);
    if (n_cot > 0 && n_sr > 0)
        v.push_back("mutual-exclusion: both cot and self_reflection present");
    else if (!tools.empty() && n_cot + n_sr == 0)
        v.push_back("missing-reasoning-tool: need cot or self_reflection");
    else if (n_cot + n_sr > 1)
        v.push_back("duplicate-reasoning-tool: reasoning tool appears more than once");

    for (ToolKind k : {ToolKind::Verifier, ToolKind::NumericVerifier,
                       ToolKind::Reframer, ToolKind::Summarizer}) {
        if (count_of(tools, k) > 1)
            v.push_back("duplicate: " + to_string(k) + " appears more than once");
    }

    if (auto i = index_of(tools, ToolKind::Reframer); i && *i != 0)
        v.push_back("reframer-position: reframer must come first");
    if (auto i = index_of(tools, ToolKind::Summarizer); i && *i != tools.size() - 1)
        v.push_back("summarizer-position: summarizer must come last");

    if (auto nv = index_of(tools, ToolKind::NumericVerifier)) {
        // Immediately after the reasoning tool.
        bool ok_pos = *nv > 0 && is_reasoning(tools[*nv - 1]);
        if (!ok_pos)
            v.push_back("numeric-verifier-position: must immediately follow the reasoning tool");
    }
    if (auto ver = index_of(tools, ToolKind::Verifier)) {
        auto nv = index_of(tools, ToolKind::NumericVerifier);
        if (!nv || *nv > *ver)
            v.push_back("verifier-order: verifier requires numeric_verifier before it");
    }

    check.ok = v.empty();
    if (check.ok) check.value = ToolSequence{tools};
    return check;
}

std::optional<ToolSequence> repair_tool_sequence(const std::vector<ToolKind>& tools) {
    // De-duplicate, keeping first occurrences.
    std::vector<ToolKind> uniq;
    for (ToolKind k : tools)
        if (std::find(uniq.begin(), uniq.end(), k) == uniq.end()) uniq.push_back(k);

    // Reasoning-tool conflict resolves in favour of plain chain-of-thought.
    if (count_of(uniq, ToolKind::CoT) > 0 && count_of(uniq, ToolKind::SelfReflection) > 0)
        uniq.erase(std::remove(uniq.begin(), uniq.end(), ToolKind::SelfReflection), uniq.end());
    if (std::none_of(uniq.begin(), uniq.end(), is_reasoning))
        return std::nullopt;  // nothing sensible to run; caller raises

    // Verifier is defined relative to NumericVerifier; unanchored, it goes.
    if (count_of(uniq, ToolKind::NumericVerifier) == 0)
        uniq.erase(std::remove(uniq.begin(), uniq.end(), ToolKind::Verifier), uniq.end());

    std::stable_sort(uniq.begin(), uniq.end(),
                     [](ToolKind a, ToolKind b) { return slot_of(a) < slot_of(b); });
    if (uniq.size() > 3) uniq.resize(3);

    auto check = validate_tool_sequence(uniq);
    if (!check.ok) return std::nullopt;
    return check.value;
}

// ===== compute plans =====

std::string ComputePlan::label() const {
    return to_string(strategy) + "(" + std::to_string(param) + ")";
}

int controller_param_min(Strategy s) {
    switch (s) {
        case Strategy::BestOfN: return 3;
        case Strategy::BeamSearch: return 3;
        case Strategy::Lookahead: return 2;
    }
    return 1;
}

int controller_param_max(Strategy s) {
    switch (s) {
        case Strategy::BestOfN: return 5;
        case Strategy::BeamSearch: return 6;
        case Strategy::Lookahead: return 4;
    }
    return 1;
}

ComputePlan make_controller_plan(Strategy s, int requested_param) {
    ComputePlan plan;
    plan.strategy = s;
    plan.param = std::clamp(requested_param, controller_param_min(s), controller_param_max(s));
    plan.clamped = plan.param != requested_param;
    return plan;
}

ComputePlan make_grid_plan(Strategy s, int param) {
    if (param != 1 && param != 5 && param != 10)
        throw ConfigError("grid plan parameter must be 1, 5, or 10; got " +
                          std::to_string(param));
    return ComputePlan{s, param, false};
}

// ===== steps & trajectories =====

bool terminal_intent(const Step& s) {
    if (!s.action_label) return false;
    return *s.action_label == "BoxFinalAnswer" || *s.action_label == "FormatSolutionText";
}

std::string Trajectory::last_content() const {
    return steps.empty() ? std::string{} : steps.back().content;
}

void validate_trajectory(const Trajectory& t) {
    if (!t.scores.empty() && t.scores.size() != t.steps.size())
        throw Error("trajectory has " + std::to_string(t.steps.size()) + " steps but " +
                    std::to_string(t.scores.size()) + " scores");
    for (size_t i = 0; i < t.steps.size(); ++i) {
        if (t.steps[i].content.empty())
            throw Error("step " + std::to_string(i + 1) + " has empty content");
        if (t.steps[i].index != static_cast<int>(i) + 1)
            throw Error("step " + std::to_string(i + 1) + " carries index " +
                        std::to_string(t.steps[i].index));
    }
    for (const StepScore& s : t.scores)
        if (s.value < 0.0 || s.value > 1.0)
            throw Error("step score outside [0, 1]");
}

double mean_reward(const Trajectory& t) {
    if (t.steps.empty()) throw Error("mean reward of an empty trajectory is undefined");
    if (t.scores.size() != t.steps.size())
        throw Error("mean reward of an unscored trajectory is undefined");
    long double acc = 0.0L;
    for (const StepScore& s : t.scores) acc += static_cast<long double>(s.value);
    return static_cast<double>(acc / static_cast<long double>(t.scores.size()));
}

std::vector<std::string> segment_reasoning(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    std::istringstream in(text);
    std::string line;
    bool blank_run = false;
    auto flush = [&] {
        // Trim trailing newlines/space from the finished segment.
        while (!current.empty() && (current.back() == '\n' || current.back() == ' ' ||
                                    current.back() == '\r' || current.back() == '\t'))
            current.pop_back();
        if (!current.empty()) out.push_back(current);
        current.clear();
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) {
            blank_run = true;
            continue;
        }
        if (blank_run && !current.empty()) flush();
        blank_run = false;
        if (!current.empty()) current += '\n';
        current += line;
    }
    flush();
    return out;
}

// ===== iteration results =====

IterationResult make_iteration_result(int index,
                                      Trajectory trajectory,
                                      std::optional<ToolSequence> tools,
                                      std::optional<ComputePlan> compute) {
    validate_trajectory(trajectory);
    IterationResult r;
    r.iteration_index = index;
    r.reward = trajectory.scored() ? mean_reward(trajectory) : 0.0;
    r.trajectory = std::move(trajectory);
    r.tools = std::move(tools);
    r.compute = std::move(compute);
    // Cross-check: the stored reward must equal the recomputed mean.
    if (r.trajectory.scored() &&
        std::fabs(r.reward - mean_reward(r.trajectory)) > kRewardTolerance)
        throw Error("iteration reward drifted from its trajectory mean");
    return r;
}

} // namespace ttc
