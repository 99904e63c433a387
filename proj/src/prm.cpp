#include "ttc/prm.hpp"

#include <algorithm>
#include <cstdlib>

#include "ttc/json_util.hpp"

namespace ttc {

using nlohmann::json;

StepScorer::StepScorer(Gateway& gateway, const PromptSet& prompts, ScorerOptions options)
    : gateway_(gateway), prompts_(prompts), options_(std::move(options)) {
    if (options_.model_id.empty()) throw ConfigError("scorer needs a model id");
    if (options_.max_attempts < 1) throw ConfigError("scorer needs at least one attempt");
}

StepScore StepScorer::parse_verdict(const std::string& text) const {
    auto j = extract_json_object(text);
    if (!j) throw ScoringError("verdict is not a JSON object");
    const json& obj = *j;

    std::optional<bool> verdict;
    if (obj.contains("is correct") && obj["is correct"].is_boolean())
        verdict = obj["is correct"].get<bool>();
    else if (obj.contains("is_correct") && obj["is_correct"].is_boolean())
        verdict = obj["is_correct"].get<bool>();

    if (!obj.contains("confidence") || !obj["confidence"].is_number())
        throw ScoringError("verdict lacks a numeric confidence");

    StepScore score;
    const double raw = obj["confidence"].get<double>();
    score.value = std::clamp(raw, 0.0, 1.0);
    score.clamped = score.value != raw;
    score.verdict = verdict;
    score.raw_response = text;
    return score;
}

StepScore StepScorer::score_transition(const std::string& previous, const std::string& current,
                                       const CallScope& scope, int transition_index) {
    if (!scope.ledger) throw ScoringError("scoring needs a ledger", transition_index);

    ChatRequest req;
    req.model_id = options_.model_id;
    req.system_prompt = prompts_.render(PromptRole::PrmScoring, {});
    req.user_prompt = render_transition(previous, current);
    req.temperature = 0.0;   // greedy: scoring must be reproducible
    req.top_p = 1.0;
    req.max_tokens = options_.max_tokens;
    req.purpose = "prm";
    req.problem_id = scope.problem_id;

    std::string last_text;
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        const ChatResponse resp = gateway_.chat(req, *scope.ledger);
        last_text = resp.text;
        try {
            StepScore score;
            if (options_.adapter == PrmAdapter::NativeScalar) {
                const char* begin = resp.text.c_str();
                char* end = nullptr;
                const double raw = std::strtod(begin, &end);
                // Accept only when the whole (trimmed) body was the number.
                std::string rest = end ? std::string(end) : std::string{};
                rest.erase(0, rest.find_first_not_of(" \t\r\n"));
                if (end == begin || !rest.empty())
                    throw ScoringError("scalar score is not a number");
                score.value = std::clamp(raw, 0.0, 1.0);
                score.clamped = score.value != raw;
                score.raw_response = resp.text;
            } else {
                score = parse_verdict(resp.text);
            }
            if (score.verdict &&
                ((*score.verdict && score.value < 0.5) || (!*score.verdict && score.value > 0.5)))
                ++inconsistencies_;
            return score;
        } catch (const ScoringError&) {
            if (attempt + 1 >= options_.max_attempts) break;
            // fall through to the retry call
        }
    }
    throw ScoringError("transition " + std::to_string(transition_index) +
                           ": unusable verdict after " + std::to_string(options_.max_attempts) +
                           " attempts; last response: " + last_text,
                       transition_index);
}

Trajectory StepScorer::score_trajectory(Trajectory trajectory, const std::string& origin,
                                        const CallScope& scope) {
    if (trajectory.steps.empty())
        throw ScoringError("cannot score an empty trajectory");
    trajectory.scores.clear();
    trajectory.scores.reserve(trajectory.steps.size());
    for (std::size_t i = 0; i < trajectory.steps.size(); ++i) {
        const std::string& prev = i == 0 ? origin : trajectory.steps[i - 1].content;
        trajectory.scores.push_back(score_transition(prev, trajectory.steps[i].content, scope,
                                                     static_cast<int>(i) + 1));
    }
    return trajectory;
}

} // namespace ttc
