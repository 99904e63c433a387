#include "ttc/controller.hpp"

#include <algorithm>
#include <cctype>

#include "ttc/json_util.hpp"

namespace ttc {

using nlohmann::json;

// ===== defaults =====

ToolSequence default_tool_sequence() { return ToolSequence{{ToolKind::CoT}}; }

ComputePlan default_compute_plan() { return ComputePlan{Strategy::BestOfN, 3, false}; }

std::string default_plan_text() {
    return "Work through the problem step by step and state the final answer.";
}

// ===== pure helpers =====

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return {};
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

// Lowercase and drop separator characters, so "Self-Reflection" and
// "self_reflection" normalize identically.
std::string fold_name(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == ' ' || c == '-' || c == '_' || c == '\t') continue;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

std::optional<std::string> tag_span(const std::string& text, const std::string& tag) {
    const std::string open = "<" + tag + ">";
    const std::string close = "</" + tag + ">";
    const auto a = text.find(open);
    if (a == std::string::npos) return std::nullopt;
    const auto b = text.find(close, a + open.size());
    if (b == std::string::npos) return std::nullopt;
    return text.substr(a + open.size(), b - a - open.size());
}

} // namespace

std::optional<std::string> extract_plan_span(const std::string& text) {
    auto span = tag_span(text, "plan");
    if (!span) return std::nullopt;
    const std::string plan = trim(*span);
    if (plan.empty()) return std::nullopt;
    return plan;
}

std::optional<ToolKind> map_tool_name(const std::string& name) {
    const std::string n = fold_name(name);
    if (n == "cot" || n == "chainofthought") return ToolKind::CoT;
    if (n == "selfreflection" || n == "reflection") return ToolKind::SelfReflection;
    if (n == "verifier" || n == "verify") return ToolKind::Verifier;
    if (n == "numericverifier" || n == "numericverify") return ToolKind::NumericVerifier;
    if (n == "reframe" || n == "reframer") return ToolKind::Reframer;
    if (n == "summarizer" || n == "summarize" || n == "summary") return ToolKind::Summarizer;
    return std::nullopt;
}

std::optional<Strategy> map_strategy_name(const std::string& name) {
    const std::string n = fold_name(name);
    if (n == "bestofn" || n == "bon" || n == "bestofnsampling") return Strategy::BestOfN;
    if (n == "beamsearch" || n == "beam" || n == "bs") return Strategy::BeamSearch;
    if (n == "lookahead" || n == "la" || n == "lookaheadsearch") return Strategy::Lookahead;
    return std::nullopt;
}

std::optional<Step> parse_step_response(const std::string& text, StepOrigin origin,
                                        int index) {
    auto action = tag_span(text, "action");
    if (!action) return std::nullopt;

    std::string label;
    std::string desc;
    const auto colon = action->find(':');
    if (colon == std::string::npos) {
        label = trim(*action);
    } else {
        label = trim(action->substr(0, colon));
        desc = trim(action->substr(colon + 1));
    }
    if (label.empty()) return std::nullopt;

    std::string reasoning;
    if (auto r = tag_span(text, "reasoning")) reasoning = trim(*r);

    Step step;
    step.index = index;
    step.origin = origin;
    step.action_label = label;
    if (!reasoning.empty()) {
        step.reasoning_text = reasoning;
        step.content = reasoning;
    } else if (!desc.empty()) {
        step.content = desc;
    } else {
        return std::nullopt;  // nothing scoreable in this step
    }
    return step;
}

std::optional<std::string> extract_boxed(const std::string& text) {
    const std::string marker = "\\boxed{";
    std::size_t pos = text.rfind(marker);
    while (pos != std::string::npos) {
        // Balanced-brace scan from the marker's opening brace.
        int depth = 0;
        for (std::size_t i = pos + marker.size() - 1; i < text.size(); ++i) {
            if (text[i] == '{') ++depth;
            else if (text[i] == '}') {
                if (--depth == 0)
                    return text.substr(pos + marker.size(), i - pos - marker.size());
            }
        }
        // Unbalanced span; try an earlier occurrence.
        if (pos == 0) break;
        pos = text.rfind(marker, pos - 1);
    }
    return std::nullopt;
}

std::optional<std::string> parse_answer_payload(const std::string& text) {
    auto j = extract_json_object(text);
    if (!j || !j->contains("answer")) return std::nullopt;
    const json& a = (*j)["answer"];
    if (a.is_string()) {
        const std::string s = trim(a.get<std::string>());
        if (s.empty()) return std::nullopt;
        return s;
    }
    if (a.is_number_integer()) return std::to_string(a.get<long long>());
    if (a.is_number()) return json(a).dump();
    return std::nullopt;
}

// ===== controller =====

Controller::Controller(Gateway& gateway, const PromptSet& prompts, ControllerOptions options)
    : gateway_(gateway), prompts_(prompts), options_(std::move(options)) {
    if (options_.controller_model_id.empty() || options_.base_model_id.empty())
        throw ConfigError("controller needs controller and base model ids");
    if (options_.max_attempts < 1) throw ConfigError("controller needs at least one attempt");
}

ChatResponse Controller::call_control(PromptRole system_role, std::string system_override,
                                      const std::string& user, const std::string& purpose,
                                      const CallScope& scope) {
    ChatRequest req;
    req.model_id = options_.controller_model_id;
    req.system_prompt =
        system_override.empty() ? prompts_.render(system_role, {}) : std::move(system_override);
    req.user_prompt = user;
    req.temperature = 0.0;  // control decisions decode greedily
    req.top_p = 1.0;
    req.max_tokens = options_.controller_max_tokens;
    req.seed = options_.seed;
    req.purpose = purpose;
    req.problem_id = scope.problem_id;
    return gateway_.chat(req, *scope.ledger);
}

ChatResponse Controller::call_base(const std::string& system, const std::string& user,
                                   const std::string& purpose, const CallScope& scope) {
    ChatRequest req;
    req.model_id = options_.base_model_id;
    req.system_prompt = system;
    req.user_prompt = user;
    req.temperature = options_.base_decoding.temperature;
    req.top_p = options_.base_decoding.top_p;
    req.max_tokens = options_.base_decoding.max_tokens;
    req.seed = options_.seed;
    req.purpose = purpose;
    req.problem_id = scope.problem_id;
    return gateway_.chat(req, *scope.ledger);
}

Plan Controller::plan(const std::string& obs, const CallScope& scope) {
    const std::string base_user = prompts_.render(PromptRole::Planning, {{"problem", obs}});
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        std::string user = base_user;
        if (attempt > 0)
            user += "\n\nYour previous response did not contain a valid <plan>...</plan> "
                    "block. Respond with exactly one non-empty <plan>...</plan> block.";
        const ChatResponse resp =
            call_control(PromptRole::SystemMath, {}, user, "plan", scope);
        if (auto span = extract_plan_span(resp.text)) return Plan{*span};
    }
    if (options_.fallback == RepairFallback::DefaultConfig) {
        ++fallbacks_;
        return Plan{default_plan_text()};
    }
    throw PlanningError("no usable <plan> block after " +
                        std::to_string(options_.max_attempts) + " attempts");
}

ToolSequence Controller::select_tools(const std::string& obs, const Plan& plan,
                                      const CallScope& scope) {
    const std::string base_user =
        prompts_.render(PromptRole::ToolSelector, {{"plan", plan.text}, {"obs", obs}});

    struct Parsed {
        std::vector<ToolKind> known;
        std::vector<std::string> unknown;
    };
    std::optional<Parsed> last_parse;
    std::vector<std::string> violations;

    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        std::string user = base_user;
        if (attempt > 0) {
            user += "\n\nYour previous selection was invalid:";
            for (const std::string& v : violations) user += "\n- " + v;
            user += "\nReturn corrected JSON ONLY: {\"tools\": [\"tool1\", ...]}";
        }
        violations.clear();

        const ChatResponse resp =
            call_control(PromptRole::ToolSelectorSystem, {}, user, "tools", scope);
        auto j = extract_json_object(resp.text);
        if (!j || !j->contains("tools") || !(*j)["tools"].is_array()) {
            violations.push_back("output was not a JSON object with a \"tools\" list");
            continue;
        }
        Parsed parsed;
        for (const json& item : (*j)["tools"]) {
            if (!item.is_string()) {
                parsed.unknown.push_back(item.dump());
                continue;
            }
            const std::string name = item.get<std::string>();
            if (auto kind = map_tool_name(name)) parsed.known.push_back(*kind);
            else parsed.unknown.push_back(name);
        }
        last_parse = parsed;

        for (const std::string& u : parsed.unknown)
            violations.push_back("unknown tool name: " + u);
        const ToolSequenceCheck check = validate_tool_sequence(parsed.known);
        if (check.ok && parsed.unknown.empty()) return *check.value;
        violations.insert(violations.end(), check.violations.begin(), check.violations.end());
    }

    // Deterministic repair of the last parseable selection — but unknown
    // names are never dropped silently.
    if (last_parse && last_parse->unknown.empty()) {
        if (auto repaired = repair_tool_sequence(last_parse->known)) {
            ++repairs_;
            return *repaired;
        }
    }
    if (options_.fallback == RepairFallback::DefaultConfig) {
        ++fallbacks_;
        return default_tool_sequence();
    }
    std::string detail;
    for (const std::string& v : violations) detail += (detail.empty() ? "" : "; ") + v;
    throw ToolSelectionError("no valid tool sequence after " +
                             std::to_string(options_.max_attempts) + " attempts (" + detail +
                             ")");
}

ComputePlan Controller::select_compute(const std::string& obs, const Plan& plan,
                                       const ToolSequence& tools, const CallScope& scope) {
    // The prompt-facing tool label uses the selector's vocabulary.
    std::string tool_label;
    for (std::size_t i = 0; i < tools.tools.size(); ++i) {
        if (i) tool_label += ", ";
        switch (tools.tools[i]) {
            case ToolKind::CoT: tool_label += "cot"; break;
            case ToolKind::SelfReflection: tool_label += "self-reflection"; break;
            case ToolKind::Verifier: tool_label += "verifier"; break;
            case ToolKind::NumericVerifier: tool_label += "numeric verifier"; break;
            case ToolKind::Reframer: tool_label += "reframe"; break;
            case ToolKind::Summarizer: tool_label += "summarizer"; break;
        }
    }
    const std::string base_user = prompts_.render(
        PromptRole::ComputeSelector,
        {{"tool", tool_label}, {"plan", plan.text}, {"obs", obs}});

    std::vector<std::string> violations;
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        std::string user = base_user;
        if (attempt > 0) {
            user += "\n\nYour previous selection was invalid:";
            for (const std::string& v : violations) user += "\n- " + v;
            user += "\nReturn corrected JSON ONLY: {\"strategy\": \"best of n|beam "
                    "search|lookahead\", \"param\": <int>}";
        }
        violations.clear();

        const ChatResponse resp =
            call_control(PromptRole::ComputeSelectorSystem, {}, user, "compute", scope);
        auto j = extract_json_object(resp.text);
        if (!j) {
            violations.push_back("output was not a JSON object");
            continue;
        }
        std::optional<Strategy> strategy;
        if (j->contains("strategy") && (*j)["strategy"].is_string()) {
            strategy = map_strategy_name((*j)["strategy"].get<std::string>());
            if (!strategy)
                violations.push_back("unknown strategy: " +
                                     (*j)["strategy"].get<std::string>());
        } else {
            violations.push_back("missing \"strategy\" string");
        }
        std::optional<int> param;
        if (j->contains("param")) {
            const json& p = (*j)["param"];
            if (p.is_number_integer()) param = p.get<int>();
            else if (p.is_number_float() &&
                     p.get<double>() == static_cast<double>(static_cast<int>(p.get<double>())))
                param = static_cast<int>(p.get<double>());
            else if (p.is_string()) {
                try {
                    std::size_t used = 0;
                    const int v = std::stoi(p.get<std::string>(), &used);
                    if (used == p.get<std::string>().size()) param = v;
                } catch (...) {}
            }
        }
        if (!param) violations.push_back("missing or non-integer \"param\"");

        if (strategy && param) return make_controller_plan(*strategy, *param);
    }

    if (options_.fallback == RepairFallback::DefaultConfig) {
        ++fallbacks_;
        return default_compute_plan();
    }
    std::string detail;
    for (const std::string& v : violations) detail += (detail.empty() ? "" : "; ") + v;
    throw ComputeSelectionError("no valid compute strategy after " +
                                std::to_string(options_.max_attempts) + " attempts (" +
                                detail + ")");
}

Step Controller::next_step(const std::string& obs, const std::string& plan_text,
                           ToolKind reasoning_tool, const std::vector<Step>& history,
                           const CallScope& scope) {
    if (reasoning_tool != ToolKind::CoT && reasoning_tool != ToolKind::SelfReflection)
        throw ControllerUsageError("next_step needs a reasoning tool, got " +
                                   to_string(reasoning_tool));
    const PromptRole role = reasoning_tool == ToolKind::CoT ? PromptRole::CotStep
                                                            : PromptRole::SelfReflectionStep;
    const std::string system = prompts_.render(role, {});
    const std::string base_user = render_step_context(obs, plan_text, history);
    const int index = static_cast<int>(history.size()) + 1;

    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        std::string user = base_user;
        if (attempt > 0)
            user += "\n\nYour previous response was malformed. Output exactly one "
                    "<reasoning>...</reasoning> block followed by one "
                    "<action>ActionName: description</action> block.";
        const ChatResponse resp = call_base(system, user, "step", scope);
        if (auto step = parse_step_response(resp.text, origin_of(reasoning_tool), index))
            return *step;
    }
    throw StepGenerationError("no parseable step at index " + std::to_string(index) +
                              " after " + std::to_string(options_.max_attempts) + " attempts");
}

Step Controller::run_auxiliary_tool(ToolKind tool, const std::string& problem_statement,
                                    const std::vector<Step>& history,
                                    const CallScope& scope) {
    std::string user;
    std::string purpose;
    switch (tool) {
        case ToolKind::Reframer:
            if (!history.empty())
                throw ControllerUsageError("reframer only runs before reasoning starts");
            user = render_reframe_request(problem_statement);
            purpose = "reframe";
            break;
        case ToolKind::NumericVerifier:
            user = render_numeric_verify_request(full_reasoning_text(history));
            purpose = "numeric_verify";
            break;
        case ToolKind::Verifier:
            user = render_verify_request(full_reasoning_text(history));
            purpose = "verify";
            break;
        case ToolKind::Summarizer:
            user = render_summarize_request(full_reasoning_text(history));
            purpose = "summarize";
            break;
        default:
            throw ControllerUsageError(to_string(tool) + " is not an auxiliary tool");
    }
    if (tool != ToolKind::Reframer && history.empty())
        throw ControllerUsageError(to_string(tool) + " needs reasoning steps to work on");

    const std::string system = prompts_.render(PromptRole::SystemMath, {});
    for (int attempt = 0; attempt < options_.max_attempts; ++attempt) {
        const ChatResponse resp = call_base(system, user, purpose, scope);
        const std::string content = trim(resp.text);
        if (!content.empty()) {
            Step step;
            step.index = static_cast<int>(history.size()) + 1;
            step.origin = origin_of(tool);
            step.content = content;
            return step;
        }
    }
    throw StepGenerationError(to_string(tool) + " produced no content");
}

std::optional<std::string> Controller::extract_answer(const std::string& problem_statement,
                                                      const std::string& plan_text,
                                                      const Trajectory& trajectory,
                                                      const CallScope& scope) {
    const std::string reasoning = full_reasoning_text(trajectory.steps);
    const std::string user = prompts_.render(PromptRole::FinalAnswerUser,
                                             {{"problem", problem_statement},
                                              {"plan", plan_text},
                                              {"full reasoning", reasoning}});
    const ChatResponse resp =
        call_control(PromptRole::FinalAnswerSystem, {}, user, "extract", scope);

    if (auto answer = parse_answer_payload(resp.text)) return answer;
    if (auto boxed = extract_boxed(resp.text)) return boxed;
    if (auto boxed = extract_boxed(reasoning)) return boxed;
    return std::nullopt;
}

std::string Controller::direct_solve(const std::string& problem_statement,
                                     const CallScope& scope) {
    ChatRequest req;
    req.model_id = options_.base_model_id;
    req.system_prompt = prompts_.render(PromptRole::DirectSolveSystem, {});
    req.user_prompt = prompts_.render(PromptRole::DirectSolve, {{"problem", problem_statement}});
    req.temperature = options_.base_decoding.temperature;
    req.top_p = options_.base_decoding.top_p;
    req.max_tokens = options_.base_decoding.max_tokens;
    req.seed = options_.seed;
    req.purpose = "direct";
    req.problem_id = scope.problem_id;
    return gateway_.chat(req, *scope.ledger).text;
}

std::string Controller::sample_solution(const std::string& obs, const std::string& plan_text,
                                        const CallScope& scope) {
    const std::string system = prompts_.render(PromptRole::UnstructuredSystem, {});
    const std::string user = prompts_.render(PromptRole::UnstructuredUser,
                                             {{"problem", obs},
                                              {"plan", plan_text},
                                              {"full reasoning", ""}});
    return call_base(system, user, "sample", scope).text;
}

} // namespace ttc
