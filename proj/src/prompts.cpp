#include "ttc/prompts.hpp"

#include <algorithm>

namespace ttc {

std::string to_string(PromptRole role) {
    switch (role) {
        case PromptRole::SystemMath: return "system_math";
        case PromptRole::Planning: return "planning";
        case PromptRole::ToolSelectorSystem: return "tool_selector_system";
        case PromptRole::ToolSelector: return "tool_selector";
        case PromptRole::ComputeSelectorSystem: return "compute_selector_system";
        case PromptRole::ComputeSelector: return "compute_selector";
        case PromptRole::CotStep: return "cot_step";
        case PromptRole::SelfReflectionStep: return "self_reflection_step";
        case PromptRole::PrmScoring: return "prm_scoring";
        case PromptRole::FinalAnswerSystem: return "final_answer_system";
        case PromptRole::FinalAnswerUser: return "final_answer_user";
        case PromptRole::DirectSolveSystem: return "direct_solve_system";
        case PromptRole::DirectSolve: return "direct_solve";
        case PromptRole::UnstructuredSystem: return "unstructured_system";
        case PromptRole::UnstructuredUser: return "unstructured_user";
    }
    return "?";
}

std::optional<PromptRole> prompt_role_from_string(const std::string& name) {
    for (PromptRole r : all_prompt_roles())
        if (to_string(r) == name) return r;
    return std::nullopt;
}

std::vector<PromptRole> all_prompt_roles() {
    return {
        PromptRole::SystemMath,          PromptRole::Planning,
        PromptRole::ToolSelectorSystem,  PromptRole::ToolSelector,
        PromptRole::ComputeSelectorSystem, PromptRole::ComputeSelector,
        PromptRole::CotStep,             PromptRole::SelfReflectionStep,
        PromptRole::PrmScoring,          PromptRole::FinalAnswerSystem,
        PromptRole::FinalAnswerUser,     PromptRole::DirectSolveSystem,
        PromptRole::DirectSolve,         PromptRole::UnstructuredSystem,
        PromptRole::UnstructuredUser,
    };
}

// ===== template bodies =====

namespace {

const char* kSystemMath =
R"PROMPT(You are a specialized mathematical problem solver.
Your role is to solve the user's math question accurately and efficiently,
using appropriate intermediate reasoning (when requested by other prompts)
and providing answers in the formats specified by the calling prompt.)PROMPT";

const char* kPlanning =
R"PROMPT(Review the user's specific math problem and create a concise high-level plan
for solving it.

Output your plan in this format:

<plan>YOUR SOLUTION APPROACH</plan>

Be specific about the main steps you will take, but do NOT solve the problem.

Problem: {problem}

* STRICT REQUIREMENTS *
1. DO NOT solve the problem.
2. DO NOT perform algebra, arithmetic, or simplification.
3. Write a 1-3 sentence plan only.
4. Wrap the plan EXACTLY inside <plan>...</plan>.
5. No text is allowed outside the <plan> tags.

Output format (mandatory):

<plan>STEP-BY-STEP HIGH-LEVEL STRATEGY ONLY</plan>)PROMPT";

const char* kToolSelectorSystem =
R"PROMPT(You are a tool selector for solving a specific math problem.

Task:

Given the user's math question, choose which reasoning and verification tools
should be applied. You are not solving the problem yourself; you only decide
which tools to run.

Tool characteristics:
- self-reflection: For complex, error-prone, multi-step problems where self-critique and refinement will significantly reduce errors.
- cot: For standard multi-step problems with a clear solution path and moderate complexity.
- numeric verifier: For problems involving arithmetic, numeric thresholds, inequalities, probabilities, or any non-trivial numeric work.
- verifier: For general logical/structural correctness checks of the full reasoning trajectory (beyond numeric checks).
- summarizer: For long trajectories where we need a compressed version of the reasoning.
- reframe: For ambiguous, underspecified, or poorly stated questions where clarification or reformulation is needed.

Output requirements:
- Respond with a SINGLE JSON object ONLY.
- No prose, no markdown, no explanations.

Schema: {"tools": ["tool1", "tool2", ...]}

Available tools: self-reflection, cot, numeric verifier, verifier, summarizer, reframe.)PROMPT";

const char* kToolSelector =
R"PROMPT(Select one or more tools to execute SEQUENTIALLY to solve this specific math problem.

Plan: {plan}

Given Problem: {obs}

Available tools:
- self-reflection -- Reflective reasoning: initial attempt -> critique -> refinement
- cot -- Step-by-step reasoning
- numeric verifier -- PRM-based numeric checks on arithmetic or numeric expressions
- verifier -- General PRM correctness check on full reasoning
- summarizer -- Compress long reasoning chains
- reframe -- Reformulate question/plan if unclear or ambiguous

DECISION RULES (apply in order; collect matches; cap to 3 tools):
1. AMBIGUITY/UNCLEAR SPEC: If the problem is ambiguous, underspecified, or has unclear notation -> include reframe before reasoning.
2. COMPLEX REASONING/PROOF: If solving requires complex proofs, error-prone logic, long derivations, or multiple conceptual insights -> include self-reflection (provides built-in critique).
3. STRAIGHTFORWARD MULTI-STEP: If solving requires standard multi-step algebra, calculus, or clear decomposition without high conceptual risk -> include cot.
4. NUMERIC RISK: If the problem involves non-trivial arithmetic, numeric bounds, probabilities, or quantitative calculations -> include numeric verifier AFTER the main reasoning tool.
5. GENERAL CORRECTNESS: If the solution must satisfy constraints or the reasoning is still error-prone after numeric checks -> include verifier after numeric verifier.
6. LONG REASONING: If Plan+Given Problem or expected derivation > 600 tokens or there are multiple sub-problems -> include summarizer last.
7. SIMPLE COMPUTATION: ONLY if none of rules 1-6 apply and the problem is a direct, short calculation -> choose ["cot"] alone.

TOOL SELECTION PRIORITY:
- Use self-reflection for: proofs, olympiad-style questions, complex strategy problems, or situations where self-correction is critical.
- Use cot for: routine arithmetic, algebraic manipulation, standard calculus, straightforward word problems.
- self-reflection and cot are mutually exclusive: choose exactly ONE.

ORDERING RULES:
- If reframe is selected, it must be first.
- The main reasoning tool (self-reflection or cot) comes after any reframe.
- numeric verifier (if present) comes immediately after the reasoning tool.
- verifier (if present) comes after numeric verifier.
- summarizer (if present) is always last.

HARD CONSTRAINTS:
- If numeric terms or calculations are present, numeric verifier is mandatory.
- Max sequence length is 3 tools.
- Never include both self-reflection and cot in the same sequence.

Return JSON ONLY: {"tools": ["tool1", "tool2", ...]})PROMPT";

const char* kComputeSelectorSystem =
R"PROMPT(You are a compute strategy selector for a specific math problem.

Task:

Given the user's math question, select ONE test-time compute strategy and
an integer parameter. There is NO default or preferred strategy: choose
the option that best fits the structure of the problem.

Strategies:
- best of n: Run the same reasoning tool multiple times independently and select the best final trajectory using a reward/verification model.
- beam search: Maintain multiple candidate reasoning trajectories in parallel and expand them step by step.
- lookahead: Explore and compare a small number of possible continuations of the current reasoning before committing.

Guidelines:
- Multiple distinct solution paths, case analysis, or branching logic -> beam search (param in [3, 6]).
- Need to compare or evaluate intermediate reasoning steps explicitly, or anticipate different local continuations -> lookahead (param in [2, 4]).
- Clear, stable, single-path reasoning where independent samples may still help avoid local mistakes -> best of n (param in [3, 5]).

Output requirements:
- Respond with a SINGLE JSON object ONLY.
- No prose, no markdown, no explanations.

Schema: {"strategy": "best of n|beam search|lookahead", "param": int})PROMPT";

const char* kComputeSelector =
R"PROMPT(Choose the most suitable compute strategy for solving this problem.

Input:

Tool: {tool}

Plan: {plan}

Problem: {obs}

You must select exactly ONE of: best of n, beam search, lookahead

Strategy selection rules (no default, choose what fits best):
- Multiple possible solution paths or explicit case analysis -> beam search (integer param between 3 and 6).
- Need to compare or evaluate intermediate reasoning steps or local branches -> lookahead (integer param between 2 and 4).
- Clear, stable reasoning path where extra independent samples help catch local errors -> best of n (integer param between 3 and 5).
- For highly complex multi-step reasoning with significant uncertainty or branching, prefer beam search with a higher param (4-8).

Output requirements:
- Return only a JSON dict.
- No prose, no markdown, no additional text.

Format: {"strategy": "<beam search|lookahead|best of n>", "param": <int>})PROMPT";

const char* kCotStep =
R"PROMPT(You are solving a math problem step by step with deliberate reasoning.

Task:

Choose the NEXT action from the list below and explain your reasoning for this choice.
You are not finishing the full solution in this step.

Action set:
- ParseProblem: Extract key variables, conditions and constraints.
- ClassifySubjectDifficulty: Determine subject area (Algebra, Geometry, etc.) and difficulty.
- ReformulateProblem: Restate the problem in clearer or more formal notation.
- CheckAssumptions: Identify implicit domain constraints or assumptions.
- DecomposeSubproblems: Break the main problem into smaller sub-tasks or cases.
- IdentifyToolsFormulas: List relevant formulas, theorems or tools.
- EstimateFeasibilityCheck: Do a quick plausibility / bounds check.
- PerformComputation: Execute an algebraic or numeric computation step.
- CaseAnalysis: Carry out one case in a case-by-case analysis.
- ConstructDiagramOrAuxiliary: For geometry/spatial tasks, define an auxiliary construction.
- CombineResults: Combine results from sub-tasks or cases.
- SimplifyFinalizeExpression: Simplify the final expression into standard form.
- SanityCheckFinalAnswer: Check boundary values or special cases.
- BoxFinalAnswer: Format the final answer in the expected style.
- ReviewSolution: Review the solution chain for logical consistency.
- GeneraliseOrEdgeCaseCheck: Consider extreme or boundary cases.
- FormatSolutionText: Prepare the full derivation/solution text.

Rules:
- Output ONLY the following two XML blocks, in this exact order:
  1. <reasoning>Clear, concise explanation of why you chose the next action</reasoning>
  2. <action>ActionName: one-line description</action>
- Do NOT solve the problem completely in this step.
- Do NOT add any other text before, after, or between the tags.
- Keep reasoning focused and efficient.

Output format (exact):

<reasoning>...</reasoning>

<action>ActionName: one-line description</action>)PROMPT";

const char* kSelfReflectionStep =
R"PROMPT(You are solving a math problem using self-reflective reasoning.

This is your INITIAL ATTEMPT at choosing the next action. You know that your
choice and reasoning will be critiqued and refined later.

Action set:
- ParseProblem: Extract key variables, conditions and constraints.
- ClassifySubjectDifficulty: Determine the subject area and difficulty.
- ReformulateProblem: Restate the problem clearly or formally.
- CheckAssumptions: Identify implicit domain constraints or assumptions.
- DecomposeSubproblems: Break the problem into smaller sub-tasks or cases.
- IdentifyToolsFormulas: List relevant formulas, theorems or tools.
- EstimateFeasibilityCheck: Do a quick plausibility / bounds check.
- PerformComputation: Execute an algebraic or numeric computation step.
- CaseAnalysis: Carry out one case in a case-by-case analysis.
- ConstructDiagramOrAuxiliary: Define auxiliary constructions for geometry/spatial tasks.
- CombineResults: Combine results from sub-tasks or cases.
- SimplifyFinalizeExpression: Simplify the final expression into standard form.
- SanityCheckFinalAnswer: Check boundary values or special cases.
- BoxFinalAnswer: Format the final answer in the expected style.
- ReviewSolution: Review the solution chain for logical consistency.
- GeneraliseOrEdgeCaseCheck: Consider extreme or boundary cases.
- FormatSolutionText: Prepare the final solution write-up.

Instructions:
1. Analyze the current state of the problem thoroughly.
2. Consider multiple possible next actions.
3. Explain your reasoning in detail, including:
   - Why this action is strategically important.
   - What specific insight or progress it will provide.
   - Potential challenges or edge cases.
4. Be thoughtful and explicit; this will later be critiqued and refined.

Output format (exact):

<reasoning>Thorough explanation of why this action is the best next step, including potential pitfalls and considerations</reasoning>

<action>ActionName: detailed description of what this action will accomplish</action>

Rules:
- Do NOT solve the problem completely in this step.
- Do NOT add any text outside the XML tags.
- Consider alternative approaches and justify your choice.
- Be explicit about assumptions and potential error sources.)PROMPT";

const char* kPrmScoring =
R"PROMPT(You are a process reward model (PRM) that scores the correctness of a SINGLE algebraic step.

Task:

Given ONE transformation from a previous expression to a new expression,
decide whether the step is mathematically valid.

Verification Rules (only these):
1. Is the transformation algebraically legal?
2. Does it preserve equality, inequality, or the intended relationship?
3. Are arithmetic operations correct?
4. Ignore global strategy; focus ONLY on this local step.

Output requirements:
- Output MUST be valid JSON only.
- No prose, no markdown, no extra text.

Example format: {"is correct": true, "confidence": 0.95}

Confidence scale:
- 1.0: Step is fully correct and mathematically sound.
- 0.5: Step is ambiguous, partially correct, or you are unsure.
- 0.0: Step is mathematically incorrect or invalid.

Return JSON ONLY.)PROMPT";

const char* kFinalAnswerSystem =
R"PROMPT(You are a mathematical problem solver.
Given full reasoning, your task is ONLY to extract the final numerical or algebraic answer
in the required format.)PROMPT";

const char* kFinalAnswerUser =
R"PROMPT(QUESTION/PROBLEM: {problem}

PLAN FOLLOWED: {plan}

FULL REASONING AND ANALYSIS: {full reasoning}

Task:

Analyze the question, the plan, and all the reasoning above.
Then provide ONLY the final answer in the following JSON format,
with no additional explanation or text:

{"answer": "<final answer here>"})PROMPT";

const char* kDirectSolveSystem =
R"PROMPT(You are an expert mathematical problem solver.

Task:

Solve the given problem completely and output ONLY the final answer
in a strict JSON format.

Principles:
1. Read the problem carefully and identify what is being asked.
2. Apply appropriate mathematical techniques and formulas.
3. Perform all necessary calculations accurately.
4. Provide the final answer in the required JSON format.

Output requirement:
- Only valid JSON, no extra text or markdown.)PROMPT";

const char* kDirectSolve =
R"PROMPT(Solve the following mathematical problem and provide ONLY the final answer in JSON format.

Examples:

Example 1:

Problem: Find the domain of the expression $\frac{\sqrt{x-2}}{\sqrt{5-x}}$.

JSON Output: {"answer": "[2,5)"}

Example 2:

Problem: If $\det \mathbf{A} = 2$ and $\det \mathbf{B} = 12,$ find $\det (\mathbf{A} \mathbf{B})$.

JSON Output: {"answer": "24"}

Example 3:

Problem: Terrell usually lifts two 20-pound weights 12 times. If he uses two 15-pound weights
instead, how many times must Terrell lift them in order to lift the same total weight?

JSON Output: {"answer": "16"}

Example 4:

Problem: If the system of equations $6x - 4y = a$, $6y - 9x = b$ has a solution $(x, y)$ with $x$ and $y$
nonzero, find $a/b$ assuming $b$ is nonzero.

JSON Output: {"answer": "-$\frac{2}{3}$"}

Now solve this problem:

Problem: {problem}

STRICT REQUIREMENTS:
1. Solve the problem completely.
2. Provide ONLY the final answer.
3. Output must be valid JSON in this exact format: {"answer": "<your final answer>"}.
4. Do NOT include explanation, reasoning, or additional text.
5. Do NOT use markdown or code blocks.
6. The answer may be in LaTeX.
7. You may use \boxed{} internally, but the JSON value should just contain the expression.

Output format (mandatory): {"answer": "<your final answer>"})PROMPT";

const char* kUnstructuredSystem =
R"PROMPT(You are an expert mathematical problem solver.
Solve math problems efficiently and clearly by reasoning step by step.
Always put your final answer within \boxed{} and provide no extra commentary
outside the reasoning itself.)PROMPT";

const char* kUnstructuredUser =
R"PROMPT(Solve the following math problem efficiently and clearly.
Please reason step by step, and put your final answer within \boxed{}.

PROBLEM: {problem}

OPTIONAL PLAN: {plan}

PARTIAL OR DRAFT REASONING: {full reasoning}

Continue the reasoning if needed, then give your final answer.

Rules:
1. Include your own step-by-step reasoning.
2. End with exactly one final answer formatted as: \boxed{...}

Do NOT:
- Write phrases like "Final Answer:".
- Quote the problem again.
- Output multiple boxed answers.
- Add commentary before or after the reasoning.
- Apologize or hedge about correctness.

Your last line MUST be the single boxed final answer.)PROMPT";

PromptTemplate make(PromptRole role, const char* body, std::vector<std::string> placeholders) {
    return PromptTemplate{role, body, std::move(placeholders)};
}

} // namespace

PromptSet PromptSet::defaults() {
    PromptSet set;
    auto put = [&set](PromptTemplate t) { set.templates_.emplace(t.role, std::move(t)); };
    put(make(PromptRole::SystemMath, kSystemMath, {}));
    put(make(PromptRole::Planning, kPlanning, {"problem"}));
    put(make(PromptRole::ToolSelectorSystem, kToolSelectorSystem, {}));
    put(make(PromptRole::ToolSelector, kToolSelector, {"plan", "obs"}));
    put(make(PromptRole::ComputeSelectorSystem, kComputeSelectorSystem, {}));
    put(make(PromptRole::ComputeSelector, kComputeSelector, {"tool", "plan", "obs"}));
    put(make(PromptRole::CotStep, kCotStep, {}));
    put(make(PromptRole::SelfReflectionStep, kSelfReflectionStep, {}));
    put(make(PromptRole::PrmScoring, kPrmScoring, {}));
    put(make(PromptRole::FinalAnswerSystem, kFinalAnswerSystem, {}));
    put(make(PromptRole::FinalAnswerUser, kFinalAnswerUser, {"problem", "plan", "full reasoning"}));
    put(make(PromptRole::DirectSolveSystem, kDirectSolveSystem, {}));
    put(make(PromptRole::DirectSolve, kDirectSolve, {"problem"}));
    put(make(PromptRole::UnstructuredSystem, kUnstructuredSystem, {}));
    put(make(PromptRole::UnstructuredUser, kUnstructuredUser, {"problem", "plan", "full reasoning"}));
    return set;
}

const PromptTemplate& PromptSet::get(PromptRole role) const {
    auto it = templates_.find(role);
    if (it == templates_.end())
        throw ConfigError("no template registered for role " + to_string(role));
    return it->second;
}

void PromptSet::override_body(PromptRole role, const std::string& body) {
    PromptTemplate& t = templates_.at(role);
    for (const std::string& name : t.placeholders) {
        if (body.find("{" + name + "}") == std::string::npos)
            throw ConfigError("override for " + to_string(role) +
                              " drops required placeholder {" + name + "}");
    }
    t.body = body;
    if (std::find(overridden_.begin(), overridden_.end(), role) == overridden_.end())
        overridden_.push_back(role);
}

std::string PromptSet::render(PromptRole role,
                              const std::map<std::string, std::string>& bindings) const {
    const PromptTemplate& t = get(role);
    for (const auto& [name, value] : bindings) {
        if (std::find(t.placeholders.begin(), t.placeholders.end(), name) ==
            t.placeholders.end())
            throw ConfigError("template " + to_string(role) + " has no placeholder {" +
                              name + "}");
    }
    std::string out = t.body;
    for (const std::string& name : t.placeholders) {
        auto it = bindings.find(name);
        if (it == bindings.end())
            throw ConfigError("placeholder {" + name + "} of template " + to_string(role) +
                              " is unbound");
        const std::string pattern = "{" + name + "}";
        std::size_t pos = 0;
        while ((pos = out.find(pattern, pos)) != std::string::npos) {
            out.replace(pos, pattern.size(), it->second);
            pos += it->second.size();
        }
    }
    return out;
}

// ===== context assembly =====

std::string format_history(const std::vector<Step>& steps) {
    if (steps.empty()) return "(none yet)";
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i) out += "\n";
        out += std::to_string(i + 1) + ". ";
        if (steps[i].action_label) out += "[" + *steps[i].action_label + "] ";
        out += steps[i].content;
    }
    return out;
}

std::string full_reasoning_text(const std::vector<Step>& steps) {
    std::string out;
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (i) out += "\n\n";
        out += "Step " + std::to_string(i + 1) + ": " + steps[i].content;
    }
    return out;
}

std::string render_step_context(const std::string& obs, const std::string& plan,
                                const std::vector<Step>& history) {
    std::string out = "Problem: " + obs + "\n\n";
    if (!plan.empty()) out += "Plan: " + plan + "\n\n";
    out += "Steps so far:\n" + format_history(history) + "\n\nChoose the next action.";
    return out;
}

std::string render_transition(const std::string& previous, const std::string& current) {
    return "Previous expression:\n" + previous + "\n\nNew expression:\n" + current;
}

std::string render_reframe_request(const std::string& problem) {
    return "Restate the following math problem in a clear, unambiguous form.\n"
           "Keep every constraint; do not begin solving it.\n"
           "Respond with the restated problem only.\n\nProblem: " + problem;
}

std::string render_numeric_verify_request(const std::string& reasoning) {
    return "Check the arithmetic and numeric manipulations in the reasoning below.\n"
           "Respond with a single verification step stating whether the numeric work "
           "holds and why.\n\nReasoning:\n" + reasoning;
}

std::string render_verify_request(const std::string& reasoning) {
    return "Check the logical and structural correctness of the reasoning below.\n"
           "Respond with a single verification step stating whether the argument "
           "holds and why.\n\nReasoning:\n" + reasoning;
}

std::string render_summarize_request(const std::string& reasoning) {
    return "Compress the reasoning below into a single concise summary step that "
           "preserves the key derivations and the conclusion.\n\nReasoning:\n" + reasoning;
}

} // namespace ttc
