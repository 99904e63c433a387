#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttc/types.hpp"

// ===== prompt templates =====
//
// Every prompt the engine sends is rendered from a named template in this
// registry.  Template bodies are versioned text assets compiled into the
// library; a config may override individual bodies from files, which is
// reported through `overridden()` so runs stay attributable.  Rendering is
// strict and byte-stable: the same template and bindings always produce the
// same bytes, every declared placeholder must be bound, and unknown binding
// keys are rejected.

namespace ttc {

enum class PromptRole {
    SystemMath,             // shared solver system prompt
    Planning,               // produce <plan>...</plan>
    ToolSelectorSystem,
    ToolSelector,           // produce {"tools": [...]}
    ComputeSelectorSystem,
    ComputeSelector,        // produce {"strategy": ..., "param": ...}
    CotStep,                // next-action instruction, chain of thought
    SelfReflectionStep,     // next-action instruction, reflective variant
    PrmScoring,             // step-transition verdict JSON
    FinalAnswerSystem,
    FinalAnswerUser,        // produce {"answer": ...}
    DirectSolveSystem,
    DirectSolve,            // single-pass JSON answer
    UnstructuredSystem,
    UnstructuredUser,       // single-pass boxed-answer solution
};

std::string to_string(PromptRole role);
std::optional<PromptRole> prompt_role_from_string(const std::string& name);
std::vector<PromptRole> all_prompt_roles();

struct PromptTemplate {
    PromptRole role = PromptRole::SystemMath;
    std::string body;
    std::vector<std::string> placeholders;  // names without braces, e.g. "problem"
};

class PromptSet {
public:
    // The built-in templates.
    static PromptSet defaults();

    const PromptTemplate& get(PromptRole role) const;

    // Replace one body, keeping the declared placeholder list.  Throws
    // ConfigError when the new body drops a declared placeholder.
    void override_body(PromptRole role, const std::string& body);
    const std::vector<PromptRole>& overridden() const { return overridden_; }

    // Substitute every declared placeholder.  All declared names must be
    // bound (empty values allowed) and no unknown names may be passed.
    std::string render(PromptRole role,
                       const std::map<std::string, std::string>& bindings) const;

private:
    std::map<PromptRole, PromptTemplate> templates_;
    std::vector<PromptRole> overridden_;
};

// ---------------------------------------------------------------------------
// deterministic context assembly
// ---------------------------------------------------------------------------
// Prompt-side strings that are built from run state rather than stored as
// templates.  Kept here, pure and byte-stable, so they are golden-testable.

// "1. [ActionLabel] content" lines; "(none yet)" for an empty history.
std::string format_history(const std::vector<Step>& steps);

// Concatenated step contents used as {full reasoning}.
std::string full_reasoning_text(const std::vector<Step>& steps);

// User message for one next-step generation call.
std::string render_step_context(const std::string& obs, const std::string& plan,
                                const std::vector<Step>& history);

// User message for one step-transition scoring call.
std::string render_transition(const std::string& previous, const std::string& current);

// User messages for the auxiliary tools (these run against the base model and
// must emit exactly one step's worth of text).
std::string render_reframe_request(const std::string& problem);
std::string render_numeric_verify_request(const std::string& reasoning);
std::string render_verify_request(const std::string& reasoning);
std::string render_summarize_request(const std::string& reasoning);

} // namespace ttc
