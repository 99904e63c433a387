#pragma once

#include <stdexcept>
#include <string>

namespace ttc {

// Root of the library's error hierarchy.  Every failure that crosses a module
// boundary is one of these, so callers can distinguish "the backend hiccuped"
// from "the model produced garbage we could not repair".
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// ===== gateway =====

// Transport-level failure talking to a model backend (network error,
// non-retryable HTTP status, missing scripted response, unregistered model).
class GatewayError : public Error {
public:
    using Error::Error;
};

// Raised before dispatch when the estimated prompt size exceeds the model's
// context window.
class ContextOverflowError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

// ===== scoring =====

// Verifier output could not be turned into a score even after repair.
// `transition_index` is 1-based; 0 means "not tied to a specific transition".
class ScoringError : public Error {
public:
    ScoringError(const std::string& what, int transition_index = 0)
        : Error(what), transition_index(transition_index) {}
    int transition_index;
};

// ===== controller =====

class PlanningError : public Error {
public:
    using Error::Error;
};

class ToolSelectionError : public Error {
public:
    using Error::Error;
};

class ComputeSelectionError : public Error {
public:
    using Error::Error;
};

class StepGenerationError : public Error {
public:
    using Error::Error;
};

// Misuse of a controller operation (e.g. reframing after reasoning started).
class ControllerUsageError : public Error {
public:
    using Error::Error;
};

// ===== search =====

// A search strategy could not produce any complete candidate trajectory.
class StrategyError : public Error {
public:
    using Error::Error;
};

// Final-answer selection had nothing to select from.
class SelectionError : public Error {
public:
    using Error::Error;
};

// ===== ledger =====

// Inconsistent accounting inputs (conflicting model profiles on merge,
// metrics requested for an unregistered model, ...).
class AccountingError : public Error {
public:
    using Error::Error;
};

// Compute intensity is undefined when the ledger holds no base generations.
class UndefinedIntensityError : public AccountingError {
public:
    using AccountingError::AccountingError;
};

// ===== harness =====

// Dataset ingestion failure; carries the 1-based line number when known.
class IngestError : public Error {
public:
    IngestError(const std::string& what, int line = 0) : Error(what), line(line) {}
    int line;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace ttc
