#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttc/errors.hpp"

// ===== compute accounting =====
//
// Every model call in the system lands here as one CallRecord.  The ledger is
// a value type: run fragments are built independently (per iteration, per
// problem, per worker) and merged; the two cost metrics are computed over the
// merged whole.  Metric summation follows the canonical record order, so a
// given set of records always produces bit-identical numbers.

namespace ttc {

// Which hat the model was wearing for a call.
enum class Role {
    Base,        // solution/step generation
    Controller,  // planning, tool & strategy selection, answer extraction
    Prm,         // step-transition scoring
};

std::string to_string(Role r);
std::optional<Role> role_from_string(const std::string& name);

// Static facts about a model endpoint used for cost metrics.
struct BackendProfile {
    std::string model_id;
    std::int64_t param_count = 0;   // > 0
    int context_length = 0;         // tokens, > 0
    Role role = Role::Base;
};

// One model call.  `ordinal` is the call's position within its
// (purpose, problem) stream and exists so records sort canonically.
struct CallRecord {
    std::string model_id;
    Role role = Role::Base;
    int prompt_tokens = 0;
    int completion_tokens = 0;
    int forward_count = 1;          // forward passes this record accounts for
    std::string problem_id;
    std::string purpose;            // "plan", "step", "prm", ...
    int ordinal = 0;
};

class ComputeLedger {
public:
    ComputeLedger() = default;
    explicit ComputeLedger(double alpha, double kappa) : alpha_(alpha), kappa_(kappa) {}

    void register_profile(const BackendProfile& profile);
    const BackendProfile& profile(const std::string& model_id) const;
    bool has_profile(const std::string& model_id) const;
    const std::map<std::string, BackendProfile>& profiles() const { return profiles_; }

    void record(CallRecord rec);
    const std::vector<CallRecord>& records() const { return records_; }
    std::size_t size() const { return records_.size(); }

    double alpha() const { return alpha_; }
    double kappa() const { return kappa_; }

    // Combine two fragments.  Profiles must agree wherever both sides know a
    // model; conflicting profiles raise AccountingError.
    static ComputeLedger merge(const ComputeLedger& a, const ComputeLedger& b);

    // Theoretical transformer cost:
    //   F = mean over problems of  sum_models 2 * M * min(Tbar, L_ctx) * G
    // where G counts forward passes for that (problem, model), and Tbar is the
    // mean prompt+completion tokens per forward pass.  Empty ledger -> 0.
    // Requires a profile for every recorded model.
    double theoretical_flops() const;

    // Search-cost intensity:
    //   S = Gbar_base * Tbar_base * (1 + alpha * Cbar) / kappa
    // with Gbar_base = base generations per problem, Tbar_base = mean
    // completion tokens per base generation, Cbar = controller+verifier calls
    // per problem.  Raises UndefinedIntensityError when there are no base
    // generations.
    double compute_intensity() const;

    // Records in canonical order: (problem, role, purpose, ordinal, model).
    std::vector<CallRecord> sorted_records() const;

    // One record per line; round-trips bit-stably.
    void write_jsonl(std::ostream& out) const;
    static ComputeLedger read_jsonl(std::istream& in, double alpha = 0.1,
                                    double kappa = 1e6);

private:
    std::vector<CallRecord> records_;
    std::map<std::string, BackendProfile> profiles_;
    double alpha_ = 0.1;
    double kappa_ = 1e6;
};

} // namespace ttc
