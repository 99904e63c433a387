#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ttc/controller.hpp"
#include "ttc/gateway.hpp"
#include "ttc/ledger.hpp"
#include "ttc/prm.hpp"
#include "ttc/types.hpp"

// ===== bench harness =====
//
// Runs a dataset through one of five evaluation modes:
//
//   direct        one single-pass JSON-answer call per problem
//   direct_prm    K independent direct generations + reward-based selection
//   dynamic       one controller-configured iteration (plan, tools, strategy)
//   dynamic_prm   K controller-configured iterations + reward-based selection
//   fixed_grid    a fixed tool/strategy/parameter cell run for I iterations
//
// One problem's failure never aborts the run: the problem is recorded as
// failed (and counted incorrect when it has a reference answer) and the run
// continues.  Runs are deterministic for a fixed config + script: rerunning
// produces byte-identical result and ledger files.

namespace ttc {

enum class RunMode { Direct, DirectPrmSel, Dynamic, DynamicPrmSel, FixedGrid };

std::string to_string(RunMode m);
std::optional<RunMode> run_mode_from_string(const std::string& name);

struct ModelSpec {
    std::string model_id;
    std::int64_t param_count = 0;
    int context_length = 0;
};

struct BackendSpec {
    std::string kind = "scripted";            // "scripted" | "http"
    std::string script_path;                   // scripted: JSON script file
    std::string base_url_env = "TTC_BASE_URL"; // http: env var holding the URL
    std::string api_key_env = "TTC_API_KEY";   // http: env var holding the key
    int timeout_ms = 60000;
};

struct RunConfig {
    RunMode mode = RunMode::DynamicPrmSel;
    std::string label;                  // report tag; defaults from mode/cell
    int iterations = 10;                // K (selection modes) or I (fixed grid)
    std::uint64_t seed = 0;
    int max_steps = 12;
    int branching = 3;
    int max_rollout_paths = 128;
    double alpha = 0.1;
    double kappa = 1e6;
    DecodingParams base_decoding;       // {0.7, 0.9, 1024}
    ModelSpec base, controller, prm;
    PrmAdapter prm_adapter = PrmAdapter::VerdictJson;
    int max_attempts = 2;
    RepairFallback fallback = RepairFallback::Error;
    std::optional<ToolKind> fixed_tool;         // fixed_grid: cot|self_reflection
    std::optional<ComputePlan> fixed_compute;   // fixed_grid: param in {1,5,10}
    BackendSpec backend;

    std::string effective_label() const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& config);

// All 54 fixed-sweep cells ({cot, self_reflection} x three strategies x
// params {1,5,10} x iterations {1,5,10}) derived from a base config.
std::vector<RunConfig> fixed_grid_cells(const RunConfig& base);

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

// JSONL, one problem per line: {"id", "problem", "answer"?, "level"?,
// "subject"?}.  Malformed lines and duplicate ids raise IngestError with the
// line number; a missing reference answer is allowed (the problem is then
// reported as unverifiable rather than guessed at).
std::vector<Problem> ingest_dataset(std::istream& in);
std::vector<Problem> ingest_dataset_file(const std::string& path);

// ---------------------------------------------------------------------------
// answer checking
// ---------------------------------------------------------------------------

// Trim, unwrap \boxed{...}, strip $ delimiters, drop whitespace.
std::string normalize_answer(const std::string& s);

// Parse "3", "-1.5", "3/4", "\frac{3}{4}" style values.
std::optional<long double> parse_rational(const std::string& s);

// Normalized exact match, else numeric comparison at 1e-9 relative
// tolerance.  Never throws: unparseable pairs just compare unequal.
bool check_answer(const std::string& candidate, const std::string& reference);

// ---------------------------------------------------------------------------
// results
// ---------------------------------------------------------------------------

struct ResultRecord {
    std::string problem_id;
    std::string config_label;
    std::string mode;
    std::optional<int> level;
    std::optional<std::string> answer;
    int selected_iteration = 0;               // 1-based; 0 when nothing ran
    std::vector<double> rewards;              // one entry per iteration
    std::vector<std::string> iteration_tools;      // tool-sequence label per iteration
    std::vector<std::string> iteration_strategies; // compute label per iteration
    std::optional<bool> correct;              // nullopt = unverifiable
    bool failed = false;
    std::string failure;
};

nlohmann::json result_to_json(const ResultRecord& r);
ResultRecord result_from_json(const nlohmann::json& j);
std::string results_to_jsonl(const std::vector<ResultRecord>& results);

struct RunArtifacts {
    std::vector<ResultRecord> results;
    ComputeLedger ledger;
    std::string traces_jsonl;
    std::string session_json;   // empty unless session recording was on
};

std::shared_ptr<ChatBackend> make_backend(const RunConfig& config);

// Execute the configured mode over `problems`.  `record_session` captures
// every response so the run can be replayed through a scripted backend.
RunArtifacts run_problems(const RunConfig& config, const std::vector<Problem>& problems,
                          std::shared_ptr<ChatBackend> backend, bool record_session = false);

// Persist a run: results.jsonl, ledger.jsonl, traces.jsonl, config.json,
// problems.jsonl, and session.json when recorded.
void write_run_dir(const std::string& dir, const RunConfig& config,
                   const std::vector<Problem>& problems, const RunArtifacts& artifacts);

// Re-execute a persisted run from its recorded session and compare the
// regenerated results/ledger bytes against the files on disk.
struct ReplayOutcome {
    bool ok = false;
    std::vector<std::string> notes;
};
ReplayOutcome replay_run_dir(const std::string& dir);

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

// Aggregate one or more persisted runs (results_root itself, or its
// immediate subdirectories) into four CSVs.
struct ReportFiles {
    std::string accuracy_by_mode_csv;
    std::string accuracy_by_level_csv;
    std::string usage_csv;
    std::string tradeoff_csv;
    std::vector<std::string> warnings;
};

ReportFiles build_report(const std::string& results_root);
void write_report_files(const ReportFiles& report, const std::string& out_dir);

} // namespace ttc
