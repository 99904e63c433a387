#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ttc/errors.hpp"
#include "ttc/harness.hpp"
#include "ttc/mock_fixture.hpp"

namespace {

struct Tally {
    int verifiable = 0;
    int correct = 0;
    int failed = 0;
};

Tally tally(const std::vector<ttc::ResultRecord>& results) {
    Tally t;
    for (const ttc::ResultRecord& r : results) {
        if (r.failed) ++t.failed;
        if (!r.correct.has_value()) continue;
        ++t.verifiable;
        if (*r.correct) ++t.correct;
    }
    return t;
}

std::string join_rewards(const std::vector<double>& rewards) {
    std::ostringstream os;
    for (std::size_t i = 0; i < rewards.size(); ++i) {
        if (i) os << " ";
        os << rewards[i];
    }
    return os.str();
}

int cmd_run(const std::string& config_path, const std::string& dataset_path,
            const std::string& out_dir, const std::string& script_override, bool no_session) {
    ttc::RunConfig config = ttc::load_run_config(config_path);
    if (!script_override.empty()) {
        config.backend.kind = "scripted";
        config.backend.script_path = script_override;
    }
    const std::vector<ttc::Problem> problems = ttc::ingest_dataset_file(dataset_path);
    auto backend = ttc::make_backend(config);

    const bool record = !no_session;
    ttc::RunArtifacts artifacts = ttc::run_problems(config, problems, backend, record);
    ttc::write_run_dir(out_dir, config, problems, artifacts);

    const Tally t = tally(artifacts.results);
    std::cout << "config " << config.effective_label() << " (" << ttc::to_string(config.mode)
              << "): " << artifacts.results.size() << " problems, " << t.correct << "/"
              << t.verifiable << " correct";
    if (t.failed) std::cout << ", " << t.failed << " failed";
    std::cout << "\nmodel calls recorded: " << artifacts.ledger.size() << "\nwrote " << out_dir
              << "\n";
    return 0;
}

int cmd_replay(const std::string& run_dir) {
    const ttc::ReplayOutcome outcome = ttc::replay_run_dir(run_dir);
    for (const std::string& note : outcome.notes) std::cout << note << "\n";
    std::cout << (outcome.ok ? "REPLAY PASS" : "REPLAY FAIL") << "\n";
    return outcome.ok ? 0 : 1;
}

int cmd_report(const std::string& results_root, const std::string& out_dir) {
    const ttc::ReportFiles report = ttc::build_report(results_root);
    for (const std::string& warning : report.warnings)
        std::cerr << "warning: " << warning << "\n";
    const std::string target = out_dir.empty() ? results_root : out_dir;
    ttc::write_report_files(report, target);
    std::cout << "wrote accuracy_by_mode.csv, accuracy_by_level.csv, usage.csv, tradeoff.csv to "
              << target << "\n";
    return 0;
}

int cmd_mock_demo(const std::string& out_dir) {
    const ttc::Problem problem = ttc::demo::demo_problem();
    const std::vector<ttc::Problem> problems{problem};

    const ttc::RunConfig direct_cfg = ttc::demo::demo_config(ttc::RunMode::Direct);
    const ttc::RunConfig adaptive_cfg = ttc::demo::demo_config(ttc::RunMode::DynamicPrmSel);
    const ttc::RunArtifacts direct =
        ttc::run_problems(direct_cfg, problems, ttc::demo::demo_backend(), true);
    const ttc::RunArtifacts adaptive =
        ttc::run_problems(adaptive_cfg, problems, ttc::demo::demo_backend(), true);

    const ttc::ResultRecord& d = direct.results.front();
    const ttc::ResultRecord& a = adaptive.results.front();

    std::cout << "problem " << problem.id << " (reference answer "
              << *problem.reference_answer << ")\n\n";
    std::cout << "single-pass direct:\n  answer: " << d.answer.value_or("(none)") << "  -> "
              << (d.correct.value_or(false) ? "correct" : "incorrect") << "\n  model calls: "
              << direct.ledger.size() << "\n\n";
    std::cout << "adaptive (plan + tools + lookahead + reward selection):\n  answer: "
              << a.answer.value_or("(none)") << "  -> "
              << (a.correct.value_or(false) ? "correct" : "incorrect")
              << "\n  selected iteration: " << a.selected_iteration
              << "\n  iteration rewards: " << join_rewards(a.rewards)
              << "\n  tools: " << (a.iteration_tools.empty() ? "-" : a.iteration_tools.front())
              << "\n  strategy: "
              << (a.iteration_strategies.empty() ? "-" : a.iteration_strategies.front())
              << "\n  model calls: " << adaptive.ledger.size() << "\n";

    if (!out_dir.empty()) {
        ttc::write_run_dir(out_dir + "/direct", direct_cfg, problems, direct);
        ttc::write_run_dir(out_dir + "/adaptive", adaptive_cfg, problems, adaptive);
        std::cout << "\nwrote " << out_dir << "/direct and " << out_dir << "/adaptive\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive test-time compute orchestration"};
    app.require_subcommand(1);

    std::string config_path, dataset_path, out_dir, script_override, run_dir, results_root;
    bool no_session = false;

    CLI::App* run = app.add_subcommand("run", "execute a configured run over a dataset");
    run->add_option("--config", config_path, "run config JSON")->required();
    run->add_option("--dataset", dataset_path, "problems JSONL")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--script", script_override, "scripted-backend JSON (overrides config)");
    run->add_flag("--no-session", no_session, "skip session recording (disables replay)");

    CLI::App* replay = app.add_subcommand("replay", "re-run a recorded session and diff outputs");
    replay->add_option("--traces", run_dir, "run directory to replay")->required();

    CLI::App* report = app.add_subcommand("report", "aggregate runs into CSV reports");
    report->add_option("--results", results_root, "run directory or directory of runs")->required();
    report->add_option("--out", out_dir, "where to write CSVs (default: results root)");

    CLI::App* demo = app.add_subcommand("mock-demo", "scripted direct-vs-adaptive comparison");
    demo->add_option("--out", out_dir, "also persist both demo runs here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(config_path, dataset_path, out_dir, script_override, no_session);
        if (replay->parsed()) return cmd_replay(run_dir);
        if (report->parsed()) return cmd_report(results_root, out_dir);
        if (demo->parsed()) return cmd_mock_demo(out_dir);
    } catch (const ttc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
