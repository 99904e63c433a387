#include "ttc/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <utility>

#include "ttc/errors.hpp"
#include "ttc/http_backend.hpp"
#include "ttc/search.hpp"

namespace ttc {

namespace {

std::string trim_copy(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write file: " + path);
    out << content;
}

nlohmann::json parse_json_or_throw(const std::string& text, const std::string& what) {
    nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("invalid JSON in " + what);
    return j;
}

} // namespace

// ---------------------------------------------------------------------------
// run modes & config
// ---------------------------------------------------------------------------

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::Direct:        return "direct";
        case RunMode::DirectPrmSel:  return "direct_prm";
        case RunMode::Dynamic:       return "dynamic";
        case RunMode::DynamicPrmSel: return "dynamic_prm";
        case RunMode::FixedGrid:     return "fixed_grid";
    }
    return "direct";
}

std::optional<RunMode> run_mode_from_string(const std::string& name) {
    if (name == "direct") return RunMode::Direct;
    if (name == "direct_prm") return RunMode::DirectPrmSel;
    if (name == "dynamic") return RunMode::Dynamic;
    if (name == "dynamic_prm") return RunMode::DynamicPrmSel;
    if (name == "fixed_grid") return RunMode::FixedGrid;
    return std::nullopt;
}

std::string RunConfig::effective_label() const {
    if (!label.empty()) return label;
    if (mode == RunMode::FixedGrid && fixed_tool && fixed_compute) {
        std::ostringstream os;
        os << "grid-" << ttc::to_string(*fixed_tool) << "-" << ttc::to_string(fixed_compute->strategy)
           << "-p" << fixed_compute->param << "-i" << iterations;
        return os.str();
    }
    return ttc::to_string(mode);
}

namespace {

ModelSpec parse_model_spec(const nlohmann::json& j, const std::string& which) {
    if (!j.is_object()) throw ConfigError("models." + which + " must be an object");
    ModelSpec spec;
    spec.model_id = j.value("model_id", "");
    if (spec.model_id.empty()) throw ConfigError("models." + which + ".model_id is required");
    spec.param_count = j.value("param_count", std::int64_t{0});
    spec.context_length = j.value("context_length", 0);
    if (spec.param_count <= 0) throw ConfigError("models." + which + ".param_count must be > 0");
    if (spec.context_length <= 0) throw ConfigError("models." + which + ".context_length must be > 0");
    return spec;
}

nlohmann::json model_spec_to_json(const ModelSpec& spec) {
    return {{"model_id", spec.model_id},
            {"param_count", spec.param_count},
            {"context_length", spec.context_length}};
}

} // namespace

RunConfig parse_run_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    RunConfig c;

    const std::string mode_name = j.value("mode", "dynamic_prm");
    auto mode = run_mode_from_string(mode_name);
    if (!mode) throw ConfigError("unknown run mode: " + mode_name);
    c.mode = *mode;

    c.label = j.value("label", "");
    c.iterations = j.value("iterations", 10);
    if (c.iterations < 1) throw ConfigError("iterations must be >= 1");
    c.seed = j.value("seed", std::uint64_t{0});
    c.max_steps = j.value("max_steps", 12);
    if (c.max_steps < 1) throw ConfigError("max_steps must be >= 1");
    c.branching = j.value("branching", 3);
    if (c.branching < 1) throw ConfigError("branching must be >= 1");
    c.max_rollout_paths = j.value("max_rollout_paths", 128);
    if (c.max_rollout_paths < 1) throw ConfigError("max_rollout_paths must be >= 1");
    c.alpha = j.value("alpha", 0.1);
    c.kappa = j.value("kappa", 1e6);
    if (c.kappa <= 0.0) throw ConfigError("kappa must be > 0");

    if (j.contains("decoding")) {
        const auto& d = j.at("decoding");
        c.base_decoding.temperature = d.value("temperature", 0.7);
        c.base_decoding.top_p = d.value("top_p", 0.9);
        c.base_decoding.max_tokens = d.value("max_tokens", 1024);
        if (c.base_decoding.max_tokens < 1) throw ConfigError("decoding.max_tokens must be >= 1");
    }

    if (!j.contains("models")) throw ConfigError("run config requires a models section");
    const auto& models = j.at("models");
    c.base = parse_model_spec(models.value("base", nlohmann::json()), "base");
    c.controller = parse_model_spec(models.value("controller", nlohmann::json()), "controller");
    c.prm = parse_model_spec(models.value("prm", nlohmann::json()), "prm");

    const std::string adapter = j.value("prm_adapter", "verdict_json");
    if (adapter == "verdict_json") c.prm_adapter = PrmAdapter::VerdictJson;
    else if (adapter == "native_scalar") c.prm_adapter = PrmAdapter::NativeScalar;
    else throw ConfigError("unknown prm_adapter: " + adapter);

    if (j.contains("repair")) {
        const auto& r = j.at("repair");
        c.max_attempts = r.value("max_attempts", 2);
        if (c.max_attempts < 1) throw ConfigError("repair.max_attempts must be >= 1");
        const std::string fb = r.value("fallback", "error");
        if (fb == "error") c.fallback = RepairFallback::Error;
        else if (fb == "default_config") c.fallback = RepairFallback::DefaultConfig;
        else throw ConfigError("unknown repair.fallback: " + fb);
    }

    if (j.contains("fixed")) {
        const auto& f = j.at("fixed");
        const std::string tool_name = f.value("tool", "cot");
        auto tool = tool_from_string(tool_name);
        if (!tool) throw ConfigError("unknown fixed.tool: " + tool_name);
        if (*tool != ToolKind::CoT && *tool != ToolKind::SelfReflection)
            throw ConfigError("fixed.tool must be a reasoning tool (cot or self_reflection)");
        const std::string strat_name = f.value("strategy", "best_of_n");
        auto strat = strategy_from_string(strat_name);
        if (!strat) throw ConfigError("unknown fixed.strategy: " + strat_name);
        c.fixed_tool = *tool;
        c.fixed_compute = make_grid_plan(*strat, f.value("param", 1));
    }
    if (c.mode == RunMode::FixedGrid && (!c.fixed_tool || !c.fixed_compute))
        throw ConfigError("fixed_grid mode requires a fixed section (tool, strategy, param)");
    if (c.mode != RunMode::FixedGrid && c.fixed_tool)
        throw ConfigError("only fixed_grid mode accepts a fixed section");

    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        c.backend.kind = b.value("kind", "scripted");
        if (c.backend.kind != "scripted" && c.backend.kind != "http")
            throw ConfigError("backend.kind must be scripted or http");
        c.backend.script_path = b.value("script", "");
        c.backend.base_url_env = b.value("base_url_env", std::string("TTC_BASE_URL"));
        c.backend.api_key_env = b.value("api_key_env", std::string("TTC_API_KEY"));
        c.backend.timeout_ms = b.value("timeout_ms", 60000);
    }
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(parse_json_or_throw(read_text_file(path), path));
}

nlohmann::json config_to_json(const RunConfig& c) {
    nlohmann::json j{
        {"mode", to_string(c.mode)},
        {"label", c.label},
        {"iterations", c.iterations},
        {"seed", c.seed},
        {"max_steps", c.max_steps},
        {"branching", c.branching},
        {"max_rollout_paths", c.max_rollout_paths},
        {"alpha", c.alpha},
        {"kappa", c.kappa},
        {"decoding",
         {{"temperature", c.base_decoding.temperature},
          {"top_p", c.base_decoding.top_p},
          {"max_tokens", c.base_decoding.max_tokens}}},
        {"models",
         {{"base", model_spec_to_json(c.base)},
          {"controller", model_spec_to_json(c.controller)},
          {"prm", model_spec_to_json(c.prm)}}},
        {"prm_adapter", c.prm_adapter == PrmAdapter::VerdictJson ? "verdict_json" : "native_scalar"},
        {"repair",
         {{"max_attempts", c.max_attempts},
          {"fallback", c.fallback == RepairFallback::Error ? "error" : "default_config"}}},
        {"backend",
         {{"kind", c.backend.kind},
          {"script", c.backend.script_path},
          {"base_url_env", c.backend.base_url_env},
          {"api_key_env", c.backend.api_key_env},
          {"timeout_ms", c.backend.timeout_ms}}},
    };
    if (c.fixed_tool && c.fixed_compute) {
        j["fixed"] = {{"tool", ttc::to_string(*c.fixed_tool)},
                      {"strategy", ttc::to_string(c.fixed_compute->strategy)},
                      {"param", c.fixed_compute->param}};
    }
    return j;
}

std::vector<RunConfig> fixed_grid_cells(const RunConfig& base) {
    static const ToolKind kTools[] = {ToolKind::CoT, ToolKind::SelfReflection};
    static const Strategy kStrategies[] = {Strategy::BestOfN, Strategy::BeamSearch,
                                           Strategy::Lookahead};
    static const int kLevels[] = {1, 5, 10};

    std::vector<RunConfig> cells;
    for (ToolKind tool : kTools)
        for (Strategy strategy : kStrategies)
            for (int param : kLevels)
                for (int iters : kLevels) {
                    RunConfig c = base;
                    c.mode = RunMode::FixedGrid;
                    c.label.clear();
                    c.iterations = iters;
                    c.fixed_tool = tool;
                    c.fixed_compute = make_grid_plan(strategy, param);
                    cells.push_back(std::move(c));
                }
    return cells;
}

// ---------------------------------------------------------------------------
// dataset
// ---------------------------------------------------------------------------

std::vector<Problem> ingest_dataset(std::istream& in) {
    std::vector<Problem> problems;
    std::set<std::string> seen;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object())
            throw IngestError("malformed dataset line", line_no);

        Problem p;
        if (!j.contains("id") || !j.at("id").is_string())
            throw IngestError("dataset line missing string id", line_no);
        p.id = j.at("id").get<std::string>();
        if (p.id.empty()) throw IngestError("dataset line has empty id", line_no);
        if (!seen.insert(p.id).second)
            throw IngestError("duplicate problem id: " + p.id, line_no);

        if (!j.contains("problem") || !j.at("problem").is_string())
            throw IngestError("dataset line missing problem text", line_no);
        p.statement = j.at("problem").get<std::string>();
        if (trim_copy(p.statement).empty())
            throw IngestError("dataset line has empty problem text", line_no);

        if (j.contains("answer") && !j.at("answer").is_null()) {
            if (!j.at("answer").is_string())
                throw IngestError("dataset answer must be a string", line_no);
            p.reference_answer = j.at("answer").get<std::string>();
        }
        if (j.contains("level") && !j.at("level").is_null()) {
            if (!j.at("level").is_number_integer())
                throw IngestError("dataset level must be an integer", line_no);
            p.level = j.at("level").get<int>();
        }
        if (j.contains("subject") && !j.at("subject").is_null()) {
            if (!j.at("subject").is_string())
                throw IngestError("dataset subject must be a string", line_no);
            p.subject = j.at("subject").get<std::string>();
        }
        problems.push_back(std::move(p));
    }
    return problems;
}

std::vector<Problem> ingest_dataset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot open dataset: " + path);
    return ingest_dataset(in);
}

// ---------------------------------------------------------------------------
// answer checking
// ---------------------------------------------------------------------------

std::string normalize_answer(const std::string& s) {
    std::string t = trim_copy(s);
    if (auto boxed = extract_boxed(t)) t = *boxed;
    // Strip one or more layers of $...$ math delimiters.
    auto strip_dollars = [](std::string v) {
        v = trim_copy(v);
        while (v.size() >= 2 && v.front() == '$' && v.back() == '$')
            v = trim_copy(v.substr(1, v.size() - 2));
        return v;
    };
    t = strip_dollars(t);
    std::string out;
    out.reserve(t.size());
    for (char ch : t)
        if (!std::isspace(static_cast<unsigned char>(ch))) out.push_back(ch);
    return out;
}

std::optional<long double> parse_rational(const std::string& s) {
    std::string t = normalize_answer(s);
    if (t.empty()) return std::nullopt;

    long double sign = 1.0L;
    if (t.front() == '-') { sign = -1.0L; t.erase(t.begin()); }
    else if (t.front() == '+') { t.erase(t.begin()); }
    if (t.empty()) return std::nullopt;

    auto parse_number = [](const std::string& v) -> std::optional<long double> {
        if (v.empty()) return std::nullopt;
        errno = 0;
        char* end = nullptr;
        long double x = strtold(v.c_str(), &end);
        if (end != v.c_str() + v.size() || errno == ERANGE) return std::nullopt;
        return x;
    };

    // \frac{a}{b} / \dfrac{a}{b} / \tfrac{a}{b}
    for (const char* frac : {"\\frac", "\\dfrac", "\\tfrac"}) {
        const std::string head(frac);
        if (t.rfind(head, 0) == 0 && t.size() > head.size() && t[head.size()] == '{') {
            std::size_t i = head.size();
            auto read_group = [&](std::size_t from, std::size_t* next) -> std::optional<std::string> {
                if (from >= t.size() || t[from] != '{') return std::nullopt;
                int depth = 0;
                for (std::size_t k = from; k < t.size(); ++k) {
                    if (t[k] == '{') ++depth;
                    else if (t[k] == '}' && --depth == 0) {
                        *next = k + 1;
                        return t.substr(from + 1, k - from - 1);
                    }
                }
                return std::nullopt;
            };
            std::size_t after = 0;
            auto num = read_group(i, &after);
            if (!num) return std::nullopt;
            std::size_t after2 = 0;
            auto den = read_group(after, &after2);
            if (!den || after2 != t.size()) return std::nullopt;
            auto a = parse_number(*num);
            auto b = parse_number(*den);
            if (!a || !b || *b == 0.0L) return std::nullopt;
            return sign * (*a / *b);
        }
    }

    // a/b
    std::size_t slash = t.find('/');
    if (slash != std::string::npos && slash > 0 && slash + 1 < t.size()) {
        auto a = parse_number(t.substr(0, slash));
        auto b = parse_number(t.substr(slash + 1));
        if (a && b && *b != 0.0L) return sign * (*a / *b);
        return std::nullopt;
    }

    auto x = parse_number(t);
    if (!x) return std::nullopt;
    return sign * *x;
}

bool check_answer(const std::string& candidate, const std::string& reference) {
    const std::string a = normalize_answer(candidate);
    const std::string b = normalize_answer(reference);
    if (a.empty() || b.empty()) return false;
    if (a == b) return true;
    auto x = parse_rational(candidate);
    auto y = parse_rational(reference);
    if (!x || !y) return false;
    const long double scale =
        std::max({1.0L, std::fabs(static_cast<long double>(*x)), std::fabs(static_cast<long double>(*y))});
    return std::fabs(*x - *y) <= 1e-9L * scale;
}

// ---------------------------------------------------------------------------
// results
// ---------------------------------------------------------------------------

nlohmann::json result_to_json(const ResultRecord& r) {
    nlohmann::json j{
        {"problem_id", r.problem_id},
        {"config", r.config_label},
        {"mode", r.mode},
        {"level", r.level ? nlohmann::json(*r.level) : nlohmann::json(nullptr)},
        {"answer", r.answer ? nlohmann::json(*r.answer) : nlohmann::json(nullptr)},
        {"selected_iteration", r.selected_iteration},
        {"rewards", r.rewards},
        {"iteration_tools", r.iteration_tools},
        {"iteration_strategies", r.iteration_strategies},
        {"correct", r.correct ? nlohmann::json(*r.correct) : nlohmann::json(nullptr)},
        {"failed", r.failed},
        {"failure", r.failure},
    };
    return j;
}

ResultRecord result_from_json(const nlohmann::json& j) {
    ResultRecord r;
    r.problem_id = j.value("problem_id", "");
    r.config_label = j.value("config", "");
    r.mode = j.value("mode", "");
    if (j.contains("level") && !j.at("level").is_null()) r.level = j.at("level").get<int>();
    if (j.contains("answer") && !j.at("answer").is_null())
        r.answer = j.at("answer").get<std::string>();
    r.selected_iteration = j.value("selected_iteration", 0);
    if (j.contains("rewards")) r.rewards = j.at("rewards").get<std::vector<double>>();
    if (j.contains("iteration_tools"))
        r.iteration_tools = j.at("iteration_tools").get<std::vector<std::string>>();
    if (j.contains("iteration_strategies"))
        r.iteration_strategies = j.at("iteration_strategies").get<std::vector<std::string>>();
    if (j.contains("correct") && !j.at("correct").is_null())
        r.correct = j.at("correct").get<bool>();
    r.failed = j.value("failed", false);
    r.failure = j.value("failure", "");
    return r;
}

std::string results_to_jsonl(const std::vector<ResultRecord>& results) {
    std::ostringstream os;
    for (const ResultRecord& r : results) os << result_to_json(r).dump() << "\n";
    return os.str();
}

// ---------------------------------------------------------------------------
// backends
// ---------------------------------------------------------------------------

std::shared_ptr<ChatBackend> make_backend(const RunConfig& config) {
    if (config.backend.kind == "scripted") {
        if (config.backend.script_path.empty())
            throw ConfigError("scripted backend requires backend.script");
        return ScriptedBackend::from_json_file(config.backend.script_path);
    }
    HttpBackendOptions options;
    options.base_url_env = config.backend.base_url_env;
    options.api_key_env = config.backend.api_key_env;
    options.timeout_ms = config.backend.timeout_ms;
    return std::make_shared<HttpBackend>(options);
}

// ---------------------------------------------------------------------------
// execution
// ---------------------------------------------------------------------------

namespace {

int iterations_for(const RunConfig& config) {
    switch (config.mode) {
        case RunMode::Direct:
        case RunMode::Dynamic:
            return 1;
        case RunMode::DirectPrmSel:
        case RunMode::DynamicPrmSel:
        case RunMode::FixedGrid:
            return config.iterations;
    }
    return 1;
}

IterationResult run_direct_iteration(Controller& controller, StepScorer& scorer,
                                     const Problem& problem, const CallScope& scope,
                                     int index, bool score_it) {
    const std::string text = controller.direct_solve(problem.statement, scope);
    const std::string content = trim_copy(text);
    if (content.empty()) throw StepGenerationError("direct response was empty");

    Trajectory traj;
    traj.steps.push_back(Step{1, StepOrigin::DirectSolve, content, std::nullopt, std::nullopt});
    traj.terminal = true;

    std::optional<std::string> answer = parse_answer_payload(text);
    if (!answer) answer = extract_boxed(text);
    if (answer) traj.answer = *answer;
    else traj.extraction_failed = true;

    if (score_it) traj = scorer.score_trajectory(std::move(traj), problem.statement, scope);
    return make_iteration_result(index, std::move(traj), std::nullopt, std::nullopt);
}

IterationResult run_search_iteration(const RunConfig& config, Controller& controller,
                                     StepScorer& scorer, const Problem& problem,
                                     const CallScope& scope, int index, TraceSink* trace) {
    Plan plan;
    ToolSequence tools;
    ComputePlan cplan;
    if (config.mode == RunMode::FixedGrid) {
        tools = ToolSequence{{*config.fixed_tool}};
        cplan = *config.fixed_compute;
    } else {
        plan = controller.plan(problem.statement, scope);
        tools = controller.select_tools(problem.statement, plan, scope);
        cplan = controller.select_compute(problem.statement, plan, tools, scope);
    }

    // The reframer, when selected, rewrites the observation before any
    // reasoning happens; its output becomes the problem text every later
    // stage sees, and it enters the trajectory as a scored first step.
    std::string obs = problem.statement;
    std::vector<Step> lead;
    std::vector<StepScore> lead_scores;
    if (tools.contains(ToolKind::Reframer)) {
        Step reframed = controller.run_auxiliary_tool(ToolKind::Reframer, problem.statement,
                                                      {}, scope);
        lead_scores.push_back(scorer.score_transition(problem.statement, reframed.content,
                                                      scope, 1));
        obs = reframed.content;
        lead.push_back(std::move(reframed));
    }

    const ToolKind reasoning = tools.reasoning_tool();
    const std::string plan_text = plan.text;

    SearchContext ctx;
    ctx.origin = obs;
    ctx.max_steps = config.max_steps;
    ctx.branching = config.branching;
    ctx.max_rollout_paths = config.max_rollout_paths;
    ctx.trace = trace;
    ctx.problem_id = problem.id;
    ctx.iteration_index = index;
    ctx.propose = [&controller, &scope, obs, plan_text, reasoning](const std::vector<Step>& history) {
        return controller.next_step(obs, plan_text, reasoning, history, scope);
    };
    ctx.sample_complete = [&controller, &scope, obs, plan_text, reasoning]() {
        const std::string text = controller.sample_solution(obs, plan_text, scope);
        const std::vector<std::string> segments = segment_reasoning(text);
        if (segments.empty()) throw StrategyError("sampled solution contained no usable text");
        Trajectory t;
        for (std::size_t i = 0; i < segments.size(); ++i)
            t.steps.push_back(Step{static_cast<int>(i) + 1, origin_of(reasoning), segments[i],
                                   std::nullopt, std::nullopt});
        t.terminal = true;
        return t;
    };
    ctx.score = [&scorer, &scope](const std::string& prev, const std::string& cur) {
        return scorer.score_transition(prev, cur, scope);
    };

    Trajectory searched = run_strategy(ctx, cplan);

    Trajectory full;
    full.steps = std::move(lead);
    full.scores = std::move(lead_scores);
    full.steps.insert(full.steps.end(), searched.steps.begin(), searched.steps.end());
    full.scores.insert(full.scores.end(), searched.scores.begin(), searched.scores.end());
    full.terminal = searched.terminal;

    // Post-reasoning tools run in sequence order, each contributing one
    // scored step on top of whatever the strategy settled on.
    for (ToolKind tool : tools.tools) {
        if (tool != ToolKind::NumericVerifier && tool != ToolKind::Verifier &&
            tool != ToolKind::Summarizer)
            continue;
        Step aux = controller.run_auxiliary_tool(tool, problem.statement, full.steps, scope);
        StepScore sc = scorer.score_transition(full.last_content(), aux.content, scope,
                                               static_cast<int>(full.steps.size()) + 1);
        full.steps.push_back(std::move(aux));
        full.scores.push_back(std::move(sc));
    }
    for (std::size_t i = 0; i < full.steps.size(); ++i)
        full.steps[i].index = static_cast<int>(i) + 1;

    std::optional<std::string> answer =
        controller.extract_answer(problem.statement, plan_text, full, scope);
    if (answer) full.answer = *answer;
    else full.extraction_failed = true;

    return make_iteration_result(index, std::move(full), std::move(tools), cplan);
}

void run_one_problem(const RunConfig& config, Controller& controller, StepScorer& scorer,
                     const Problem& problem, const CallScope& scope, TraceSink* trace,
                     ResultRecord& rec) {
    const int total = iterations_for(config);
    const bool direct_mode =
        config.mode == RunMode::Direct || config.mode == RunMode::DirectPrmSel;
    const bool score_direct = config.mode == RunMode::DirectPrmSel;

    std::vector<IterationResult> iterations;
    std::string last_error;
    for (int i = 1; i <= total; ++i) {
        try {
            IterationResult it =
                direct_mode
                    ? run_direct_iteration(controller, scorer, problem, scope, i, score_direct)
                    : run_search_iteration(config, controller, scorer, problem, scope, i, trace);
            rec.rewards.push_back(it.reward);
            rec.iteration_tools.push_back(it.tools ? it.tools->label() : "-");
            rec.iteration_strategies.push_back(it.compute ? it.compute->label() : "-");
            iterations.push_back(std::move(it));
        } catch (const Error& e) {
            last_error = e.what();
            rec.rewards.push_back(0.0);
            rec.iteration_tools.push_back("(failed)");
            rec.iteration_strategies.push_back("(failed)");
            if (trace)
                trace->record({{"event", "iteration_failed"},
                               {"problem_id", problem.id},
                               {"iteration", i},
                               {"error", last_error}});
        }
    }

    try {
        SelectedAnswer sel = select_final(iterations);
        rec.answer = sel.answer;
        rec.selected_iteration = sel.iteration_index;
    } catch (const SelectionError&) {
        rec.failed = true;
        rec.failure = last_error.empty() ? "no iteration produced an answer" : last_error;
    }
}

} // namespace

RunArtifacts run_problems(const RunConfig& config, const std::vector<Problem>& problems,
                          std::shared_ptr<ChatBackend> backend, bool record_session) {
    if (!backend) throw ConfigError("run_problems requires a backend");

    std::vector<BackendProfile> profiles{
        {config.base.model_id, config.base.param_count, config.base.context_length, Role::Base},
        {config.controller.model_id, config.controller.param_count,
         config.controller.context_length, Role::Controller},
        {config.prm.model_id, config.prm.param_count, config.prm.context_length, Role::Prm},
    };

    Gateway gateway(std::move(backend), profiles);
    std::shared_ptr<SessionRecorder> recorder;
    if (record_session) {
        recorder = std::make_shared<SessionRecorder>();
        gateway.set_recorder(recorder);
    }

    const PromptSet prompts = PromptSet::defaults();
    ControllerOptions copts;
    copts.controller_model_id = config.controller.model_id;
    copts.base_model_id = config.base.model_id;
    copts.base_decoding = config.base_decoding;
    copts.max_attempts = config.max_attempts;
    copts.fallback = config.fallback;
    copts.seed = config.seed;
    Controller controller(gateway, prompts, copts);

    ScorerOptions sopts;
    sopts.model_id = config.prm.model_id;
    sopts.adapter = config.prm_adapter;
    sopts.max_attempts = config.max_attempts;
    StepScorer scorer(gateway, prompts, sopts);

    RunArtifacts artifacts;
    artifacts.ledger = ComputeLedger(config.alpha, config.kappa);
    for (const BackendProfile& p : profiles) artifacts.ledger.register_profile(p);

    std::ostringstream trace_stream;
    JsonlTraceSink sink(trace_stream);

    for (const Problem& problem : problems) {
        ComputeLedger fragment(config.alpha, config.kappa);
        CallScope scope{problem.id, &fragment};

        ResultRecord rec;
        rec.problem_id = problem.id;
        rec.config_label = config.effective_label();
        rec.mode = to_string(config.mode);
        rec.level = problem.level;

        try {
            run_one_problem(config, controller, scorer, problem, scope, &sink, rec);
        } catch (const Error& e) {
            rec.failed = true;
            rec.failure = e.what();
        }

        if (problem.reference_answer)
            rec.correct = rec.answer && check_answer(*rec.answer, *problem.reference_answer);

        artifacts.results.push_back(std::move(rec));
        artifacts.ledger = ComputeLedger::merge(artifacts.ledger, fragment);
    }

    const bool all_failed =
        !artifacts.results.empty() &&
        std::all_of(artifacts.results.begin(), artifacts.results.end(),
                    [](const ResultRecord& r) { return r.failed; });
    if (all_failed)
        throw Error("every problem in the run failed; first failure: " +
                    artifacts.results.front().failure);

    artifacts.traces_jsonl = trace_stream.str();
    if (recorder) artifacts.session_json = recorder->to_json_text();
    return artifacts;
}

// ---------------------------------------------------------------------------
// persistence & replay
// ---------------------------------------------------------------------------

namespace {

std::string problems_to_jsonl(const std::vector<Problem>& problems) {
    std::ostringstream os;
    for (const Problem& p : problems) {
        nlohmann::json j{{"id", p.id}, {"problem", p.statement}};
        if (p.reference_answer) j["answer"] = *p.reference_answer;
        if (p.level) j["level"] = *p.level;
        if (p.subject) j["subject"] = *p.subject;
        os << j.dump() << "\n";
    }
    return os.str();
}

std::string ledger_to_string(const ComputeLedger& ledger) {
    std::ostringstream os;
    ledger.write_jsonl(os);
    return os.str();
}

} // namespace

void write_run_dir(const std::string& dir, const RunConfig& config,
                   const std::vector<Problem>& problems, const RunArtifacts& artifacts) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path root(dir);
    write_text_file((root / "config.json").string(), config_to_json(config).dump(2) + "\n");
    write_text_file((root / "problems.jsonl").string(), problems_to_jsonl(problems));
    write_text_file((root / "results.jsonl").string(), results_to_jsonl(artifacts.results));
    write_text_file((root / "ledger.jsonl").string(), ledger_to_string(artifacts.ledger));
    write_text_file((root / "traces.jsonl").string(), artifacts.traces_jsonl);
    if (!artifacts.session_json.empty())
        write_text_file((root / "session.json").string(), artifacts.session_json);
}

ReplayOutcome replay_run_dir(const std::string& dir) {
    ReplayOutcome outcome;
    const std::filesystem::path root(dir);
    const auto session_path = root / "session.json";
    if (!std::filesystem::exists(session_path)) {
        outcome.notes.push_back("no session.json in " + dir +
                                " (run with session recording to enable replay)");
        return outcome;
    }

    const RunConfig config = load_run_config((root / "config.json").string());
    const std::vector<Problem> problems = ingest_dataset_file((root / "problems.jsonl").string());
    auto backend = ScriptedBackend::from_json_text(read_text_file(session_path.string()));

    RunArtifacts replayed = run_problems(config, problems, backend, false);

    const std::string want_results = read_text_file((root / "results.jsonl").string());
    const std::string want_ledger = read_text_file((root / "ledger.jsonl").string());
    const std::string got_results = results_to_jsonl(replayed.results);
    const std::string got_ledger = ledger_to_string(replayed.ledger);

    outcome.ok = true;
    if (got_results != want_results) {
        outcome.ok = false;
        outcome.notes.push_back("results.jsonl differs from the recorded run");
    }
    if (got_ledger != want_ledger) {
        outcome.ok = false;
        outcome.notes.push_back("ledger.jsonl differs from the recorded run");
    }
    if (outcome.ok) outcome.notes.push_back("replay matched results.jsonl and ledger.jsonl");
    return outcome;
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

namespace {

struct LoadedRun {
    std::string label;
    std::string mode;
    std::vector<ResultRecord> results;
    std::optional<ComputeLedger> ledger;
};

std::optional<LoadedRun> load_run(const std::filesystem::path& dir,
                                  std::vector<std::string>& warnings) {
    const auto results_path = dir / "results.jsonl";
    if (!std::filesystem::exists(results_path)) return std::nullopt;

    LoadedRun run;
    std::ifstream in(results_path, std::ios::binary);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_copy(line).empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            warnings.push_back(results_path.string() + ":" + std::to_string(line_no) +
                               ": unreadable result line, skipped");
            continue;
        }
        run.results.push_back(result_from_json(j));
    }
    if (run.results.empty()) return std::nullopt;
    run.label = run.results.front().config_label;
    run.mode = run.results.front().mode;

    const auto ledger_path = dir / "ledger.jsonl";
    double alpha = 0.1, kappa = 1e6;
    std::vector<BackendProfile> profiles;
    const auto config_path = dir / "config.json";
    if (std::filesystem::exists(config_path)) {
        try {
            const RunConfig c = load_run_config(config_path.string());
            alpha = c.alpha;
            kappa = c.kappa;
            profiles = {{c.base.model_id, c.base.param_count, c.base.context_length, Role::Base},
                        {c.controller.model_id, c.controller.param_count,
                         c.controller.context_length, Role::Controller},
                        {c.prm.model_id, c.prm.param_count, c.prm.context_length, Role::Prm}};
        } catch (const Error&) {
            warnings.push_back(config_path.string() + ": unreadable config, using default cost constants");
        }
    }
    if (std::filesystem::exists(ledger_path)) {
        std::ifstream lin(ledger_path, std::ios::binary);
        try {
            run.ledger = ComputeLedger::read_jsonl(lin, alpha, kappa);
            for (const BackendProfile& p : profiles) run.ledger->register_profile(p);
        } catch (const Error& e) {
            warnings.push_back(ledger_path.string() + ": " + e.what());
        }
    } else {
        warnings.push_back(dir.string() + ": no ledger.jsonl, cost columns omitted");
    }
    return run;
}

std::string format_pct(double value) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(1);
    os << value;
    return os.str();
}

std::string format_sci(double value) {
    std::ostringstream os;
    os.precision(6);
    os << value;
    return os.str();
}

} // namespace

ReportFiles build_report(const std::string& results_root) {
    ReportFiles report;
    std::vector<LoadedRun> runs;

    const std::filesystem::path root(results_root);
    if (!std::filesystem::exists(root))
        throw ConfigError("results root does not exist: " + results_root);
    if (auto self = load_run(root, report.warnings)) runs.push_back(std::move(*self));
    if (std::filesystem::is_directory(root)) {
        std::vector<std::filesystem::path> subdirs;
        for (const auto& entry : std::filesystem::directory_iterator(root))
            if (entry.is_directory()) subdirs.push_back(entry.path());
        std::sort(subdirs.begin(), subdirs.end());
        for (const auto& sub : subdirs)
            if (auto run = load_run(sub, report.warnings)) runs.push_back(std::move(*run));
    }
    if (runs.empty()) throw ConfigError("no runs found under " + results_root);

    // accuracy_by_mode.csv — one row per run (config label).
    {
        std::ostringstream os;
        os << "config,mode,problems,verifiable,correct,accuracy_pct\n";
        for (const LoadedRun& run : runs) {
            int verifiable = 0, correct = 0;
            for (const ResultRecord& r : run.results) {
                if (!r.correct.has_value()) continue;
                ++verifiable;
                if (*r.correct) ++correct;
            }
            const double acc = verifiable ? 100.0 * correct / verifiable : 0.0;
            os << run.label << "," << run.mode << "," << run.results.size() << "," << verifiable
               << "," << correct << "," << format_pct(acc) << "\n";
        }
        report.accuracy_by_mode_csv = os.str();
    }

    // accuracy_by_level.csv — per run x difficulty level.
    {
        std::ostringstream os;
        os << "config,level,verifiable,correct,accuracy_pct\n";
        for (const LoadedRun& run : runs) {
            std::map<int, std::pair<int, int>> by_level; // level -> {verifiable, correct}
            for (const ResultRecord& r : run.results) {
                if (!r.correct.has_value() || !r.level.has_value()) continue;
                auto& cell = by_level[*r.level];
                ++cell.first;
                if (*r.correct) ++cell.second;
            }
            for (const auto& [level, cell] : by_level) {
                const double acc = cell.first ? 100.0 * cell.second / cell.first : 0.0;
                os << run.label << "," << level << "," << cell.first << "," << cell.second << ","
                   << format_pct(acc) << "\n";
            }
        }
        report.accuracy_by_level_csv = os.str();
    }

    // usage.csv — how often each tool / strategy was chosen, per run.
    // Percentages within one (config, category) pair sum to 100.
    {
        std::ostringstream os;
        os << "config,category,name,count,share_pct\n";
        for (const LoadedRun& run : runs) {
            std::map<std::string, int> tool_counts;
            std::map<std::string, int> strategy_counts;
            int tool_total = 0, strategy_total = 0;
            for (const ResultRecord& r : run.results) {
                for (const std::string& label : r.iteration_tools) {
                    if (label.empty() || label == "-" || label == "(failed)") continue;
                    std::istringstream parts(label);
                    std::string member;
                    while (std::getline(parts, member, '+')) {
                        ++tool_counts[member];
                        ++tool_total;
                    }
                }
                for (const std::string& label : r.iteration_strategies) {
                    if (label.empty() || label == "-" || label == "(failed)") continue;
                    const std::size_t paren = label.find('(');
                    ++strategy_counts[paren == std::string::npos ? label
                                                                 : label.substr(0, paren)];
                    ++strategy_total;
                }
            }
            for (const auto& [name, count] : tool_counts)
                os << run.label << ",tool," << name << "," << count << ","
                   << format_pct(100.0 * count / tool_total) << "\n";
            for (const auto& [name, count] : strategy_counts)
                os << run.label << ",strategy," << name << "," << count << ","
                   << format_pct(100.0 * count / strategy_total) << "\n";
        }
        report.usage_csv = os.str();
    }

    // tradeoff.csv — cost metrics vs accuracy, per run.
    {
        std::ostringstream os;
        os << "config,theoretical_flops,compute_intensity,accuracy_pct\n";
        for (const LoadedRun& run : runs) {
            int verifiable = 0, correct = 0;
            for (const ResultRecord& r : run.results) {
                if (!r.correct.has_value()) continue;
                ++verifiable;
                if (*r.correct) ++correct;
            }
            const double acc = verifiable ? 100.0 * correct / verifiable : 0.0;
            std::string flops = "", intensity = "";
            if (run.ledger) {
                try {
                    flops = format_sci(run.ledger->theoretical_flops());
                } catch (const AccountingError& e) {
                    report.warnings.push_back(run.label + ": " + e.what());
                }
                try {
                    intensity = format_sci(run.ledger->compute_intensity());
                } catch (const UndefinedIntensityError&) {
                    report.warnings.push_back(run.label +
                                              ": compute intensity undefined (no base generations)");
                }
            }
            os << run.label << "," << flops << "," << intensity << "," << format_pct(acc) << "\n";
        }
        report.tradeoff_csv = os.str();
    }
    return report;
}

void write_report_files(const ReportFiles& report, const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::filesystem::path root(out_dir);
    write_text_file((root / "accuracy_by_mode.csv").string(), report.accuracy_by_mode_csv);
    write_text_file((root / "accuracy_by_level.csv").string(), report.accuracy_by_level_csv);
    write_text_file((root / "usage.csv").string(), report.usage_csv);
    write_text_file((root / "tradeoff.csv").string(), report.tradeoff_csv);
}

} // namespace ttc
