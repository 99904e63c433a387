#include "ttc/ledger.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <tuple>

#include <nlohmann/json.hpp>

namespace ttc {

using nlohmann::json;

std::string to_string(Role r) {
    switch (r) {
        case Role::Base: return "base";
        case Role::Controller: return "controller";
        case Role::Prm: return "prm";
    }
    return "?";
}

std::optional<Role> role_from_string(const std::string& name) {
    if (name == "base") return Role::Base;
    if (name == "controller") return Role::Controller;
    if (name == "prm") return Role::Prm;
    return std::nullopt;
}

void ComputeLedger::register_profile(const BackendProfile& profile) {
    if (profile.model_id.empty()) throw AccountingError("profile needs a model id");
    if (profile.param_count <= 0)
        throw AccountingError("profile " + profile.model_id + " needs a positive parameter count");
    if (profile.context_length <= 0)
        throw AccountingError("profile " + profile.model_id + " needs a positive context length");
    auto it = profiles_.find(profile.model_id);
    if (it != profiles_.end()) {
        const BackendProfile& have = it->second;
        if (have.param_count != profile.param_count ||
            have.context_length != profile.context_length || have.role != profile.role)
            throw AccountingError("conflicting profile for model " + profile.model_id);
        return;
    }
    profiles_[profile.model_id] = profile;
}

const BackendProfile& ComputeLedger::profile(const std::string& model_id) const {
    auto it = profiles_.find(model_id);
    if (it == profiles_.end())
        throw AccountingError("no profile registered for model " + model_id);
    return it->second;
}

bool ComputeLedger::has_profile(const std::string& model_id) const {
    return profiles_.count(model_id) > 0;
}

void ComputeLedger::record(CallRecord rec) {
    if (rec.model_id.empty()) throw AccountingError("call record needs a model id");
    if (rec.prompt_tokens < 0 || rec.completion_tokens < 0 || rec.forward_count < 1)
        throw AccountingError("call record has invalid counts");
    records_.push_back(std::move(rec));
}

ComputeLedger ComputeLedger::merge(const ComputeLedger& a, const ComputeLedger& b) {
    ComputeLedger out(a.alpha_, a.kappa_);
    for (const auto& [id, p] : a.profiles_) out.register_profile(p);
    for (const auto& [id, p] : b.profiles_) out.register_profile(p);  // throws on conflict
    out.records_ = a.records_;
    out.records_.insert(out.records_.end(), b.records_.begin(), b.records_.end());
    return out;
}

std::vector<CallRecord> ComputeLedger::sorted_records() const {
    std::vector<CallRecord> recs = records_;
    std::stable_sort(recs.begin(), recs.end(), [](const CallRecord& x, const CallRecord& y) {
        return std::tie(x.problem_id, x.role, x.purpose, x.ordinal, x.model_id) <
               std::tie(y.problem_id, y.role, y.purpose, y.ordinal, y.model_id);
    });
    return recs;
}

double ComputeLedger::theoretical_flops() const {
    if (records_.empty()) return 0.0;
    const std::vector<CallRecord> recs = sorted_records();

    // problem -> model -> (forward passes, token sum)
    std::map<std::string, std::map<std::string, std::pair<long long, long long>>> agg;
    for (const CallRecord& r : recs) {
        auto& cell = agg[r.problem_id][r.model_id];
        cell.first += r.forward_count;
        cell.second += static_cast<long long>(r.prompt_tokens) + r.completion_tokens;
    }

    long double total = 0.0L;
    for (const auto& [pid, by_model] : agg) {
        long double per_problem = 0.0L;
        for (const auto& [model_id, cell] : by_model) {
            const BackendProfile& prof = profile(model_id);  // throws if missing
            const long double g = static_cast<long double>(cell.first);
            const long double tbar = static_cast<long double>(cell.second) / g;
            const long double capped =
                std::min(tbar, static_cast<long double>(prof.context_length));
            per_problem += 2.0L * static_cast<long double>(prof.param_count) * capped * g;
        }
        total += per_problem;
    }
    return static_cast<double>(total / static_cast<long double>(agg.size()));
}

double ComputeLedger::compute_intensity() const {
    const std::vector<CallRecord> recs = sorted_records();
    std::set<std::string> problems;
    long long base_gens = 0;
    long long base_completion = 0;
    long long aux_calls = 0;
    for (const CallRecord& r : recs) {
        problems.insert(r.problem_id);
        if (r.role == Role::Base) {
            base_gens += r.forward_count;
            base_completion += r.completion_tokens;
        } else {
            aux_calls += r.forward_count;
        }
    }
    if (base_gens == 0)
        throw UndefinedIntensityError("compute intensity undefined: no base generations");
    const long double p = static_cast<long double>(problems.size());
    const long double gbar = static_cast<long double>(base_gens) / p;
    const long double tbar =
        static_cast<long double>(base_completion) / static_cast<long double>(base_gens);
    const long double cbar = static_cast<long double>(aux_calls) / p;
    const long double s =
        gbar * tbar * (1.0L + static_cast<long double>(alpha_) * cbar) /
        static_cast<long double>(kappa_);
    return static_cast<double>(s);
}

// ===== persistence =====

namespace {

json record_to_json(const CallRecord& r) {
    return json{
        {"model_id", r.model_id},
        {"role", to_string(r.role)},
        {"prompt_tokens", r.prompt_tokens},
        {"completion_tokens", r.completion_tokens},
        {"forward_count", r.forward_count},
        {"problem_id", r.problem_id},
        {"purpose", r.purpose},
        {"ordinal", r.ordinal},
    };
}

CallRecord record_from_json(const json& j) {
    CallRecord r;
    r.model_id = j.at("model_id").get<std::string>();
    auto role = role_from_string(j.at("role").get<std::string>());
    if (!role) throw AccountingError("unknown role in ledger line");
    r.role = *role;
    r.prompt_tokens = j.at("prompt_tokens").get<int>();
    r.completion_tokens = j.at("completion_tokens").get<int>();
    r.forward_count = j.value("forward_count", 1);
    r.problem_id = j.value("problem_id", "");
    r.purpose = j.value("purpose", "");
    r.ordinal = j.value("ordinal", 0);
    return r;
}

} // namespace

void ComputeLedger::write_jsonl(std::ostream& out) const {
    for (const CallRecord& r : sorted_records()) out << record_to_json(r).dump() << "\n";
}

ComputeLedger ComputeLedger::read_jsonl(std::istream& in, double alpha, double kappa) {
    ComputeLedger ledger(alpha, kappa);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw AccountingError("ledger line " + std::to_string(line_no) + " is not valid JSON");
        ledger.record(record_from_json(j));
    }
    return ledger;
}

} // namespace ttc
