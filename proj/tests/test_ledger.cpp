#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "ttc/errors.hpp"
#include "ttc/ledger.hpp"

using namespace ttc;

namespace {

constexpr double kRelTol = 1e-12;

bool close_rel(double a, double b) {
    return std::fabs(a - b) <= kRelTol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

CallRecord call(const std::string& model, Role role, int prompt, int completion,
                const std::string& problem, const std::string& purpose = "x", int ordinal = 0) {
    CallRecord r;
    r.model_id = model;
    r.role = role;
    r.prompt_tokens = prompt;
    r.completion_tokens = completion;
    r.problem_id = problem;
    r.purpose = purpose;
    r.ordinal = ordinal;
    return r;
}

} // namespace

TEST_CASE("profiles register once and conflicts are rejected") {
    ComputeLedger ledger;
    ledger.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    CHECK_NOTHROW(ledger.register_profile({"m", 1'000'000'000, 4096, Role::Base}));
    CHECK_THROWS_AS(ledger.register_profile({"m", 2'000'000'000, 4096, Role::Base}),
                    AccountingError);
    CHECK_THROWS_AS(ledger.register_profile({"bad", 0, 4096, Role::Base}), AccountingError);
    CHECK(ledger.has_profile("m"));
    CHECK_FALSE(ledger.has_profile("other"));
}

TEST_CASE("theoretical flops: single-model substitution") {
    ComputeLedger ledger;
    ledger.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    ledger.record(call("m", Role::Base, 600, 400, "p1"));
    CHECK(close_rel(ledger.theoretical_flops(), 2e12));
}

TEST_CASE("theoretical flops: context length caps the token mean") {
    ComputeLedger ledger;
    ledger.register_profile({"m", 1'000'000'000, 32768, Role::Base});
    ledger.record(call("m", Role::Base, 150000, 50000, "p1"));  // 200000 total
    CHECK(close_rel(ledger.theoretical_flops(), 2.0 * 1e9 * 32768.0 * 1.0));
}

TEST_CASE("theoretical flops: two models sum per problem") {
    ComputeLedger ledger;
    ledger.register_profile({"a", 1'000'000'000, 4096, Role::Base});
    ledger.register_profile({"b", 500'000'000, 4096, Role::Prm});
    ledger.record(call("a", Role::Base, 500, 500, "p1", "x", 0));
    ledger.record(call("a", Role::Base, 900, 100, "p1", "x", 1));
    ledger.record(call("b", Role::Prm, 300, 100, "p1"));
    CHECK(close_rel(ledger.theoretical_flops(), 4.4e12));
}

TEST_CASE("theoretical flops: averaged across problems") {
    ComputeLedger one;
    one.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    one.record(call("m", Role::Base, 600, 400, "p1"));

    ComputeLedger two = one;
    two.record(call("m", Role::Base, 600, 400, "p2"));
    two.record(call("m", Role::Base, 600, 400, "p2", "x", 1));

    // p1 contributes 2e12, p2 contributes 4e12 -> mean 3e12.
    CHECK(close_rel(two.theoretical_flops(), 3e12));
    CHECK(close_rel(one.theoretical_flops(), 2e12));
    CHECK(ComputeLedger().theoretical_flops() == 0.0);
}

TEST_CASE("theoretical flops: missing profile is an accounting error") {
    ComputeLedger ledger;
    ledger.record(call("ghost", Role::Base, 10, 10, "p1"));
    CHECK_THROWS_AS(ledger.theoretical_flops(), AccountingError);
}

TEST_CASE("compute intensity: substitution fixtures") {
    ComputeLedger a;
    a.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    a.record(call("m", Role::Base, 100, 1024, "p1"));
    CHECK(close_rel(a.compute_intensity(), 1.024e-3));

    ComputeLedger b;
    b.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    b.register_profile({"c", 1'000'000'000, 4096, Role::Controller});
    b.record(call("m", Role::Base, 100, 1000, "p1"));
    for (int i = 0; i < 10; ++i) b.record(call("c", Role::Controller, 50, 50, "p1", "plan", i));
    CHECK(close_rel(b.compute_intensity(), 2.0e-3));

    ComputeLedger zero;
    zero.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    zero.record(call("m", Role::Base, 100, 0, "p1"));
    CHECK(zero.compute_intensity() == 0.0);
}

TEST_CASE("compute intensity: undefined without base generations") {
    ComputeLedger ledger;
    ledger.register_profile({"c", 1'000'000'000, 4096, Role::Controller});
    ledger.record(call("c", Role::Controller, 10, 10, "p1"));
    CHECK_THROWS_AS(ledger.compute_intensity(), UndefinedIntensityError);
    CHECK_THROWS_AS(ComputeLedger().compute_intensity(), UndefinedIntensityError);
}

TEST_CASE("compute intensity: strictly increasing in each driver") {
    auto build = [](int gens, int completion_each, int aux) {
        ComputeLedger l;
        l.register_profile({"m", 1'000'000'000, 4096, Role::Base});
        l.register_profile({"c", 1'000'000'000, 4096, Role::Controller});
        for (int i = 0; i < gens; ++i)
            l.record(call("m", Role::Base, 100, completion_each, "p1", "sample", i));
        for (int i = 0; i < aux; ++i)
            l.record(call("c", Role::Controller, 10, 10, "p1", "plan", i));
        return l.compute_intensity();
    };
    CHECK(build(2, 500, 3) > build(1, 500, 3));
    CHECK(build(1, 600, 3) > build(1, 500, 3));
    CHECK(build(1, 500, 4) > build(1, 500, 3));
}

TEST_CASE("merge: identity, concatenation, and metric agreement") {
    ComputeLedger a;
    a.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    a.record(call("m", Role::Base, 600, 400, "p1"));

    ComputeLedger merged_with_empty = ComputeLedger::merge(a, ComputeLedger());
    CHECK(merged_with_empty.size() == a.size());
    CHECK(close_rel(merged_with_empty.theoretical_flops(), a.theoretical_flops()));

    ComputeLedger b;
    b.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    b.record(call("m", Role::Base, 600, 400, "p2"));
    b.record(call("m", Role::Base, 600, 400, "p2", "x", 1));

    ComputeLedger ab = ComputeLedger::merge(a, b);
    CHECK(ab.size() == a.size() + b.size());
    // Disjoint problems: merged metric is the problem-weighted mean.
    CHECK(close_rel(ab.theoretical_flops(), (2e12 + 4e12) / 2.0));
}

TEST_CASE("merge: profile conflicts are rejected") {
    ComputeLedger a, b;
    a.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    b.register_profile({"m", 2'000'000'000, 4096, Role::Base});
    CHECK_THROWS_AS(ComputeLedger::merge(a, b), AccountingError);
}

TEST_CASE("merge: associative and commutative for metrics") {
    std::mt19937 gen(99);
    std::uniform_int_distribution<int> tokens(1, 2000);
    std::uniform_int_distribution<int> count(0, 6);
    std::uniform_int_distribution<int> role_pick(0, 2);
    std::uniform_int_distribution<int> problem_pick(1, 3);

    auto random_ledger = [&]() {
        ComputeLedger l;
        l.register_profile({"base", 7'000'000'000, 32768, Role::Base});
        l.register_profile({"ctrl", 72'000'000'000, 32768, Role::Controller});
        l.register_profile({"prm", 7'000'000'000, 16384, Role::Prm});
        const int n = count(gen);
        for (int i = 0; i < n; ++i) {
            const Role role = static_cast<Role>(role_pick(gen));
            const std::string model =
                role == Role::Base ? "base" : (role == Role::Controller ? "ctrl" : "prm");
            l.record(call(model, role, tokens(gen), tokens(gen),
                          "p" + std::to_string(problem_pick(gen)), "x", i));
        }
        return l;
    };

    for (int trial = 0; trial < 100; ++trial) {
        ComputeLedger a = random_ledger();
        ComputeLedger b = random_ledger();
        ComputeLedger c = random_ledger();

        ComputeLedger ab_c = ComputeLedger::merge(ComputeLedger::merge(a, b), c);
        ComputeLedger a_bc = ComputeLedger::merge(a, ComputeLedger::merge(b, c));
        ComputeLedger ba_c = ComputeLedger::merge(ComputeLedger::merge(b, a), c);

        CHECK(close_rel(ab_c.theoretical_flops(), a_bc.theoretical_flops()));
        CHECK(close_rel(ab_c.theoretical_flops(), ba_c.theoretical_flops()));

        const bool has_base = [&] {
            for (const CallRecord& r : ab_c.records())
                if (r.role == Role::Base) return true;
            return false;
        }();
        if (has_base) {
            CHECK(close_rel(ab_c.compute_intensity(), a_bc.compute_intensity()));
            CHECK(close_rel(ab_c.compute_intensity(), ba_c.compute_intensity()));
        }
    }
}

TEST_CASE("jsonl round trip preserves records and metrics") {
    ComputeLedger ledger(0.2, 5e5);
    ledger.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    ledger.record(call("m", Role::Base, 600, 400, "p2", "sample", 1));
    ledger.record(call("m", Role::Base, 100, 50, "p1", "step", 0));

    std::ostringstream out;
    ledger.write_jsonl(out);

    std::istringstream in(out.str());
    ComputeLedger back = ComputeLedger::read_jsonl(in, 0.2, 5e5);
    back.register_profile({"m", 1'000'000'000, 4096, Role::Base});
    CHECK(back.size() == ledger.size());
    CHECK(close_rel(back.theoretical_flops(), ledger.theoretical_flops()));
    CHECK(close_rel(back.compute_intensity(), ledger.compute_intensity()));

    // Canonical sort: p1 before p2 regardless of append order.
    std::ostringstream again;
    back.write_jsonl(again);
    CHECK(again.str() == out.str());
    CHECK(out.str().find("p1") < out.str().find("p2"));
}

TEST_CASE("record validation") {
    ComputeLedger ledger;
    CHECK_THROWS_AS(ledger.record(call("", Role::Base, 1, 1, "p")), AccountingError);
    CallRecord bad = call("m", Role::Base, -1, 1, "p");
    CHECK_THROWS_AS(ledger.record(bad), AccountingError);
}
