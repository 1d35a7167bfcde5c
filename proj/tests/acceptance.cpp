// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include "polypol/polypol.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/worked_examples.hpp"

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>

using namespace polypol;
using polypol::testing::q;
using polypol::testing::Rng;

namespace {

using Clock = std::chrono::steady_clock;

double millis_since(Clock::time_point start) {
    return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

/// Collects the reasons a criterion failed; empty means pass.
struct Verdict {
    std::vector<std::string> problems;
    std::string note;

    void expect(bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    }
};

using Vec = std::vector<Rational>;

Verdict criterion_1() {
    Verdict v;
    testing::TrainExample ex;
    ConstantMdp m = instantiate(ex.model, ex.pi0);
    auto start = Clock::now();
    MdpSolution sol = mdp_pi(m);
    double ms = millis_since(start);
    v.expect(sol.policy.action == std::vector<ActionId>{ex.tgv, ex.train, ex.stay}, "policy is not P->TGV, M->Train");
    v.expect(sol.values[ex.P] == q(39, 4), "v[P] = " + to_string(sol.values[ex.P]));
    v.expect(ms < 10, "took " + std::to_string(ms) + " ms");
    v.note = "v[P] = " + to_string(sol.values[ex.P]) + ", " + std::to_string(ms) + " ms";
    return v;
}

Verdict criterion_2() {
    Verdict v;
    testing::TrainExample ex;
    auto values = p_mdp_vd(ex.model, MdpPolicy{{ex.tgv, ex.train, ex.stay}});
    v.expect(values[ex.P] == q(5, 4) * LinearTerm::parameter(0) + LinearTerm::parameter(2),
             "V[P] = " + to_string(values[ex.P], ex.params));
    v.expect(values[ex.M] == LinearTerm::parameter(2), "V[M] = " + to_string(values[ex.M], ex.params));
    v.note = "V[P] = " + to_string(values[ex.P], ex.params);
    return v;
}

Verdict criterion_3() {
    Verdict v;
    testing::TrainExample ex;
    auto inv = p_mdp_pi(ex.model, ex.pi0);
    v.expect(inv.constraint.size() == 1 &&
                 to_string(inv.constraint.inequalities()[0], ex.params) == "5*p1 - 4*p2 + 4*p3 <= 0",
             "K0 = " + render_constraint(inv.constraint, ex.params));
    Constraint delay = partial_instantiate(inv.constraint, {{0, q(7)}, {1, q(11)}});
    v.expect(delay.size() == 1 && to_string(delay.inequalities()[0], ex.params) == "4*p3 - 9 <= 0",
             "partial = " + render_constraint(delay, ex.params));
    return v;
}

Verdict criterion_4() {
    Verdict v;
    testing::MaxPlusExample ex;
    NumericMatrix m = ex.numeric();
    auto start = Clock::now();
    MaxPiResult r = max_pi(m, testing::MaxPlusExample::initial());
    double ms = millis_since(start);
    if (r.trace.size() != 4) {
        v.expect(false, "trace has " + std::to_string(r.trace.size()) + " steps");
        return v;
    }
    v.expect(r.trace[0].eigenmode.eta == Vec{1, 3, 3, 3}, "eta1");
    v.expect(r.trace[0].eigenmode.x == Vec{0, 0, 1, -1}, "x1");
    v.expect(r.trace[1].eigenmode.x == Vec{-1, 0, 1, -1}, "x2");
    v.expect(r.trace[2].eigenmode.eta == Vec(4, q(9, 2)), "eta3");
    v.expect(r.trace[2].eigenmode.x == Vec{q(11, 2), 0, q(-1, 2), 3}, "x3");
    v.expect(r.trace[3].eigenmode.eta == Vec(4, q(11, 2)), "eta4");
    v.expect(r.trace[3].eigenmode.x == Vec{4, q(-1, 2), 0, q(5, 2)}, "x4");
    v.expect(r.policy.successor == std::vector<std::size_t>{3, 2, 3, 2}, "final policy");
    v.expect(ms < 10, "took " + std::to_string(ms) + " ms");
    v.note = "4 iterates, " + std::to_string(ms) + " ms";
    return v;
}

std::string normal_form(const Inequality& iq, const ParameterSet& params) {
    auto n = normalize(iq);
    if (std::holds_alternative<Tautology>(n)) return "true";
    if (std::holds_alternative<ContradictoryInequality>(n)) return "false";
    return to_string(std::get<Inequality>(n), params);
}

Verdict criterion_5() {
    Verdict v;
    testing::MaxPlusExample ex;
    auto inv = p_max_pi(ex.matrix, ex.pi0);

    // The generation table typed in row by row, both lines per edge.
    auto w = [&](const char* n) { return ex.w(n); };
    LinearTerm h = q(1, 2) * w("w34") + q(1, 2) * w("w43"), zero;
    auto le = [](LinearTerm a, LinearTerm b) { return Inequality::less_equal(std::move(a), std::move(b)); };
    std::vector<Inequality> table{
        le(h, h), le(w("w11") - h + w("w14") - h + w("w43") - h, w("w14") - h + w("w43") - h),
        le(h, h), le(w("w12") - h + w("w23") - h, w("w14") - h + w("w43") - h),
        le(h, h), le(w("w14") - h + w("w43") - h, w("w14") - h + w("w43") - h),
        le(h, h), le(w("w22") - h + w("w23") - h, w("w23") - h),
        le(h, h), le(w("w23") - h + zero, w("w23") - h),
        le(h, h), le(w("w32") - h + w("w23") - h, zero),
        le(h, h), le(w("w34") - h + w("w43") - h, zero),
        le(h, h), le(w("w42") - h + w("w23") - h, w("w43") - h),
        le(h, h), le(w("w43") - h + zero, w("w43") - h),
    };
    v.expect(inv.raw.size() == table.size(), std::to_string(inv.raw.size()) + " raw rows");
    for (std::size_t k = 0; k < std::min(inv.raw.size(), table.size()); ++k)
        v.expect(normal_form(inv.raw[k].inequality, ex.params) == normal_form(table[k], ex.params),
                 "raw row " + std::to_string(k + 1));

    std::vector<Inequality> five{
        Inequality::less_equal(q(2) * w("w11"), w("w34") + w("w43")),
        Inequality::less_equal(w("w12") + w("w23"), w("w14") + w("w43")),
        Inequality::less_equal(q(2) * w("w22"), w("w34") + w("w43")),
        Inequality::less_equal(w("w23") + w("w32"), w("w34") + w("w43")),
        Inequality::less_equal(q(2) * w("w23") + q(2) * w("w42"), w("w34") + q(3) * w("w43")),
    };
    v.expect(inv.constraint == simplify(five), "simplified K0 differs");

    Instantiation all_but = ex.pi0;
    all_but.erase(*ex.params.find("w43"));
    Constraint bound = partial_instantiate(inv.constraint, all_but);
    v.expect(bound.size() == 1 && to_string(bound.inequalities()[0], ex.params) == "-1*w43 + 6 <= 0",
             "partial = " + render_constraint(bound, ex.params));

    Instantiation lowered = ex.pi0;
    lowered[*ex.params.find("w43")] = 5;
    McmResult bf = brute_force_mcm(instantiate(ex.matrix, lowered));
    v.expect(bf.rho == q(9, 2), "rho at w43=5 is " + to_string(bf.rho));
    v.expect(bf.circuits == std::vector<std::vector<std::size_t>>{{1, 2}}, "circuit at w43=5 is not 2->3->2");
    return v;
}

Verdict criterion_6() {
    Verdict v;
    Rng rng(6001);
    std::size_t checks = 0;
    for (int k = 0; k < 100; ++k) {
        auto r = testing::random_pmdp(rng);
        for (int p = 0; p < 5; ++p) {
            MdpPolicy mu = initial_policy(r.model);
            for (StateId s = 0; s < r.model.state_count(); ++s) {
                auto acts = enabled(r.model, s);
                mu.action[s] = acts[static_cast<std::size_t>(testing::uniform(rng, 0, static_cast<long>(acts.size()) - 1))];
            }
            Instantiation pi;
            for (ParamId id = 0; id < r.parameters.size(); ++id) pi[id] = testing::random_rational(rng, -10, 10, 9);
            auto sym = p_mdp_vd(r.model, mu);
            auto direct = mdp_vd(instantiate(r.model, pi), mu);
            for (StateId s = 0; s < sym.size(); ++s, ++checks)
                v.expect(evaluate(sym[s], pi) == direct[s], "instance " + std::to_string(k));
        }
    }
    v.note = std::to_string(checks) + " entries";
    return v;
}

Verdict criterion_7() {
    Verdict v;
    Rng rng(7001);
    std::size_t samples = 0;
    for (int k = 0; k < 50; ++k) {
        auto r = testing::random_pmdp(rng);
        auto inv = p_mdp_pi(r.model, r.reference);
        v.expect(satisfies(inv.constraint, r.reference), "pi0 violates K0 on instance " + std::to_string(k));
        for (const auto& pi : testing::sample_satisfying(rng, inv.constraint, r.reference, 200)) {
            ++samples;
            auto bf = brute_force_optimal(instantiate(r.model, pi));
            v.expect(std::find(bf.optimal.begin(), bf.optimal.end(), inv.policy) != bf.optimal.end(),
                     "mu0 not optimal on instance " + std::to_string(k));
        }
    }
    v.expect(samples >= 50 * 190, "only " + std::to_string(samples) + " samples drawn");
    v.note = std::to_string(samples) + " sampled instantiations";
    return v;
}

Verdict criterion_8() {
    Verdict v;
    Rng rng(8001);
    std::size_t samples = 0;
    for (int k = 0; k < 50; ++k) {
        auto r = testing::random_matrix(rng, 1, 5);
        auto inv = p_max_pi(r.matrix, r.reference);
        v.expect(satisfies(inv.constraint, r.reference), "pi0 violates K0 on instance " + std::to_string(k));
        auto circuits = policy_circuits(inv.policy);
        for (const auto& pi : testing::sample_satisfying(rng, inv.constraint, r.reference, 200)) {
            ++samples;
            NumericMatrix m = instantiate(r.matrix, pi);
            Rational rho = brute_force_mcm(m).rho;
            for (const auto& c : circuits)
                v.expect(circuit_mean(m, c) == rho, "circuit mean below rho on instance " + std::to_string(k));
        }
    }
    v.expect(samples >= 50 * 190, "only " + std::to_string(samples) + " samples drawn");
    v.note = std::to_string(samples) + " sampled instantiations";
    return v;
}

Verdict criterion_9() {
    Verdict v;
    Rng rng(9001);
    for (int k = 0; k < 200; ++k) {
        auto r = testing::random_pmdp(rng);
        ConstantMdp m = instantiate(r.model, r.reference);
        v.expect(mdp_pi(m).values == brute_force_optimal(m).minimum, "mdp instance " + std::to_string(k));
    }
    for (int k = 0; k < 200; ++k) {
        long n = testing::uniform(rng, 1, 6);
        NumericMatrix m = testing::random_numeric_matrix(rng, n, 0.4, true);
        v.expect(max_pi(m).eigenmode.eta == Vec(static_cast<std::size_t>(n), brute_force_mcm(m).rho),
                 "max-plus instance " + std::to_string(k));
    }
    v.note = "200 + 200 instances";
    return v;
}

Verdict criterion_10() {
    Verdict v;
    Rng rng(10001);
    std::size_t largest = 0;
    auto check = [&](const testing::RandomPmdp& r) {
        auto inv = p_mdp_pi(r.model, r.reference);
        std::size_t bound = 0;
        for (StateId s = 0; s < r.model.state_count(); ++s)
            if (s != r.model.absorbing) bound += enabled(r.model, s).size() - 1;
        v.expect(inv.raw.size() <= bound, "raw count above sum(|e(s)|-1)");
        v.expect(bound <= r.model.state_count() * r.model.actions.size(), "sum(|e(s)|-1) above |S||A|");
        largest = std::max(largest, inv.raw.size());
    };
    for (int k = 0; k < 200; ++k) check(testing::random_pmdp(rng));
    check(testing::sized_pmdp(rng, 11, 4, 132));
    v.note = "201 instances, largest raw count " + std::to_string(largest);
    return v;
}

int run_shell(const std::string& cmd) {
    int raw = std::system(cmd.c_str());
    return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

Verdict criterion_11() {
    Verdict v;
    Rng rng(11001);
    auto r = testing::sized_pmdp(rng, 11, 4, 132);
    std::size_t triples = 0;
    for (const auto& choices : r.model.choices)
        for (const auto& c : choices) triples += c.outcomes.size();
    v.expect(triples == 132, std::to_string(triples) + " transitions generated");

    auto dir = std::filesystem::temp_directory_path();
    auto model_path = dir / "polypol_acceptance_11x4.json";
    auto pi0_path = dir / "polypol_acceptance_11x4.pi0";
    auto out_path = dir / "polypol_acceptance_11x4.k0";
    std::ofstream(model_path) << render_model(PmdpDocument{r.parameters, r.model});
    std::ofstream(pi0_path) << render_instantiation(r.reference, r.parameters) << "\n";

    std::string cmd = std::string(POLYPOL_CLI) + " inverse " + model_path.string() + " --pi0 @" + pi0_path.string() +
                      " -o " + out_path.string();
    auto start = Clock::now();
    int status = run_shell(cmd);
    double ms = millis_since(start);
    v.expect(status == 0, "cli exit status " + std::to_string(status));
    v.expect(ms < 1000, "took " + std::to_string(ms) + " ms");
    v.note = "11 states / 4 actions / 132 transitions, " + std::to_string(ms) + " ms";
    return v;
}

Verdict criterion_12() {
    Verdict v;
    testing::MaxPlusExample ex;
    NumericMatrix m = ex.numeric();
    MaxPiResult r = max_pi(m, testing::MaxPlusExample::initial());
    v.expect(testing::is_eigenvector(m, r.eigenmode), "worked example fixpoint is not an eigenvector");

    Rng rng(12001);
    for (int k = 0; k < 200; ++k) {
        long n = testing::uniform(rng, 1, 6);
        NumericMatrix rm = testing::random_numeric_matrix(rng, n, 0.4, true);
        v.expect(testing::is_eigenvector(rm, max_pi(rm).eigenmode), "random instance " + std::to_string(k));
    }
    v.note = "worked example + 200 random matrices";
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"train example, direct solve", criterion_1},
        {"train example, parametric values", criterion_2},
        {"train example, inverse constraint", criterion_3},
        {"max-plus example, policy iteration trace", criterion_4},
        {"max-plus example, inverse constraint", criterion_5},
        {"parametric MDP values commute with instantiation", criterion_6},
        {"MDP inverse constraint keeps mu0 optimal", criterion_7},
        {"max-plus inverse constraint keeps the circuit maximal", criterion_8},
        {"direct solvers match brute-force oracles", criterion_9},
        {"raw MDP constraint size bound", criterion_10},
        {"inverse on an 11-state model under 1 s", criterion_11},
        {"eigenvector invariant at the fixpoint", criterion_12},
    };

    auto start = Clock::now();
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v.problems.push_back(std::string("exception: ") + e.what());
        }
        bool ok = v.problems.empty();
        failed += ok ? 0 : 1;
        std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": " << criteria[i].first;
        if (!v.note.empty()) std::cout << " (" << v.note << ")";
        std::cout << "\n";
        for (std::size_t k = 0; k < std::min<std::size_t>(v.problems.size(), 5); ++k)
            std::cout << "      " << v.problems[k] << "\n";
    }
    double total = millis_since(start);
    std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << " in "
              << static_cast<long>(total) << " ms\n";
    return failed == 0 ? 0 : 1;
}
