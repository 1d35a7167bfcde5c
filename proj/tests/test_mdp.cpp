#include "polypol/mdp.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"
#include "support/worked_examples.hpp"

#include <catch2/catch_amalgamated.hpp>

using namespace polypol;
using polypol::testing::q;
using polypol::testing::Rng;

namespace {

bool mentions(const std::vector<std::string>& messages, const std::string& needle) {
    for (const auto& m : messages)
        if (m.find(needle) != std::string::npos) return true;
    return false;
}

Pmdp single_action_model() {
    Pmdp m;
    m.add_state("a");
    m.add_state("b");
    m.add_state("end");
    m.add_action("go");
    m.absorbing = 2;
    m.add_choice(0, 0, LinearTerm::parameter(0), {{0, q(1, 2)}, {1, q(1, 2)}});
    m.add_choice(1, 0, LinearTerm::parameter(1), {{2, q(1)}});
    m.add_choice(2, 0, LinearTerm(), {{2, q(1)}});
    return m;
}

}  // namespace

TEST_CASE("enabled actions", "[mdp]") {
    testing::TrainExample ex;
    CHECK(enabled(ex.model, ex.P) == std::vector<ActionId>{ex.tgv, ex.corail});
    CHECK(enabled(ex.model, ex.M) == std::vector<ActionId>{ex.train});
    CHECK(enabled(ex.model, ex.B) == std::vector<ActionId>{ex.stay});
}

TEST_CASE("validation", "[mdp]") {
    testing::TrainExample ex;
    CHECK(validate(ex.model).empty());

    SECTION("row sum") {
        ex.model.choices[ex.P][0].outcomes[1].probability = q(7, 10);
        auto v = validate(ex.model);
        CHECK(mentions(v, "sum to 9/10"));
        CHECK_THROWS_AS(require_valid(ex.model), ValidationError);
    }
    SECTION("absorbing weight") {
        ex.model.choices[ex.B][0].weight = LinearTerm(q(1));
        CHECK(mentions(validate(ex.model), "weight must be 0"));
    }
    SECTION("a policy that never reaches the absorbing state") {
        // M gets a second action looping back to P; P -> TGV, M -> loop traps.
        ex.model.add_choice(ex.M, ex.corail, LinearTerm(q(1)), {{ex.P, q(1)}});
        CHECK(mentions(validate(ex.model), "never reaches"));
    }
    SECTION("a self-loop alternative is also a trap") {
        ex.model.add_choice(ex.M, ex.corail, LinearTerm(q(1)), {{ex.M, q(1)}});
        CHECK(mentions(validate(ex.model), "{P, M}"));
    }
    SECTION("a cycle that leaks is fine") {
        ex.model.add_choice(ex.M, ex.corail, LinearTerm(q(1)), {{ex.P, q(1, 2)}, {ex.B, q(1, 2)}});
        CHECK(validate(ex.model).empty());
    }
}

TEST_CASE("instantiate", "[mdp]") {
    testing::TrainExample ex;
    ConstantMdp m = instantiate(ex.model, ex.pi0);
    CHECK(m.states == ex.model.states);
    CHECK(m.find_choice(ex.P, ex.tgv)->weight == 7);
    CHECK(m.find_choice(ex.P, ex.corail)->weight == 11);
    CHECK(m.find_choice(ex.M, ex.train)->weight == 1);
    CHECK(m.find_choice(ex.B, ex.stay)->weight == 0);
    CHECK(m.find_choice(ex.P, ex.tgv)->outcomes[0].probability == q(1, 5));
    CHECK(m.find_choice(ex.M, ex.tgv) == nullptr);

    Rng rng(3);
    for (int k = 0; k < 20; ++k) {
        auto r = testing::random_pmdp(rng);
        ConstantMdp c = instantiate(r.model, r.reference);
        for (StateId s = 0; s < r.model.state_count(); ++s)
            for (std::size_t i = 0; i < r.model.choices[s].size(); ++i)
                CHECK(c.choices[s][i].weight == evaluate(r.model.choices[s][i].weight, r.reference));
    }
}

TEST_CASE("value determination on the train example", "[mdp]") {
    testing::TrainExample ex;
    ConstantMdp m = instantiate(ex.model, ex.pi0);
    CHECK(mdp_vd(m, MdpPolicy{{ex.tgv, ex.train, ex.stay}}) == ValueVector{q(39, 4), q(1), q(0)});
    CHECK(mdp_vd(m, MdpPolicy{{ex.corail, ex.train, ex.stay}})[ex.P] == 11);

    ParamValueVector v = p_mdp_vd(ex.model, MdpPolicy{{ex.tgv, ex.train, ex.stay}});
    CHECK(v[ex.P] == q(5, 4) * LinearTerm::parameter(0) + LinearTerm::parameter(2));
    CHECK(v[ex.M] == LinearTerm::parameter(2));
    CHECK(v[ex.B].is_zero());
}

TEST_CASE("value determination agrees with an independent elimination", "[mdp][property]") {
    Rng rng(41);
    for (int k = 0; k < 50; ++k) {
        auto r = testing::random_pmdp(rng);
        ConstantMdp m = instantiate(r.model, r.reference);
        MdpPolicy mu = initial_policy(m);
        CHECK(mdp_vd(m, mu) == testing::policy_value_oracle(m, mu));
    }
}

TEST_CASE("parametric values instantiate to direct values", "[mdp][property]") {
    Rng rng(43);
    for (int k = 0; k < 50; ++k) {
        auto r = testing::random_pmdp(rng);
        MdpPolicy mu = initial_policy(r.model);
        for (StateId s = 0; s < r.model.state_count(); ++s) {
            auto acts = enabled(r.model, s);
            mu.action[s] = acts[static_cast<std::size_t>(testing::uniform(rng, 0, static_cast<long>(acts.size()) - 1))];
        }
        ParamValueVector v = p_mdp_vd(r.model, mu);
        CHECK(v[r.model.absorbing].is_zero());
        for (int p = 0; p < 5; ++p) {
            Instantiation pi;
            for (ParamId id = 0; id < r.parameters.size(); ++id) pi[id] = testing::random_rational(rng, -10, 10, 9);
            ValueVector direct = mdp_vd(instantiate(r.model, pi), mu);
            for (StateId s = 0; s < v.size(); ++s) CHECK(evaluate(v[s], pi) == direct[s]);
        }
    }
}

TEST_CASE("policy iteration", "[mdp]") {
    testing::TrainExample ex;
    MdpSolution sol = mdp_pi(instantiate(ex.model, ex.pi0));
    CHECK(sol.policy.action == std::vector<ActionId>{ex.tgv, ex.train, ex.stay});
    CHECK(sol.values[ex.P] == q(39, 4));

    ConstantMdp single = instantiate(single_action_model(), {{0, q(2)}, {1, q(3)}});
    MdpSolution s1 = mdp_pi(single);
    CHECK(s1.policy.action == std::vector<ActionId>{0, 0, 0});
    CHECK(s1.iterations == 1);
    CHECK(s1.values == ValueVector{q(7), q(3), q(0)});

    auto bf = brute_force_optimal(instantiate(ex.model, ex.pi0));
    REQUIRE(bf.optimal.size() == 1);
    CHECK(bf.optimal[0].action == sol.policy.action);
    CHECK(brute_force_optimal(single).optimal.size() == 1);
}

TEST_CASE("policy iteration matches exhaustive enumeration", "[mdp][property]") {
    Rng rng(47);
    for (int k = 0; k < 80; ++k) {
        auto r = testing::random_pmdp(rng);
        ConstantMdp m = instantiate(r.model, r.reference);
        auto sol = mdp_pi(m);
        auto bf = brute_force_optimal(m);
        CHECK(sol.values == bf.minimum);
        CHECK(std::find(bf.optimal.begin(), bf.optimal.end(), sol.policy) != bf.optimal.end());
    }
}

TEST_CASE("inverse problem on the train example", "[mdp]") {
    testing::TrainExample ex;
    auto inv = p_mdp_pi(ex.model, ex.pi0);
    CHECK(inv.policy.action == std::vector<ActionId>{ex.tgv, ex.train, ex.stay});
    CHECK(inv.raw.size() == 1);
    REQUIRE(inv.constraint.size() == 1);
    CHECK(to_string(inv.constraint.inequalities()[0], ex.params) == "5*p1 - 4*p2 + 4*p3 <= 0");

    // The same constraint read as p2 >= 5/4 p1 + p3.
    std::vector<Inequality> expected{Inequality::greater_equal(
        LinearTerm::parameter(1), q(5, 4) * LinearTerm::parameter(0) + LinearTerm::parameter(2))};
    CHECK(inv.constraint == simplify(expected));

    // Corail at pi0 is not optimal, so pi0 cannot satisfy its constraint.
    CHECK_THROWS_AS(p_mdp_pi(ex.model, ex.pi0, MdpPolicy{{ex.corail, ex.train, ex.stay}}), InternalOptimalityViolation);

    auto single = p_mdp_pi(single_action_model(), {{0, q(1)}, {1, q(1)}});
    CHECK(single.constraint.is_true());
    CHECK(single.raw.empty());
}

TEST_CASE("inverse constraints keep the reference policy optimal", "[mdp][property]") {
    Rng rng(53);
    for (int k = 0; k < 25; ++k) {
        auto r = testing::random_pmdp(rng);
        auto inv = p_mdp_pi(r.model, r.reference);
        CHECK(satisfies(inv.constraint, r.reference));
        std::size_t bound = 0;
        for (StateId s = 0; s < r.model.state_count(); ++s)
            if (s != r.model.absorbing) bound += enabled(r.model, s).size() - 1;
        CHECK(inv.raw.size() <= bound);

        for (const auto& pi : testing::sample_satisfying(rng, inv.constraint, r.reference, 40)) {
            auto bf = brute_force_optimal(instantiate(r.model, pi));
            CHECK(std::find(bf.optimal.begin(), bf.optimal.end(), inv.policy) != bf.optimal.end());
        }
    }
}

TEST_CASE("brute force refuses large policy spaces", "[mdp]") {
    Rng rng(1);
    auto r = testing::sized_pmdp(rng, 11, 4, 132);
    CHECK_THROWS_AS(brute_force_optimal(instantiate(r.model, r.reference), 1000), TooManyPolicies);
}
