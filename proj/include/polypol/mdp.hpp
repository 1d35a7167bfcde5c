#pragma once

/**
 * @file mdp.hpp
 * @brief (Parametric) Markov decision processes with an absorbing state.
 *
 * The objective is the expected total weight accumulated until the absorbing
 * state is reached, to be minimized. Weights are either Rationals (a plain
 * MDP) or LinearTerms over parameters (a PMDP); probabilities are always
 * constant rationals.
 *
 * Direct path:  mdp_vd, mdp_pi (Howard policy iteration).
 * Inverse path: p_mdp_vd, p_mdp_pi, which return a constraint K0 on the
 *               parameters under which the policy optimal at pi0 stays optimal.
 * Oracle:       brute_force_optimal enumerates every policy.
 */

#include "polypol/error.hpp"
#include "polypol/linsolve.hpp"
#include "polypol/param_core.hpp"
#include "polypol/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace polypol {

using StateId = std::size_t;
using ActionId = std::size_t;

struct Outcome {
    StateId target;
    Rational probability;

    bool operator==(const Outcome&) const = default;
};

/// One enabled (state, action) pair: its weight and its successor distribution.
template <class W>
struct Choice {
    ActionId action;
    W weight;
    std::vector<Outcome> outcomes;

    bool operator==(const Choice&) const = default;
};

template <class W>
struct Mdp {
    std::vector<std::string> states;
    std::vector<std::string> actions;
    StateId absorbing = 0;
    /// choices[s] in ascending action order; an action appears at most once per state.
    std::vector<std::vector<Choice<W>>> choices;

    std::size_t state_count() const noexcept { return states.size(); }

    StateId add_state(std::string name) {
        states.push_back(std::move(name));
        choices.emplace_back();
        return states.size() - 1;
    }

    ActionId add_action(std::string name) {
        actions.push_back(std::move(name));
        return actions.size() - 1;
    }

    void add_choice(StateId s, ActionId a, W weight, std::vector<Outcome> outcomes) {
        auto& list = choices.at(s);
        auto pos = std::lower_bound(list.begin(), list.end(), a,
                                    [](const Choice<W>& c, ActionId id) { return c.action < id; });
        list.insert(pos, Choice<W>{a, std::move(weight), std::move(outcomes)});
    }

    /// nullptr when `a` is not listed for `s`.
    const Choice<W>* find_choice(StateId s, ActionId a) const {
        for (const auto& c : choices.at(s))
            if (c.action == a) return &c;
        return nullptr;
    }

    bool operator==(const Mdp&) const = default;
};

using Pmdp = Mdp<LinearTerm>;
using ConstantMdp = Mdp<Rational>;

/// Action per state. The absorbing state's entry is its self-loop action.
struct MdpPolicy {
    std::vector<ActionId> action;

    bool operator==(const MdpPolicy&) const = default;
    auto operator<=>(const MdpPolicy&) const = default;
};

using ValueVector = std::vector<Rational>;
using ParamValueVector = std::vector<LinearTerm>;

namespace detail {

inline bool has_positive_outcome(const std::vector<Outcome>& outcomes) {
    return std::any_of(outcomes.begin(), outcomes.end(), [](const Outcome& o) { return o.probability > 0; });
}

inline bool is_zero_weight(const Rational& w) { return w == 0; }
inline bool is_zero_weight(const LinearTerm& w) { return w.is_zero(); }

}  // namespace detail

/// e(s): actions with some positive-probability successor.
template <class W>
std::vector<ActionId> enabled(const Mdp<W>& m, StateId s) {
    std::vector<ActionId> out;
    for (const auto& c : m.choices.at(s))
        if (detail::has_positive_outcome(c.outcomes)) out.push_back(c.action);
    return out;
}

/**
 * Structural checks: distributions sum to one, every state has an enabled
 * action, the absorbing state has exactly a weight-0 probability-1 self-loop,
 * and every policy reaches the absorbing state. The last condition is tested
 * exactly: no nonempty set C of non-absorbing states may be closed, i.e. have
 * every member own an action whose support stays inside C.
 *
 * Returns one human-readable message per violation; empty means valid.
 */
template <class W>
std::vector<std::string> validate(const Mdp<W>& m) {
    std::vector<std::string> violations;
    const std::size_t n = m.state_count();
    if (n == 0) {
        violations.emplace_back("model has no states");
        return violations;
    }
    if (m.choices.size() != n) {
        violations.emplace_back("choice table does not match the state list");
        return violations;
    }
    if (m.absorbing >= n) {
        violations.emplace_back("absorbing state index out of range");
        return violations;
    }

    bool references_ok = true;
    for (StateId s = 0; s < n; ++s) {
        std::set<ActionId> seen;
        for (const auto& c : m.choices[s]) {
            if (c.action >= m.actions.size()) {
                violations.push_back("state '" + m.states[s] + "' uses an undeclared action");
                references_ok = false;
                continue;
            }
            const std::string where = "state '" + m.states[s] + "', action '" + m.actions[c.action] + "'";
            if (!seen.insert(c.action).second) violations.push_back(where + ": listed twice");
            Rational sum = 0;
            for (const auto& o : c.outcomes) {
                if (o.target >= n) {
                    violations.push_back(where + ": successor index out of range");
                    references_ok = false;
                    continue;
                }
                if (o.probability < 0 || o.probability > 1)
                    violations.push_back(where + ": probability " + to_string(o.probability) + " outside [0,1]");
                sum += o.probability;
            }
            if (sum != 1) violations.push_back(where + ": probabilities sum to " + to_string(sum) + ", expected 1");
        }
        if (enabled(m, s).empty()) violations.push_back("state '" + m.states[s] + "' has no enabled action");
    }
    if (!references_ok) return violations;

    const StateId abs = m.absorbing;
    const auto& abs_choices = m.choices[abs];
    std::size_t abs_enabled = 0;
    for (const auto& c : abs_choices) {
        if (!detail::has_positive_outcome(c.outcomes)) continue;
        ++abs_enabled;
        bool self_loop = true;
        for (const auto& o : c.outcomes)
            if (o.probability > 0 && o.target != abs) self_loop = false;
        if (!self_loop)
            violations.push_back("absorbing state '" + m.states[abs] + "' has an action leaving it");
        if (!detail::is_zero_weight(c.weight))
            violations.push_back("absorbing state '" + m.states[abs] + "' self-loop weight must be 0");
    }
    if (abs_enabled != 1)
        violations.push_back("absorbing state '" + m.states[abs] + "' must have exactly one enabled action");

    // Greatest closed set avoiding the absorbing state.
    std::vector<bool> in_trap(n, true);
    in_trap[abs] = false;
    for (bool changed = true; changed;) {
        changed = false;
        for (StateId s = 0; s < n; ++s) {
            if (!in_trap[s]) continue;
            bool can_stay = false;
            for (const auto& c : m.choices[s]) {
                if (!detail::has_positive_outcome(c.outcomes)) continue;
                bool inside = std::all_of(c.outcomes.begin(), c.outcomes.end(), [&](const Outcome& o) {
                    return o.probability == 0 || in_trap[o.target];
                });
                if (inside) {
                    can_stay = true;
                    break;
                }
            }
            if (!can_stay) {
                in_trap[s] = false;
                changed = true;
            }
        }
    }
    std::string trapped;
    for (StateId s = 0; s < n; ++s)
        if (in_trap[s]) trapped += (trapped.empty() ? "" : ", ") + m.states[s];
    if (!trapped.empty())
        violations.push_back("some policy never reaches the absorbing state from {" + trapped + "}");

    return violations;
}

template <class W>
void require_valid(const Mdp<W>& m) {
    if (auto v = validate(m); !v.empty()) throw ValidationError(std::move(v));
}

/// M[pi]: every weight evaluated at pi. Throws MissingParameter.
inline ConstantMdp instantiate(const Pmdp& m, const Instantiation& pi) {
    ConstantMdp out;
    out.states = m.states;
    out.actions = m.actions;
    out.absorbing = m.absorbing;
    out.choices.resize(m.choices.size());
    for (std::size_t s = 0; s < m.choices.size(); ++s) {
        out.choices[s].reserve(m.choices[s].size());
        for (const auto& c : m.choices[s])
            out.choices[s].push_back(Choice<Rational>{c.action, evaluate(c.weight, pi), c.outcomes});
    }
    return out;
}

/// Constant-weight view of a PMDP whose weights carry no parameters.
inline ConstantMdp instantiate(const Pmdp& m) { return instantiate(m, Instantiation{}); }

/// Lowest-index enabled action in every state.
template <class W>
MdpPolicy initial_policy(const Mdp<W>& m) {
    MdpPolicy mu;
    mu.action.reserve(m.state_count());
    for (StateId s = 0; s < m.state_count(); ++s) {
        auto e = enabled(m, s);
        if (e.empty()) throw ValidationError({"state '" + m.states[s] + "' has no enabled action"});
        mu.action.push_back(e.front());
    }
    return mu;
}

namespace detail {

template <class W>
const Choice<W>& policy_choice(const Mdp<W>& m, const MdpPolicy& mu, StateId s) {
    if (mu.action.size() != m.state_count()) throw Error("policy does not cover every state");
    const Choice<W>* c = m.find_choice(s, mu.action[s]);
    if (c == nullptr || !has_positive_outcome(c->outcomes))
        throw Error("policy picks an action not enabled in state '" + m.states[s] + "'");
    return *c;
}

/// Shared body of mdp_vd and p_mdp_vd: SOLVE v[s] = w(s, mu[s]) + sum Prob * v[s'].
template <class W>
std::vector<W> value_determination(const Mdp<W>& m, const MdpPolicy& mu) {
    const std::size_t n = m.state_count();
    std::vector<std::size_t> row(n, n);
    std::vector<StateId> states;
    for (StateId s = 0; s < n; ++s) {
        if (s == m.absorbing) continue;
        row[s] = states.size();
        states.push_back(s);
    }

    RationalMatrix a(states.size());
    std::vector<W> b;
    b.reserve(states.size());
    for (std::size_t r = 0; r < states.size(); ++r) {
        const auto& c = policy_choice(m, mu, states[r]);
        b.push_back(c.weight);
        for (const auto& o : c.outcomes)
            if (o.target != m.absorbing) a(r, row[o.target]) += o.probability;
    }

    std::vector<W> solved = solve_affine_fixpoint(a, std::move(b));
    std::vector<W> v(n, W(Rational(0)));
    for (std::size_t r = 0; r < states.size(); ++r) v[states[r]] = std::move(solved[r]);
    return v;
}

/// w(s,a) + sum_{s'} Prob(s,a,s') * v[s'].
template <class W>
W action_value(const Choice<W>& c, const std::vector<W>& v) {
    W q = c.weight;
    for (const auto& o : c.outcomes) add_scaled(q, v[o.target], o.probability);
    return q;
}

}  // namespace detail

/// Value of `mu` in a constant MDP; the absorbing entry is 0.
inline ValueVector mdp_vd(const ConstantMdp& m, const MdpPolicy& mu) { return detail::value_determination(m, mu); }

/// Parametric value of `mu`: one LinearTerm per state.
inline ParamValueVector p_mdp_vd(const Pmdp& m, const MdpPolicy& mu) { return detail::value_determination(m, mu); }

struct MdpSolution {
    MdpPolicy policy;
    ValueVector values;
    std::size_t iterations = 0;
};

/**
 * Howard policy iteration for the minimal expected total weight. Starts from
 * the lowest-index enabled actions and switches an action only on a strict
 * improvement, so ties keep the current choice.
 */
inline MdpSolution mdp_pi(const ConstantMdp& m) {
    require_valid(m);
    MdpSolution sol;
    sol.policy = initial_policy(m);
    std::set<MdpPolicy> visited;

    for (;;) {
        if (!visited.insert(sol.policy).second)
            throw NonConvergence("policy iteration revisited a policy");
        ++sol.iterations;
        sol.values = mdp_vd(m, sol.policy);

        bool fixpoint = true;
        for (StateId s = 0; s < m.state_count(); ++s) {
            if (s == m.absorbing) continue;
            Rational optimum = sol.values[s];
            for (const auto& c : m.choices[s]) {
                if (!detail::has_positive_outcome(c.outcomes)) continue;
                Rational q = detail::action_value(c, sol.values);
                if (q < optimum) {
                    optimum = q;
                    sol.policy.action[s] = c.action;
                    fixpoint = false;
                }
            }
        }
        if (fixpoint) return sol;
    }
}

struct MdpInverseResult {
    Constraint constraint;              ///< simplified K0
    std::vector<Inequality> raw;        ///< one inequality per (state, non-chosen enabled action)
    MdpPolicy policy;                   ///< mu0
    ParamValueVector values;            ///< V = p_mdp_vd(M, mu0)
};

/**
 * Inverse problem with a caller-supplied mu0. The constraint states that no
 * single-state deviation from mu0 lowers the value:
 *   W_a(s) + sum Prob(s,a,s') V[s'] >= V[s]   for every s, every a != mu0[s].
 * Throws InternalOptimalityViolation if pi0 does not satisfy the result,
 * which happens exactly when mu0 is not optimal at pi0.
 */
inline MdpInverseResult p_mdp_pi(const Pmdp& m, const Instantiation& pi0, const MdpPolicy& mu0) {
    require_valid(m);
    MdpInverseResult out;
    out.policy = mu0;
    out.values = p_mdp_vd(m, mu0);

    for (StateId s = 0; s < m.state_count(); ++s) {
        if (s == m.absorbing) continue;
        for (const auto& c : m.choices[s]) {
            if (c.action == mu0.action[s] || !detail::has_positive_outcome(c.outcomes)) continue;
            out.raw.push_back(Inequality::greater_equal(detail::action_value(c, out.values), out.values[s]));
        }
    }
    out.constraint = simplify(std::span<const Inequality>(out.raw));
    if (!satisfies(out.constraint, pi0))
        throw InternalOptimalityViolation("reference instantiation violates the synthesized constraint");
    return out;
}

/// Inverse problem: mu0 is computed by policy iteration on M[pi0].
inline MdpInverseResult p_mdp_pi(const Pmdp& m, const Instantiation& pi0) {
    require_valid(m);
    MdpPolicy mu0 = mdp_pi(instantiate(m, pi0)).policy;
    return p_mdp_pi(m, pi0, mu0);
}

inline constexpr std::size_t default_policy_cap = 100000;

struct BruteForceMdpResult {
    ValueVector minimum;                ///< component-wise minimal value vector
    std::vector<MdpPolicy> optimal;     ///< every policy attaining it, in enumeration order
};

/// Enumerates every policy of a constant MDP. Throws TooManyPolicies above `cap`.
inline BruteForceMdpResult brute_force_optimal(const ConstantMdp& m, std::size_t cap = default_policy_cap) {
    const std::size_t n = m.state_count();
    std::vector<std::vector<ActionId>> options(n);
    std::size_t count = 1;
    for (StateId s = 0; s < n; ++s) {
        options[s] = enabled(m, s);
        if (options[s].empty()) throw ValidationError({"state '" + m.states[s] + "' has no enabled action"});
        if (count > cap / options[s].size()) throw TooManyPolicies("more than " + std::to_string(cap) + " policies");
        count *= options[s].size();
    }

    std::vector<std::pair<MdpPolicy, ValueVector>> all;
    all.reserve(count);
    std::vector<std::size_t> digit(n, 0);
    for (std::size_t k = 0; k < count; ++k) {
        MdpPolicy mu;
        mu.action.resize(n);
        for (StateId s = 0; s < n; ++s) mu.action[s] = options[s][digit[s]];
        ValueVector v = mdp_vd(m, mu);
        all.emplace_back(std::move(mu), std::move(v));
        for (StateId s = 0; s < n; ++s) {
            if (++digit[s] < options[s].size()) break;
            digit[s] = 0;
        }
    }

    BruteForceMdpResult out;
    out.minimum = all.front().second;
    for (const auto& [mu, v] : all)
        for (StateId s = 0; s < n; ++s)
            if (v[s] < out.minimum[s]) out.minimum[s] = v[s];
    for (auto& [mu, v] : all)
        if (v == out.minimum) out.optimal.push_back(mu);
    return out;
}

}  // namespace polypol
