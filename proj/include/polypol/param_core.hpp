#pragma once

/**
 * @file param_core.hpp
 * @brief Parameters, linear terms, linear inequalities and constraints.
 *
 * A LinearTerm is an affine expression `sum(c_i * p_i) + d` with exact
 * rational coefficients. An Inequality compares two terms with `<` or `<=`.
 * A Constraint is a conjunction of inequalities held in canonical form:
 *
 *   - every inequality is `t <= 0` or `t < 0`,
 *   - coefficients and constant of `t` are integers with gcd 1,
 *   - tautologies are dropped and duplicates merged,
 *   - among inequalities with parallel linear parts only the tightest is kept,
 *   - the conjunction is sorted, so equality of constraints is syntactic.
 *
 * Parameters are referred to by dense ids handed out by a ParameterSet; the
 * set is only needed to print names.
 */

#include "polypol/error.hpp"
#include "polypol/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace polypol {

using ParamId = std::size_t;

/// Ordered, name-unique parameter registry. Ids are 0-based and dense.
class ParameterSet {
public:
    ParameterSet() = default;

    explicit ParameterSet(const std::vector<std::string>& names) {
        for (const auto& n : names) add(n);
    }

    /// Registers a new parameter. Throws on duplicates.
    ParamId add(const std::string& name) {
        if (index_.contains(name)) throw Error("duplicate parameter name '" + name + "'");
        index_.emplace(name, names_.size());
        names_.push_back(name);
        return names_.size() - 1;
    }

    /// Returns the id of `name`, registering it first if needed.
    ParamId intern(const std::string& name) {
        if (auto it = index_.find(name); it != index_.end()) return it->second;
        return add(name);
    }

    std::optional<ParamId> find(std::string_view name) const {
        if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
        return std::nullopt;
    }

    const std::string& name(ParamId id) const { return names_.at(id); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::size_t size() const noexcept { return names_.size(); }
    bool empty() const noexcept { return names_.empty(); }

    bool operator==(const ParameterSet& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, ParamId> index_;
};

/// Assignment of rational values to (some) parameters.
using Instantiation = std::map<ParamId, Rational>;

class LinearTerm {
public:
    LinearTerm() = default;

    // NOLINTNEXTLINE(google-explicit-constructor): constants are terms
    LinearTerm(const Rational& constant) : constant_(constant) {}

    static LinearTerm parameter(ParamId id, const Rational& coefficient = 1) {
        LinearTerm t;
        if (coefficient != 0) t.coefficients_.emplace(id, coefficient);
        return t;
    }

    const std::map<ParamId, Rational>& coefficients() const noexcept { return coefficients_; }
    const Rational& constant() const noexcept { return constant_; }

    Rational coefficient(ParamId id) const {
        auto it = coefficients_.find(id);
        return it == coefficients_.end() ? Rational(0) : it->second;
    }

    bool is_constant() const noexcept { return coefficients_.empty(); }
    bool is_zero() const { return coefficients_.empty() && constant_ == 0; }

    /// this += factor * other, without building a temporary term.
    LinearTerm& add_scaled(const LinearTerm& other, const Rational& factor) {
        if (factor == 0) return *this;
        for (const auto& [id, c] : other.coefficients_) {
            auto [it, inserted] = coefficients_.try_emplace(id, 0);
            it->second += factor * c;
            if (it->second == 0) coefficients_.erase(it);
        }
        constant_ += factor * other.constant_;
        return *this;
    }

    LinearTerm& operator+=(const LinearTerm& other) { return add_scaled(other, 1); }
    LinearTerm& operator-=(const LinearTerm& other) { return add_scaled(other, -1); }

    LinearTerm& operator*=(const Rational& factor) {
        if (factor == 0) {
            coefficients_.clear();
            constant_ = 0;
            return *this;
        }
        for (auto& [id, c] : coefficients_) c *= factor;
        constant_ *= factor;
        return *this;
    }

    friend LinearTerm operator+(LinearTerm a, const LinearTerm& b) { return a += b; }
    friend LinearTerm operator-(LinearTerm a, const LinearTerm& b) { return a -= b; }
    friend LinearTerm operator-(LinearTerm a) { return a *= Rational(-1); }
    friend LinearTerm operator*(LinearTerm a, const Rational& f) { return a *= f; }
    friend LinearTerm operator*(const Rational& f, LinearTerm a) { return a *= f; }

    bool operator==(const LinearTerm& other) const {
        return constant_ == other.constant_ && coefficients_ == other.coefficients_;
    }

private:
    std::map<ParamId, Rational> coefficients_;  // never stores a zero
    Rational constant_;
};

/// Same-named overload for Rational so templates can accumulate either kind.
inline Rational& add_scaled(Rational& dst, const Rational& src, const Rational& factor) {
    return dst += factor * src;
}

inline LinearTerm& add_scaled(LinearTerm& dst, const LinearTerm& src, const Rational& factor) {
    return dst.add_scaled(src, factor);
}

inline Rational evaluate(const LinearTerm& term, const Instantiation& pi) {
    Rational value = term.constant();
    for (const auto& [id, c] : term.coefficients()) {
        auto it = pi.find(id);
        if (it == pi.end()) throw MissingParameter(id);
        value += c * it->second;
    }
    return value;
}

/// Replaces every assigned parameter by its value; unassigned ones stay symbolic.
inline LinearTerm substitute(const LinearTerm& term, const Instantiation& pi) {
    LinearTerm out(term.constant());
    for (const auto& [id, c] : term.coefficients()) {
        if (auto it = pi.find(id); it != pi.end())
            out += LinearTerm(c * it->second);
        else
            out += LinearTerm::parameter(id, c);
    }
    return out;
}

/// Canonical text: `c*name` addends in parameter-id order, constant last, `0` for zero.
inline std::string to_string(const LinearTerm& term, const ParameterSet& params) {
    std::string out;
    auto append = [&out](const Rational& value, const std::string& suffix) {
        if (out.empty()) {
            out = to_string(value) + suffix;
        } else if (value < 0) {
            Rational magnitude = -value;
            out += " - " + to_string(magnitude) + suffix;
        } else {
            out += " + " + to_string(value) + suffix;
        }
    };
    for (const auto& [id, c] : term.coefficients()) {
        std::string name = id < params.size() ? params.name(id) : "#" + std::to_string(id);
        append(c, "*" + name);
    }
    if (term.constant() != 0 || out.empty()) append(term.constant(), "");
    return out;
}

enum class Relation { LessEqual, Less };

inline const char* to_string(Relation rel) { return rel == Relation::Less ? "<" : "<="; }

/// `lhs rel rhs`. Built through the named factories; normalized form has rhs == 0.
struct Inequality {
    LinearTerm lhs;
    Relation relation = Relation::LessEqual;
    LinearTerm rhs;

    static Inequality less_equal(LinearTerm a, LinearTerm b) {
        return {std::move(a), Relation::LessEqual, std::move(b)};
    }
    static Inequality less(LinearTerm a, LinearTerm b) { return {std::move(a), Relation::Less, std::move(b)}; }
    static Inequality greater_equal(LinearTerm a, LinearTerm b) { return less_equal(std::move(b), std::move(a)); }
    static Inequality greater(LinearTerm a, LinearTerm b) { return less(std::move(b), std::move(a)); }

    /// lhs - rhs, the quantity compared against zero.
    LinearTerm difference() const { return lhs - rhs; }

    bool operator==(const Inequality&) const = default;
};

inline bool holds(const Inequality& iq, const Instantiation& pi) {
    Rational d = evaluate(iq.difference(), pi);
    return iq.relation == Relation::Less ? d < 0 : d <= 0;
}

inline std::string to_string(const Inequality& iq, const ParameterSet& params) {
    return to_string(iq.lhs, params) + " " + to_string(iq.relation) + " " + to_string(iq.rhs, params);
}

struct Tautology {
    bool operator==(const Tautology&) const = default;
};
struct ContradictoryInequality {
    bool operator==(const ContradictoryInequality&) const = default;
};

using NormalizedInequality = std::variant<Inequality, Tautology, ContradictoryInequality>;

namespace detail {

/// Scales `t` by a positive factor so all coefficients and the constant are coprime integers.
inline LinearTerm make_primitive(const LinearTerm& t) {
    Integer den_lcm = 1;
    auto take_den = [&den_lcm](const Rational& q) {
        mpz_lcm(den_lcm.get_mpz_t(), den_lcm.get_mpz_t(), q.get_den_mpz_t());
    };
    for (const auto& [id, c] : t.coefficients()) take_den(c);
    take_den(t.constant());

    Integer num_gcd = 0;
    auto take_num = [&num_gcd, &den_lcm](const Rational& q) {
        Integer scaled = q.get_num() * (den_lcm / q.get_den());
        mpz_gcd(num_gcd.get_mpz_t(), num_gcd.get_mpz_t(), scaled.get_mpz_t());
    };
    for (const auto& [id, c] : t.coefficients()) take_num(c);
    take_num(t.constant());
    if (num_gcd == 0) return t;

    Rational factor(den_lcm, num_gcd);
    factor.canonicalize();
    return t * factor;
}

}  // namespace detail

/**
 * Brings `iq` into `t rel 0` form with coprime integer coefficients. Only
 * positive scaling is applied, so the sign of the leading coefficient is
 * whatever the inequality direction dictates.
 */
inline NormalizedInequality normalize(const Inequality& iq) {
    LinearTerm d = iq.difference();
    if (d.is_constant()) {
        bool ok = iq.relation == Relation::Less ? d.constant() < 0 : d.constant() <= 0;
        if (ok) return Tautology{};
        return ContradictoryInequality{};
    }
    return Inequality{detail::make_primitive(d), iq.relation, LinearTerm()};
}

namespace detail {

inline int compare(const Rational& a, const Rational& b) { return cmp(a, b) < 0 ? -1 : (cmp(a, b) > 0 ? 1 : 0); }

/// Lexicographic order over (parameter id, coefficient) pairs.
inline int compare_linear_part(const LinearTerm& a, const LinearTerm& b) {
    auto ia = a.coefficients().begin();
    auto ib = b.coefficients().begin();
    for (; ia != a.coefficients().end() && ib != b.coefficients().end(); ++ia, ++ib) {
        if (ia->first != ib->first) return ia->first < ib->first ? -1 : 1;
        if (int c = compare(ia->second, ib->second)) return c;
    }
    if (ia == a.coefficients().end() && ib == b.coefficients().end()) return 0;
    return ia == a.coefficients().end() ? -1 : 1;
}

inline bool canonical_less(const Inequality& a, const Inequality& b) {
    if (int c = compare_linear_part(a.lhs, b.lhs)) return c < 0;
    if (int c = compare(a.lhs.constant(), b.lhs.constant())) return c < 0;
    return a.relation == Relation::LessEqual && b.relation == Relation::Less;
}

}  // namespace detail

class Constraint;
Constraint simplify(std::span<const Inequality> inequalities);

/// Conjunction of canonical inequalities. Empty means True.
class Constraint {
public:
    /// The empty conjunction.
    Constraint() = default;

    static Constraint truth() { return {}; }

    /// Canonical False: the single inequality `1 <= 0`.
    static Constraint falsity() {
        Constraint k;
        k.inequalities_.push_back(Inequality::less_equal(LinearTerm(Rational(1)), LinearTerm()));
        return k;
    }

    const std::vector<Inequality>& inequalities() const noexcept { return inequalities_; }
    std::size_t size() const noexcept { return inequalities_.size(); }
    bool is_true() const noexcept { return inequalities_.empty(); }
    bool is_false() const {
        return inequalities_.size() == 1 && inequalities_.front().lhs.is_constant();
    }

    bool operator==(const Constraint&) const = default;

private:
    friend Constraint simplify(std::span<const Inequality> inequalities);
    std::vector<Inequality> inequalities_;
};

/**
 * Normalizes every inequality, drops tautologies, and keeps only the tightest
 * member of each family of inequalities whose linear parts are positive
 * multiples of one another. Any constant-false member collapses the result
 * to Constraint::falsity(). The result is logically equivalent to the input.
 */
inline Constraint simplify(std::span<const Inequality> inequalities) {
    // Keyed by the primitive integer direction of the linear part; value is
    // (constant divided by the same gcd, relation). A larger constant is tighter.
    struct Bound {
        Rational constant;
        Relation relation;
    };
    auto direction_less = [](const LinearTerm& a, const LinearTerm& b) {
        return detail::compare_linear_part(a, b) < 0;
    };
    std::map<LinearTerm, Bound, decltype(direction_less)> tightest(direction_less);

    for (const auto& raw : inequalities) {
        NormalizedInequality n = normalize(raw);
        if (std::holds_alternative<Tautology>(n)) continue;
        if (std::holds_alternative<ContradictoryInequality>(n)) return Constraint::falsity();
        const Inequality& iq = std::get<Inequality>(n);

        Integer g = 0;
        for (const auto& [id, c] : iq.lhs.coefficients())
            mpz_gcd(g.get_mpz_t(), g.get_mpz_t(), c.get_num_mpz_t());
        LinearTerm direction;
        for (const auto& [id, c] : iq.lhs.coefficients())
            direction += LinearTerm::parameter(id, Rational(c.get_num() / g));
        Rational constant(iq.lhs.constant().get_num(), g);
        constant.canonicalize();

        auto [it, inserted] = tightest.try_emplace(direction, Bound{constant, iq.relation});
        if (inserted) continue;
        Bound& b = it->second;
        if (constant > b.constant || (constant == b.constant && iq.relation == Relation::Less)) {
            b = Bound{constant, iq.relation};
        }
    }

    Constraint k;
    for (const auto& [direction, bound] : tightest) {
        LinearTerm t = direction + LinearTerm(bound.constant);
        k.inequalities_.push_back(Inequality{detail::make_primitive(t), bound.relation, LinearTerm()});
    }
    std::sort(k.inequalities_.begin(), k.inequalities_.end(), detail::canonical_less);
    return k;
}

inline Constraint simplify(const Constraint& k) { return simplify(std::span<const Inequality>(k.inequalities())); }

inline Constraint conjoin(const Constraint& a, const Constraint& b) {
    std::vector<Inequality> all = a.inequalities();
    all.insert(all.end(), b.inequalities().begin(), b.inequalities().end());
    return simplify(std::span<const Inequality>(all));
}

/// pi |= K. Requires pi to assign every parameter occurring in K.
inline bool satisfies(const Constraint& k, const Instantiation& pi) {
    return std::all_of(k.inequalities().begin(), k.inequalities().end(),
                       [&pi](const Inequality& iq) { return holds(iq, pi); });
}

/**
 * Substitutes the assigned parameters and re-simplifies. Throws Contradiction
 * if some inequality becomes constant-false.
 */
inline Constraint partial_instantiate(const Constraint& k, const Instantiation& pi) {
    std::vector<Inequality> substituted;
    substituted.reserve(k.size());
    for (const auto& iq : k.inequalities()) {
        Inequality s{substitute(iq.lhs, pi), iq.relation, substitute(iq.rhs, pi)};
        if (std::holds_alternative<ContradictoryInequality>(normalize(s)))
            throw Contradiction("constraint is unsatisfiable under the given instantiation");
        substituted.push_back(std::move(s));
    }
    return simplify(std::span<const Inequality>(substituted));
}

/// Parameters occurring anywhere in `k`.
inline std::vector<ParamId> parameters_of(const Constraint& k) {
    std::vector<ParamId> ids;
    for (const auto& iq : k.inequalities())
        for (const auto& [id, c] : iq.lhs.coefficients()) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return ids;
}

}  // namespace polypol
