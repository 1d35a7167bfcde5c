#pragma once

/**
 * @file maxplus.hpp
 * @brief Maximal circuit mean of (parametric) max-plus matrices.
 *
 * A matrix entry is either a weight or epsilon (no edge). A policy picks one
 * outgoing edge per state. Value determination computes a generalized
 * eigenmode (eta, x) of the policy graph; policy iteration improves the
 * policy until (eta, x) is an eigenmode of the whole matrix.
 *
 * Every "arbitrary" choice is fixed so runs are reproducible:
 *   - circuit search starts at the smallest remaining state and follows the
 *     policy until a state repeats;
 *   - the anchor of a circuit is its smallest state, with x := 0;
 *   - states reaching the anchor are visited depth-first over reversed policy
 *     edges, predecessors in ascending order;
 *   - "any e in K(i)" and "any e in L(i)" pick the smallest target.
 */

#include "polypol/error.hpp"
#include "polypol/param_core.hpp"
#include "polypol/rational.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace polypol {

template <class T>
class MaxPlusMatrix {
public:
    MaxPlusMatrix() = default;
    explicit MaxPlusMatrix(std::size_t n) : n_(n), entries_(n * n) {}

    std::size_t size() const noexcept { return n_; }

    const std::optional<T>& operator()(std::size_t i, std::size_t j) const { return entries_.at(i * n_ + j); }
    bool has_edge(std::size_t i, std::size_t j) const { return (*this)(i, j).has_value(); }
    const T& weight(std::size_t i, std::size_t j) const { return *(*this)(i, j); }

    void set(std::size_t i, std::size_t j, T w) { entries_.at(i * n_ + j) = std::move(w); }
    void erase(std::size_t i, std::size_t j) { entries_.at(i * n_ + j).reset(); }

    std::vector<std::size_t> successors(std::size_t i) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n_; ++j)
            if (has_edge(i, j)) out.push_back(j);
        return out;
    }

    bool operator==(const MaxPlusMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::optional<T>> entries_;
};

using PMaxPlusMatrix = MaxPlusMatrix<LinearTerm>;
using NumericMatrix = MaxPlusMatrix<Rational>;

/// successor[i] = j means the policy uses edge (i, j).
struct MaxPolicy {
    std::vector<std::size_t> successor;

    bool operator==(const MaxPolicy&) const = default;
    auto operator<=>(const MaxPolicy&) const = default;
};

/// (eta, x); with LinearTerm entries this is the parametric eigenmode (H, X).
template <class T>
struct BasicEigenmode {
    std::vector<T> eta;
    std::vector<T> x;

    bool operator==(const BasicEigenmode&) const = default;
};

using Eigenmode = BasicEigenmode<Rational>;
using ParamEigenmode = BasicEigenmode<LinearTerm>;

/// M[pi]; epsilon stays epsilon. Throws MissingParameter.
inline NumericMatrix instantiate(const PMaxPlusMatrix& m, const Instantiation& pi) {
    NumericMatrix out(m.size());
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if (m.has_edge(i, j)) out.set(i, j, evaluate(m.weight(i, j), pi));
    return out;
}

/// Smallest-index successor in every row.
template <class T>
MaxPolicy first_successor_policy(const MaxPlusMatrix<T>& m) {
    MaxPolicy mu;
    for (std::size_t i = 0; i < m.size(); ++i) {
        auto succ = m.successors(i);
        if (succ.empty()) throw ValidationError({"row " + std::to_string(i + 1) + " has no edge"});
        mu.successor.push_back(succ.front());
    }
    return mu;
}

template <class T>
void check_policy(const MaxPlusMatrix<T>& m, const MaxPolicy& mu) {
    if (mu.successor.size() != m.size()) throw Error("policy does not cover every state");
    for (std::size_t i = 0; i < m.size(); ++i)
        if (mu.successor[i] >= m.size() || !m.has_edge(i, mu.successor[i]))
            throw Error("policy uses a missing edge from state " + std::to_string(i + 1));
}

/**
 * The circuit reached by following `mu` from `start`, listed from its first
 * repeated state onwards.
 */
inline std::vector<std::size_t> policy_circuit(const MaxPolicy& mu, std::size_t start) {
    std::vector<std::size_t> position(mu.successor.size(), mu.successor.size());
    std::vector<std::size_t> path;
    std::size_t s = start;
    while (position[s] == mu.successor.size()) {
        position[s] = path.size();
        path.push_back(s);
        s = mu.successor[s];
    }
    return {path.begin() + static_cast<std::ptrdiff_t>(position[s]), path.end()};
}

/// All circuits of the functional graph of `mu`, each starting at its smallest state.
inline std::vector<std::vector<std::size_t>> policy_circuits(const MaxPolicy& mu) {
    std::set<std::vector<std::size_t>> found;
    for (std::size_t s = 0; s < mu.successor.size(); ++s) {
        auto c = policy_circuit(mu, s);
        std::rotate(c.begin(), std::min_element(c.begin(), c.end()), c.end());
        found.insert(std::move(c));
    }
    return {found.begin(), found.end()};
}

template <class T>
T circuit_mean(const MaxPlusMatrix<T>& m, const std::vector<std::size_t>& circuit) {
    T total = T(Rational(0));
    for (std::size_t k = 0; k < circuit.size(); ++k)
        total += m.weight(circuit[k], circuit[(k + 1) % circuit.size()]);
    total *= Rational(1, static_cast<unsigned long>(circuit.size()));
    return total;
}

namespace detail {

template <class T>
BasicEigenmode<T> value_determination(const MaxPlusMatrix<T>& m, const MaxPolicy& mu) {
    check_policy(m, mu);
    const std::size_t n = m.size();
    BasicEigenmode<T> em{std::vector<T>(n, T(Rational(0))), std::vector<T>(n, T(Rational(0)))};

    std::vector<std::vector<std::size_t>> predecessors(n);
    for (std::size_t j = 0; j < n; ++j) predecessors[mu.successor[j]].push_back(j);

    std::vector<bool> done(n, false);
    for (std::size_t start = 0; start < n; ++start) {
        if (done[start]) continue;
        // The undone states are closed under mu: a state whose successor
        // reaches an earlier anchor reaches that anchor itself.
        auto circuit = policy_circuit(mu, start);
        T mean = circuit_mean(m, circuit);
        std::size_t anchor = *std::min_element(circuit.begin(), circuit.end());

        em.eta[anchor] = mean;
        em.x[anchor] = T(Rational(0));
        done[anchor] = true;
        std::vector<std::size_t> stack{anchor};
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            const auto& preds = predecessors[i];
            for (auto it = preds.rbegin(); it != preds.rend(); ++it) {
                std::size_t j = *it;
                if (done[j]) continue;
                done[j] = true;
                em.eta[j] = mean;
                T xj = m.weight(j, i);
                xj -= mean;
                xj += em.x[i];
                em.x[j] = std::move(xj);
                stack.push_back(j);
            }
        }
    }
    return em;
}

}  // namespace detail

/// Eigenmode of the policy graph M^mu.
inline Eigenmode max_vd(const NumericMatrix& m, const MaxPolicy& mu) { return detail::value_determination(m, mu); }

/// Parametric eigenmode (H, X) of M^mu, same control flow as max_vd.
inline ParamEigenmode p_max_vd(const PMaxPlusMatrix& m, const MaxPolicy& mu) {
    return detail::value_determination(m, mu);
}

enum class ImprovementKind {
    Fixpoint,  ///< I = J = empty: (eta, x) is an eigenmode of M
    Eta,       ///< J nonempty: switch to an edge with larger eta
    Bias,      ///< J empty, I nonempty: switch to an edge with larger w - eta_j + x_j
};

struct Improvement {
    ImprovementKind kind = ImprovementKind::Fixpoint;
    MaxPolicy policy;                       ///< the new policy; equals the input on Fixpoint
    std::vector<std::size_t> eta_states;    ///< J
    std::vector<std::size_t> bias_states;   ///< I
};

/**
 * One policy-improvement step:
 *   J    = { i | max_{(i,j)} eta_j > eta_i }
 *   K(i) = argmax_{(i,j)} eta_j
 *   I    = { i | max_{j in K(i)} (w_ij - eta_j + x_j) > x_i }
 *   L(i) = argmax_{j in K(i)} (w_ij - eta_j + x_j)
 */
inline Improvement max_pimpr(const NumericMatrix& m, const MaxPolicy& mu, const Eigenmode& em) {
    check_policy(m, mu);
    const std::size_t n = m.size();
    Improvement out;
    std::vector<std::size_t> k_choice(n), l_choice(n);

    for (std::size_t i = 0; i < n; ++i) {
        auto succ = m.successors(i);
        Rational best_eta = em.eta[succ.front()];
        for (auto j : succ)
            if (em.eta[j] > best_eta) best_eta = em.eta[j];
        if (best_eta > em.eta[i]) out.eta_states.push_back(i);

        std::optional<Rational> best_bias;
        for (auto j : succ) {
            if (em.eta[j] != best_eta) continue;
            if (!best_bias) k_choice[i] = j;
            Rational bias = m.weight(i, j) - em.eta[j] + em.x[j];
            if (!best_bias || bias > *best_bias) {
                best_bias = bias;
                l_choice[i] = j;
            }
        }
        if (*best_bias > em.x[i]) out.bias_states.push_back(i);
    }

    out.policy = mu;
    if (!out.eta_states.empty()) {
        out.kind = ImprovementKind::Eta;
        for (auto i : out.eta_states) out.policy.successor[i] = k_choice[i];
    } else if (!out.bias_states.empty()) {
        out.kind = ImprovementKind::Bias;
        for (auto i : out.bias_states) out.policy.successor[i] = l_choice[i];
    }
    return out;
}

struct MaxPiStep {
    MaxPolicy policy;
    Eigenmode eigenmode;
    ImprovementKind improvement;
};

struct MaxPiResult {
    Eigenmode eigenmode;
    MaxPolicy policy;
    std::vector<MaxPiStep> trace;  ///< one entry per value determination
};

/// Policy iteration from `initial` until max_pimpr reports a fixpoint.
inline MaxPiResult max_pi(const NumericMatrix& m, const MaxPolicy& initial) {
    check_policy(m, initial);

    // Number of distinct policies, saturated.
    std::size_t cap = 1;
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::size_t deg = m.successors(i).size();
        cap = cap > static_cast<std::size_t>(-1) / deg ? static_cast<std::size_t>(-1) : cap * deg;
    }

    MaxPiResult out;
    MaxPolicy mu = initial;
    for (std::size_t round = 0;; ++round) {
        if (round >= cap) throw NonConvergence("policy iteration exceeded the number of policies");
        Eigenmode em = max_vd(m, mu);
        Improvement imp = max_pimpr(m, mu, em);
        out.trace.push_back(MaxPiStep{mu, em, imp.kind});
        if (imp.kind == ImprovementKind::Fixpoint) {
            out.eigenmode = std::move(em);
            out.policy = std::move(mu);
            return out;
        }
        mu = std::move(imp.policy);
    }
}

inline MaxPiResult max_pi(const NumericMatrix& m) { return max_pi(m, first_successor_policy(m)); }

template <class T>
bool strongly_connected(const MaxPlusMatrix<T>& m) {
    const std::size_t n = m.size();
    if (n == 0) return false;
    auto reach_all = [&](bool forward) {
        std::vector<bool> seen(n, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        while (!stack.empty()) {
            std::size_t i = stack.back();
            stack.pop_back();
            for (std::size_t j = 0; j < n; ++j) {
                bool edge = forward ? m.has_edge(i, j) : m.has_edge(j, i);
                if (edge && !seen[j]) {
                    seen[j] = true;
                    stack.push_back(j);
                }
            }
        }
        return std::all_of(seen.begin(), seen.end(), [](bool b) { return b; });
    };
    return reach_all(true) && reach_all(false);
}

struct MaxPlusInverseRow {
    std::size_t from;
    std::size_t to;
    Inequality inequality;
};

struct MaxPlusInverseResult {
    Constraint constraint;                 ///< simplified K0
    std::vector<MaxPlusInverseRow> raw;    ///< generation order: per edge, eta row then bias row
    MaxPolicy policy;                      ///< mu0
    Eigenmode reference;                   ///< (eta, x) at pi0
    ParamEigenmode parametric;             ///< (H, X)
};

/**
 * Inverse problem: constraint under which the circuit chosen by the optimal
 * policy at pi0 remains a maximal-mean circuit. For every edge (i, j):
 *
 *   H_j > H_i                   if eta_j >  eta_i
 *   H_j <= H_i                  if eta_j <= eta_i
 *   W_ij - H_j + X_j >  X_i     if eta_j <= eta_i and w_ij - eta_j + x_j >  x_i
 *   W_ij - H_j + X_j <= X_i     if eta_j <= eta_i and w_ij - eta_j + x_j <= x_i
 *
 * where (eta, x) is the reference eigenmode and (H, X) the parametric one.
 */
inline MaxPlusInverseResult p_max_pi(const PMaxPlusMatrix& m, const Instantiation& pi0) {
    MaxPlusInverseResult out;
    NumericMatrix reference = instantiate(m, pi0);
    MaxPiResult direct = max_pi(reference);
    // Strong connectivity is sufficient but not needed: it is enough that
    // every state reaches a maximal-mean circuit, i.e. eta is uniform.
    const auto& e = direct.eigenmode.eta;
    if (std::adjacent_find(e.begin(), e.end(), std::not_equal_to<>()) != e.end())
        throw NotStronglyConnected("some state cannot reach a circuit of maximal mean");
    out.policy = direct.policy;
    out.reference = direct.eigenmode;
    out.parametric = p_max_vd(m, out.policy);

    const auto& eta = out.reference.eta;
    const auto& x = out.reference.x;
    const auto& h = out.parametric.eta;
    const auto& xs = out.parametric.x;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
            if (!m.has_edge(i, j)) continue;
            if (eta[j] > eta[i]) {
                out.raw.push_back({i, j, Inequality::greater(h[j], h[i])});
                continue;
            }
            out.raw.push_back({i, j, Inequality::less_equal(h[j], h[i])});
            LinearTerm lhs = m.weight(i, j) - h[j] + xs[j];
            Rational bias = reference.weight(i, j) - eta[j] + x[j];
            if (bias > x[i])
                out.raw.push_back({i, j, Inequality::greater(std::move(lhs), xs[i])});
            else
                out.raw.push_back({i, j, Inequality::less_equal(std::move(lhs), xs[i])});
        }
    }

    std::vector<Inequality> rows;
    rows.reserve(out.raw.size());
    for (const auto& r : out.raw) rows.push_back(r.inequality);
    out.constraint = simplify(std::span<const Inequality>(rows));
    if (!satisfies(out.constraint, pi0))
        throw InternalOptimalityViolation("reference instantiation violates the synthesized constraint");
    return out;
}

inline constexpr std::size_t default_circuit_cap = 10;

struct McmResult {
    Rational rho;
    std::vector<std::vector<std::size_t>> circuits;  ///< maximizers, each starting at its smallest state
};

/**
 * Maximal circuit mean by enumerating every simple circuit. Exponential;
 * refuses matrices larger than `cap`.
 */
inline McmResult brute_force_mcm(const NumericMatrix& m, std::size_t cap = default_circuit_cap) {
    const std::size_t n = m.size();
    if (n > cap) throw TooLarge("brute-force circuit enumeration limited to " + std::to_string(cap) + " states");

    McmResult best;
    bool found = false;
    std::vector<std::size_t> path;
    std::vector<bool> on_path(n, false);

    auto consider = [&](const Rational& total) {
        Rational mean = total / static_cast<unsigned long>(path.size());
        if (!found || mean > best.rho) {
            found = true;
            best.rho = mean;
            best.circuits.clear();
        }
        if (mean == best.rho) best.circuits.push_back(path);
    };

    // Circuits are rooted at their smallest state; only larger states are explored.
    auto extend = [&](auto&& self, std::size_t root, std::size_t at, const Rational& total) -> void {
        for (std::size_t j = root; j < n; ++j) {
            if (!m.has_edge(at, j)) continue;
            Rational next = total + m.weight(at, j);
            if (j == root) {
                consider(next);
            } else if (!on_path[j]) {
                on_path[j] = true;
                path.push_back(j);
                self(self, root, j, next);
                path.pop_back();
                on_path[j] = false;
            }
        }
    };
    for (std::size_t root = 0; root < n; ++root) {
        path.assign(1, root);
        on_path[root] = true;
        extend(extend, root, root, Rational(0));
        on_path[root] = false;
    }
    if (!found) throw Error("matrix has no circuit");
    std::sort(best.circuits.begin(), best.circuits.end());
    return best;
}

}  // namespace polypol
