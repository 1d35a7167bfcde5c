#pragma once

// Exact solver for affine fixpoint systems V = A*V + B.
//
// A is a constant rational matrix; the right-hand side may be rational or a
// vector of LinearTerms, in which case the parametric column is carried
// through the elimination unchanged in shape.

#include "polypol/error.hpp"
#include "polypol/param_core.hpp"
#include "polypol/rational.hpp"

#include <cstddef>
#include <utility>
#include <vector>

namespace polypol {

class RationalMatrix {
public:
    RationalMatrix() = default;
    explicit RationalMatrix(std::size_t n) : n_(n), entries_(n * n) {}

    static RationalMatrix identity(std::size_t n) {
        RationalMatrix m(n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
        return m;
    }

    std::size_t size() const noexcept { return n_; }

    Rational& operator()(std::size_t i, std::size_t j) { return entries_[i * n_ + j]; }
    const Rational& operator()(std::size_t i, std::size_t j) const { return entries_[i * n_ + j]; }

    bool operator==(const RationalMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<Rational> entries_;
};

/// Values accepted on the right-hand side: Rational or LinearTerm.
template <class T>
concept AffineValue = requires(T& dst, const T& src, const Rational& f) {
    { add_scaled(dst, src, f) };
    { dst *= f };
};

using TermVector = std::vector<LinearTerm>;

/**
 * Returns the unique V with V = A*V + B, by Gaussian elimination on (I - A)
 * with the first nonzero pivot in row order. Throws SingularSystem when
 * (I - A) is not invertible.
 */
template <AffineValue T>
std::vector<T> solve_affine_fixpoint(const RationalMatrix& a, std::vector<T> b) {
    const std::size_t n = a.size();
    if (b.size() != n) throw Error("solve_affine_fixpoint: dimension mismatch");

    RationalMatrix m(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m(i, j) = (i == j ? Rational(1) : Rational(0)) - a(i, j);

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && m(pivot, col) == 0) ++pivot;
        if (pivot == n) throw SingularSystem("I - A is singular (column " + std::to_string(col) + ")");
        if (pivot != col) {
            for (std::size_t j = col; j < n; ++j) std::swap(m(pivot, j), m(col, j));
            std::swap(b[pivot], b[col]);
        }
        Rational inv = 1 / m(col, col);
        for (std::size_t j = col; j < n; ++j) m(col, j) *= inv;
        b[col] *= inv;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (m(r, col) == 0) continue;
            Rational f = m(r, col);
            for (std::size_t j = col; j < n; ++j) m(r, j) -= f * m(col, j);
            add_scaled(b[r], b[col], Rational(-f));
        }
    }

    for (std::size_t k = n; k-- > 0;) {
        for (std::size_t j = k + 1; j < n; ++j) {
            if (m(k, j) != 0) add_scaled(b[k], b[j], Rational(-m(k, j)));
        }
    }
    return b;
}

}  // namespace polypol
