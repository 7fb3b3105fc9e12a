#pragma once

#include "psc/rational.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace psc::num {

/// Dense matrix of exact rationals.
class Matrix {
public:
    Matrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), data_(rows * cols) {}

    static Matrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    Rational& at(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    const Rational& at(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    Matrix operator*(const Matrix& o) const;
    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

    std::string str() const;

private:
    std::size_t rows_, cols_;
    std::vector<Rational> data_;
};

/// Exact inverse by Gauss-Jordan elimination; nullopt when singular.
std::optional<Matrix> invert(const Matrix& m);

struct Equation {
    std::vector<Rational> coeffs; // one entry per variable
    Rational rhs;
};

struct Interval {
    Rational lo, hi;
};

/// System of linear equalities over named variables, with optional
/// per-variable closed bounds.
struct LinearSystem {
    std::vector<std::string> variables;
    std::vector<Equation> equations;
    std::optional<std::vector<Interval>> bounds; // parallel to variables when present

    std::size_t add_variable(const std::string& name);
    void add_equation(Equation eq);
};

using Assignment = std::map<std::string, Rational>;

/// Exact Gaussian elimination. Returns the unique solution, or nullopt when
/// the system is rank-deficient or inconsistent. Ignores bounds.
std::optional<Assignment> solve_unique(const LinearSystem& system);

/// Decides satisfiability of the equations subject to the bounds (which must
/// be present for every variable). Gaussian elimination of the equalities
/// followed by Fourier-Motzkin elimination of the residual free variables;
/// residual intervals are resolved to their midpoint, so the result is
/// deterministic. Returns a satisfying assignment or nullopt.
std::optional<Assignment> feasible(const LinearSystem& system);

} // namespace psc::num
