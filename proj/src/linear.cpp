#include "psc/linear.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace psc::num {

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m.at(i, i) = Rational(1);
    return m;
}

Matrix Matrix::operator*(const Matrix& o) const {
    if (cols_ != o.rows_) throw std::invalid_argument("matrix dimension mismatch");
    Matrix r(rows_, o.cols_);
    for (std::size_t i = 0; i < rows_; ++i)
        for (std::size_t k = 0; k < cols_; ++k) {
            const Rational& a = at(i, k);
            if (a.is_zero()) continue;
            for (std::size_t j = 0; j < o.cols_; ++j)
                r.at(i, j) += a * o.at(k, j);
        }
    return r;
}

std::string Matrix::str() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < rows_; ++i) {
        for (std::size_t j = 0; j < cols_; ++j) {
            if (j) os << ' ';
            os << at(i, j).str();
        }
        os << '\n';
    }
    return os.str();
}

std::optional<Matrix> invert(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("invert requires a square matrix");
    const std::size_t n = m.rows();
    Matrix a = m;
    Matrix inv = Matrix::identity(n);
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        while (pivot < n && a.at(pivot, col).is_zero()) ++pivot;
        if (pivot == n) return std::nullopt; // singular
        if (pivot != col) {
            for (std::size_t j = 0; j < n; ++j) {
                std::swap(a.at(pivot, j), a.at(col, j));
                std::swap(inv.at(pivot, j), inv.at(col, j));
            }
        }
        Rational d = a.at(col, col);
        for (std::size_t j = 0; j < n; ++j) {
            a.at(col, j) /= d;
            inv.at(col, j) /= d;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (i == col || a.at(i, col).is_zero()) continue;
            Rational f = a.at(i, col);
            for (std::size_t j = 0; j < n; ++j) {
                a.at(i, j) -= f * a.at(col, j);
                inv.at(i, j) -= f * inv.at(col, j);
            }
        }
    }
    return inv;
}

std::size_t LinearSystem::add_variable(const std::string& name) {
    variables.push_back(name);
    if (bounds) bounds->push_back(Interval{Rational(0), Rational(1)});
    return variables.size() - 1;
}

void LinearSystem::add_equation(Equation eq) {
    if (eq.coeffs.size() != variables.size())
        throw std::invalid_argument("equation width does not match variable count");
    equations.push_back(std::move(eq));
}

namespace {

struct Rref {
    // reduced rows: coefficient part + rhs
    std::vector<std::vector<Rational>> rows;
    std::vector<Rational> rhs;
    std::vector<int> pivot_row_of_col; // -1 when the column is free
    bool inconsistent = false;
};

Rref reduce(const LinearSystem& system) {
    const std::size_t n = system.variables.size();
    Rref r;
    r.pivot_row_of_col.assign(n, -1);
    for (const auto& eq : system.equations) {
        if (eq.coeffs.size() != n) throw std::invalid_argument("malformed equation row");
        r.rows.push_back(eq.coeffs);
        r.rhs.push_back(eq.rhs);
    }
    std::size_t rank = 0;
    for (std::size_t col = 0; col < n && rank < r.rows.size(); ++col) {
        std::size_t pivot = rank;
        while (pivot < r.rows.size() && r.rows[pivot][col].is_zero()) ++pivot;
        if (pivot == r.rows.size()) continue;
        std::swap(r.rows[pivot], r.rows[rank]);
        std::swap(r.rhs[pivot], r.rhs[rank]);
        Rational d = r.rows[rank][col];
        for (auto& c : r.rows[rank]) c /= d;
        r.rhs[rank] /= d;
        for (std::size_t i = 0; i < r.rows.size(); ++i) {
            if (i == rank || r.rows[i][col].is_zero()) continue;
            Rational f = r.rows[i][col];
            for (std::size_t j = 0; j < n; ++j) r.rows[i][j] -= f * r.rows[rank][j];
            r.rhs[i] -= f * r.rhs[rank];
        }
        r.pivot_row_of_col[col] = static_cast<int>(rank);
        ++rank;
    }
    for (std::size_t i = rank; i < r.rows.size(); ++i) {
        bool all_zero = std::all_of(r.rows[i].begin(), r.rows[i].end(),
                                    [](const Rational& c) { return c.is_zero(); });
        if (all_zero && !r.rhs[i].is_zero()) r.inconsistent = true;
    }
    return r;
}

} // namespace

std::optional<Assignment> solve_unique(const LinearSystem& system) {
    Rref r = reduce(system);
    if (r.inconsistent) return std::nullopt;
    Assignment result;
    for (std::size_t col = 0; col < system.variables.size(); ++col) {
        int row = r.pivot_row_of_col[col];
        if (row < 0) return std::nullopt; // free variable: not determined
        // a pivot row may still involve free columns; with none free, it is pure
        result[system.variables[col]] = r.rhs[static_cast<std::size_t>(row)];
    }
    return result;
}

namespace {

// Inequality over the free variables: sum(coeffs * x) <= constant.
struct Ineq {
    std::vector<Rational> coeffs;
    Rational constant;
};

} // namespace

std::optional<Assignment> feasible(const LinearSystem& system) {
    if (!system.bounds || system.bounds->size() != system.variables.size())
        throw std::invalid_argument("feasible requires bounds for every variable");
    const std::size_t n = system.variables.size();
    Rref r = reduce(system);
    if (r.inconsistent) return std::nullopt;

    std::vector<std::size_t> frees;
    for (std::size_t col = 0; col < n; ++col)
        if (r.pivot_row_of_col[col] < 0) frees.push_back(col);
    const std::size_t k = frees.size();
    std::vector<std::size_t> free_pos(n, 0);
    for (std::size_t i = 0; i < k; ++i) free_pos[frees[i]] = i;

    // Express the constraints as inequalities over the free variables only.
    std::vector<Ineq> ineqs;
    for (std::size_t i = 0; i < k; ++i) {
        const Interval& b = (*system.bounds)[frees[i]];
        if (b.lo > b.hi) return std::nullopt;
        Ineq up{std::vector<Rational>(k), b.hi};
        up.coeffs[i] = Rational(1);
        Ineq down{std::vector<Rational>(k), -b.lo};
        down.coeffs[i] = Rational(-1);
        ineqs.push_back(std::move(up));
        ineqs.push_back(std::move(down));
    }
    for (std::size_t col = 0; col < n; ++col) {
        int row = r.pivot_row_of_col[col];
        if (row < 0) continue;
        // x_col = rhs - sum over frees of a_f * x_f ; bound it
        const auto& coeffs = r.rows[static_cast<std::size_t>(row)];
        const Rational& rhs = r.rhs[static_cast<std::size_t>(row)];
        const Interval& b = (*system.bounds)[col];
        Ineq up{std::vector<Rational>(k), rhs - b.lo};  // sum a_f x_f <= rhs - lo
        Ineq down{std::vector<Rational>(k), b.hi - rhs}; // -sum a_f x_f <= hi - rhs
        bool has_free = false;
        for (std::size_t i = 0; i < k; ++i) {
            up.coeffs[i] = coeffs[frees[i]];
            down.coeffs[i] = -coeffs[frees[i]];
            if (!up.coeffs[i].is_zero()) has_free = true;
        }
        if (!has_free) {
            if (rhs < b.lo || rhs > b.hi) return std::nullopt;
            continue;
        }
        ineqs.push_back(std::move(up));
        ineqs.push_back(std::move(down));
    }

    // Fourier-Motzkin elimination, keeping each intermediate stage so the
    // assignment can be recovered by back-substitution.
    std::vector<std::vector<Ineq>> stages;
    stages.push_back(std::move(ineqs));
    for (std::size_t i = 0; i < k; ++i) {
        const auto& cur = stages.back();
        std::vector<Ineq> next;
        std::vector<const Ineq*> uppers, lowers;
        for (const auto& q : cur) {
            int s = q.coeffs[i].sign();
            if (s > 0) uppers.push_back(&q);
            else if (s < 0) lowers.push_back(&q);
            else next.push_back(q);
        }
        for (const Ineq* lo : lowers) {
            for (const Ineq* up : uppers) {
                const Rational& a = up->coeffs[i]; // > 0
                const Rational& b = lo->coeffs[i]; // < 0
                Ineq combined{std::vector<Rational>(k), a * lo->constant - b * up->constant};
                for (std::size_t j = 0; j < k; ++j)
                    combined.coeffs[j] = a * lo->coeffs[j] - b * up->coeffs[j];
                next.push_back(std::move(combined));
            }
        }
        stages.push_back(std::move(next));
    }
    for (const auto& q : stages.back()) {
        if (q.constant < Rational(0)) return std::nullopt;
    }

    // Back-substitute, latest-eliminated variable first, taking midpoints.
    std::vector<Rational> free_values(k);
    for (std::size_t idx = k; idx-- > 0;) {
        const auto& stage = stages[idx];
        bool have_lo = false, have_hi = false;
        Rational lo, hi;
        for (const auto& q : stage) {
            const Rational& a = q.coeffs[idx];
            if (a.is_zero()) continue;
            Rational rest = q.constant;
            for (std::size_t j = idx + 1; j < k; ++j)
                rest -= q.coeffs[j] * free_values[j];
            Rational bound = rest / a;
            if (a.sign() > 0) {
                if (!have_hi || bound < hi) { hi = bound; have_hi = true; }
            } else {
                if (!have_lo || bound > lo) { lo = bound; have_lo = true; }
            }
        }
        if (!have_lo || !have_hi || lo > hi)
            throw std::logic_error("fourier-motzkin back-substitution lost the box bounds");
        free_values[idx] = (lo + hi) / Rational(2);
    }

    Assignment result;
    for (std::size_t i = 0; i < k; ++i) result[system.variables[frees[i]]] = free_values[i];
    for (std::size_t col = 0; col < n; ++col) {
        int row = r.pivot_row_of_col[col];
        if (row < 0) continue;
        Rational v = r.rhs[static_cast<std::size_t>(row)];
        for (std::size_t i = 0; i < k; ++i)
            v -= r.rows[static_cast<std::size_t>(row)][frees[i]] * free_values[i];
        result[system.variables[col]] = v;
    }
    return result;
}

} // namespace psc::num
