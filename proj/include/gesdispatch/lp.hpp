#pragma once

// Sparse linear programs and a primal-dual interior-point solver.

#include "gesdispatch/error.hpp"

#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

namespace ges {

enum class RowSense { LE, EQ, GE };

struct LpRow {
    std::string name;
    RowSense sense = RowSense::EQ;
    double rhs = 0.0;
    std::vector<std::pair<std::size_t, double>> coef;
};

/// min cost'x + offset  s.t.  rows, lower <= x <= upper.
struct LpProblem {
    std::vector<std::string> var_names;
    std::vector<double> cost;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<LpRow> rows;
    double objective_offset = 0.0;

    std::size_t add_var(std::string name, double lo, double hi, double c = 0.0);
    std::size_t add_row(std::string name, RowSense sense, double rhs);
    void add_coef(std::size_t row, std::size_t var, double value);

    std::size_t num_vars() const { return var_names.size(); }
    std::size_t num_rows() const { return rows.size(); }

    /// Throws InvalidSpec when a row references an undeclared variable or a
    /// coefficient/bound is not usable.
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };
const char* to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::Optimal;
    std::vector<double> x;
    std::vector<double> row_activity;
    std::vector<double> row_dual;
    double objective = 0.0;
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double gap = 0.0;
    /// Infeasibility certificate: rows/bounds that cannot be satisfied jointly.
    std::vector<std::string> certificate;
};

struct LpOptions {
    double tol = 1e-8;
    int max_iter = 300;
};

/// Mehrotra predictor-corrector interior-point method on the normal equations.
/// Infeasibility is confirmed by an elastic phase-1 program.
LpSolution solve_lp(const LpProblem& p, const LpOptions& opts = {});
inline LpSolution solve_lp(const LpProblem& p, double tol) { return solve_lp(p, LpOptions{tol, 300}); }

} // namespace ges
