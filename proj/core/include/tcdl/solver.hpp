#pragma once

#include <functional>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "tcdl/error.hpp"

namespace tcdl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

enum class Sense { Minimize, Maximize };

/// Dense linear program
///
///     min/max  c' z   s.t.  A z <= b,  E z = f,  z >= lower
///
/// An entry of `lower` equal to -infinity makes that variable free. An empty `lower`
/// means all variables are nonnegative.
struct LinearProgram {
    Sense sense = Sense::Minimize;
    Vector objective;
    Matrix ineq_matrix;
    Vector ineq_rhs;
    Matrix eq_matrix;
    Vector eq_rhs;
    Vector lower;

    Eigen::Index num_variables() const noexcept { return objective.size(); }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, Indeterminate };

const char* to_string(LpStatus status);

/// Result of solve_lp. Multipliers refer to the equivalent minimization (objective negated for
/// Maximize) and satisfy  c_min + A' ineq_duals + E' eq_duals - bound_duals = 0  with
/// ineq_duals >= 0 and bound_duals >= 0.
struct LpResult {
    LpStatus status = LpStatus::Indeterminate;
    Vector z;
    double value = 0.0;
    Vector ineq_duals;
    Vector eq_duals;
    Vector bound_duals;
    double primal_residual = 0.0;
    double slackness_residual = 0.0;
    double relative_gap = 0.0;
    int pivots = 0;
    std::string message;

    bool optimal() const noexcept { return status == LpStatus::Optimal; }
};

struct LpOptions {
    int max_pivots = 200000;
    double pivot_tolerance = 1e-9;
    double feasibility_tolerance = 1e-9;
};

/// Two-phase dense tableau simplex (Dantzig pricing, Harris ratio test, Bland fallback on
/// degenerate runs, periodic reinversion). The final basis is refactored from the
/// original data and the primal/dual certificate is checked; an answer that fails the check
/// is reported as Indeterminate, never Optimal.
LpResult solve_lp(const LinearProgram& lp, const LpOptions& options = {});

/// Smooth convex program
///
///     min f(z)   s.t.  E z = f_eq,  A z <= b
///
/// `value` must return +infinity outside the domain of f. If `start` is empty a strictly
/// feasible point is found with a phase-1 LP.
struct ConvexProgram {
    Eigen::Index dimension = 0;
    std::function<double(const Vector&)> value;
    std::function<Vector(const Vector&)> gradient;
    std::function<Matrix(const Vector&)> hessian;
    Matrix eq_matrix;
    Vector eq_rhs;
    Matrix ineq_matrix;
    Vector ineq_rhs;
    std::optional<Vector> start;
};

enum class ConvexStatus { Optimal, Indeterminate };

struct ConvexResult {
    ConvexStatus status = ConvexStatus::Indeterminate;
    Vector z;
    double value = 0.0;
    double kkt_residual = 0.0;  ///< max(relative stationarity, m/t, equality residual)
    Vector eq_multipliers;
    Vector ineq_multipliers;
    int newton_steps = 0;
    std::string message;

    bool optimal() const noexcept { return status == ConvexStatus::Optimal; }
};

/// Raised when a convex program has no strictly feasible point (or the supplied start is not one).
class NoStrictlyFeasiblePoint : public Error {
public:
    using Error::Error;
};

/// Largest margin s (capped at 1) such that A z + s <= b and E z = f has a solution, together
/// with that z. Returns nullopt when the LP itself cannot be solved to optimality.
struct StrictFeasibility {
    double margin = 0.0;
    Vector z;
};
std::optional<StrictFeasibility> max_margin_point(const Matrix& eq_matrix, const Vector& eq_rhs,
                                                  const Matrix& ineq_matrix, const Vector& ineq_rhs);

/// Logarithmic-barrier method with damped (backtracking) Newton steps on the equality-constrained
/// centering problems. Deterministic for a given start.
ConvexResult solve_convex(const ConvexProgram& program, double tol = 1e-8);

}  // namespace tcdl
