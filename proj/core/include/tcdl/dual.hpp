#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tcdl/market.hpp"
#include "tcdl/primal.hpp"
#include "tcdl/solver.hpp"
#include "tcdl/utility.hpp"

namespace tcdl {

/// A point (Z0, Z1) of the consistent-price-system polytope: nonnegative P-martingales with
/// Z0 = 1 at the root and (1 - lambda) S Z0 <= Z1 <= S Z0 at every node.
struct CpsElement {
    std::vector<double> z0;
    std::vector<double> z1;

    bool strict() const;
    /// Z0 at the leaves, i.e. the density dQ/dP.
    std::vector<double> density(const ScenarioTree& tree) const;
};

/// Linear description of the polytope over 2N variables (z0 at n, z1 at N + n).
///
/// `eq_*` holds the root normalization, the martingale conditions and, when lambda = 0, the
/// collapsed spread Z1 = S Z0. `ineq_*` holds the spread and Z0 >= 0, which is exactly the
/// set of inequalities a barrier needs; LP users add z >= 0 as bounds.
struct CpsPolytope {
    std::size_t nodes = 0;
    Matrix eq_matrix;
    Vector eq_rhs;
    Matrix ineq_matrix;
    Vector ineq_rhs;

    Eigen::Index z0_index(NodeIndex n) const { return static_cast<Eigen::Index>(n); }
    Eigen::Index z1_index(NodeIndex n) const { return static_cast<Eigen::Index>(nodes + n); }
    Eigen::Index dimension() const { return static_cast<Eigen::Index>(2 * nodes); }

    CpsElement unpack(const Vector& z) const;
    Vector pack(const CpsElement& element) const;
};

CpsPolytope cps_polytope(const MarketModel& model);

/// Martingale, spread and normalization checks within `tol`; `strict` also demands Z0 > 0.
std::vector<Violation> cps_check(const MarketModel& model, const CpsElement& element, bool strict,
                                 double tol = 1e-10);

struct PolytopeStatus {
    bool nonempty = false;
    bool has_interior = false;  ///< a CPS strictly inside the spread with Z0 > 0 exists
    double margin = 0.0;
};

/// LP feasibility of the closed polytope and of its strict interior.
PolytopeStatus polytope_status(const MarketModel& model);

struct LinearFunctionalMax {
    double value = 0.0;
    CpsElement maximizer;
};

/// sup over the polytope of E[Z0_T h] for a leaf vector h. Throws NoConsistentPriceSystem if the
/// polytope is empty and SolverIndeterminate if the LP cannot be certified.
LinearFunctionalMax maximize_pairing(const MarketModel& model, const std::vector<double>& leaf_values);

/// pi(g) = sup E[Z0_T g]; g in C(x) iff pi(g) <= x.
double superreplication_price(const MarketModel& model, const PayoffVector& g);

/// x0 = sup E[Z0_T (-e_T)].
double compute_x0(const MarketModel& model);

struct DualSolution {
    double y = 0.0;
    CpsElement optimizer;
    std::vector<double> density;     ///< Z0_T per leaf
    double value = 0.0;              ///< v(y)
    double derivative = 0.0;         ///< v'(y), see dual_derivative
    double expected_conjugate = 0.0; ///< E[V(y Z0_T)]
    double endowment_pairing = 0.0;  ///< <Q, e_T> = E[Z0_T e_T]
    double singular_mass = 0.0;      ///< 1 - E[Z0_T]; zero on a finite space up to rounding
    double excluded_mass = 0.0;      ///< P-mass of leaves with Z0_T <= 1e-12, left out of v'
    double kkt_residual = 0.0;
};

struct DualOptions {
    double tol = 1e-8;
    std::optional<Vector> start;  ///< strictly interior packed start; phase-1 LP when empty
};

/// Reusable dual problem for one (model, utility): the polytope and an interior point are built once.
class DualProblem {
public:
    /// Throws NoConsistentPriceSystem if the polytope is empty, SolverIndeterminate if it has no
    /// strict interior (the barrier cannot start).
    DualProblem(const MarketModel& model, const Utility& utility);

    /// v(y) = min over the polytope of E[V(y Z0_T)] + y E[Z0_T e_T].
    DualSolution solve(double y, const DualOptions& options = {}) const;

    const CpsPolytope& polytope() const noexcept { return polytope_; }
    const Vector& interior_point() const noexcept { return interior_; }
    const MarketModel& model() const noexcept { return model_; }
    const Utility& utility() const noexcept { return utility_; }

    /// `count` strictly interior points drawn deterministically from `seed`.
    std::vector<Vector> random_interior_points(std::size_t count, std::uint64_t seed) const;

private:
    MarketModel model_;
    Utility utility_;
    CpsPolytope polytope_;
    Vector interior_;
};

DualSolution solve_dual(const MarketModel& model, const Utility& utility, double y, const DualOptions& options = {});

/// v'(y) = -E[Z0_T I(y Z0_T) 1{Z0_T > 1e-12}] + E[Z0_T e_T].
double dual_derivative(const MarketModel& model, const Utility& utility, const DualSolution& solution);

/// Solves every grid point; `jobs` workers (0 = hardware concurrency).
std::vector<DualSolution> dual_grid(const MarketModel& model, const Utility& utility, const std::vector<double>& y_grid,
                                    unsigned jobs = 1);

/// n log-spaced points from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, std::size_t n);

}  // namespace tcdl
