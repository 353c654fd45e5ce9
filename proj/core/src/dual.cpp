#include "tcdl/dual.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tcdl/error.hpp"
#include "tcdl/parallel.hpp"
#include "tcdl/rng.hpp"

namespace tcdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZeroDensity = 1e-12;

}  // namespace

bool CpsElement::strict() const {
    return std::all_of(z0.begin(), z0.end(), [](double v) { return v > 0.0; });
}

std::vector<double> CpsElement::density(const ScenarioTree& tree) const {
    std::vector<double> out;
    out.reserve(tree.leaf_count());
    for (NodeIndex leaf : tree.leaves()) out.push_back(z0.at(leaf));
    return out;
}

CpsElement CpsPolytope::unpack(const Vector& z) const {
    CpsElement e;
    e.z0.resize(nodes);
    e.z1.resize(nodes);
    for (std::size_t n = 0; n < nodes; ++n) {
        e.z0[n] = z[z0_index(n)];
        e.z1[n] = z[z1_index(n)];
    }
    return e;
}

Vector CpsPolytope::pack(const CpsElement& e) const {
    Vector z(dimension());
    for (std::size_t n = 0; n < nodes; ++n) {
        z[z0_index(n)] = e.z0.at(n);
        z[z1_index(n)] = e.z1.at(n);
    }
    return z;
}

CpsPolytope cps_polytope(const MarketModel& model) {
    require_valid(model);
    const auto& tree = model.tree;
    CpsPolytope poly;
    poly.nodes = tree.size();
    const Eigen::Index dim = poly.dimension();

    std::size_t interior_nodes = 0;
    for (NodeIndex n = 0; n < tree.size(); ++n)
        if (!tree.is_leaf(n)) ++interior_nodes;
    const bool frictionless = model.lambda == 0.0;
    const auto n_eq = static_cast<Eigen::Index>(1 + 2 * interior_nodes + (frictionless ? tree.size() : 0));
    const auto n_ineq = static_cast<Eigen::Index>((frictionless ? 1 : 3) * tree.size());
    poly.eq_matrix = Matrix::Zero(n_eq, dim);
    poly.eq_rhs = Vector::Zero(n_eq);
    poly.ineq_matrix = Matrix::Zero(n_ineq, dim);
    poly.ineq_rhs = Vector::Zero(n_ineq);

    Eigen::Index row = 0;
    poly.eq_matrix(row, poly.z0_index(tree.root())) = 1.0;
    poly.eq_rhs[row++] = 1.0;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (tree.is_leaf(n)) continue;
        // Z(n) = sum_c P[c | n] Z(c), for both components.
        poly.eq_matrix(row, poly.z0_index(n)) = 1.0;
        poly.eq_matrix(row + 1, poly.z1_index(n)) = 1.0;
        for (NodeIndex c : tree.children(n)) {
            poly.eq_matrix(row, poly.z0_index(c)) = -tree.cond_prob(c);
            poly.eq_matrix(row + 1, poly.z1_index(c)) = -tree.cond_prob(c);
        }
        row += 2;
    }
    Eigen::Index irow = 0;
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const double s = model.ask[n];
        if (frictionless) {
            poly.eq_matrix(row, poly.z1_index(n)) = 1.0;
            poly.eq_matrix(row++, poly.z0_index(n)) = -s;
        } else {
            // Z1 <= S Z0 and (1 - lambda) S Z0 <= Z1.
            poly.ineq_matrix(irow, poly.z1_index(n)) = 1.0;
            poly.ineq_matrix(irow++, poly.z0_index(n)) = -s;
            poly.ineq_matrix(irow, poly.z1_index(n)) = -1.0;
            poly.ineq_matrix(irow++, poly.z0_index(n)) = model.bid(n);
        }
        poly.ineq_matrix(irow++, poly.z0_index(n)) = -1.0;
    }
    return poly;
}

std::vector<Violation> cps_check(const MarketModel& model, const CpsElement& e, bool strict, double tol) {
    const auto& tree = model.tree;
    std::vector<Violation> out;
    if (e.z0.size() != tree.size() || e.z1.size() != tree.size()) {
        out.push_back({0, "element size does not match the tree", kInf});
        return out;
    }
    if (std::abs(e.z0[tree.root()] - 1.0) > tol) out.push_back({tree.root(), "Z0 at the root is not 1", std::abs(e.z0[0] - 1.0)});
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        if (e.z0[n] < -tol) out.push_back({n, "negative Z0", -e.z0[n]});
        if (e.z1[n] < -tol) out.push_back({n, "negative Z1", -e.z1[n]});
        if (strict && !(e.z0[n] > 0.0)) out.push_back({n, "Z0 not strictly positive", -e.z0[n]});
        const double above = e.z1[n] - model.ask[n] * e.z0[n];
        const double below = model.bid(n) * e.z0[n] - e.z1[n];
        if (above > tol) out.push_back({n, "shadow price above the ask", above});
        if (below > tol) out.push_back({n, "shadow price below the bid", below});
        if (tree.is_leaf(n)) continue;
        double m0 = 0.0, m1 = 0.0;
        for (NodeIndex c : tree.children(n)) {
            m0 += tree.cond_prob(c) * e.z0[c];
            m1 += tree.cond_prob(c) * e.z1[c];
        }
        if (std::abs(m0 - e.z0[n]) > tol) out.push_back({n, "Z0 martingale condition violated", std::abs(m0 - e.z0[n])});
        if (std::abs(m1 - e.z1[n]) > tol) out.push_back({n, "Z1 martingale condition violated", std::abs(m1 - e.z1[n])});
    }
    return out;
}

PolytopeStatus polytope_status(const MarketModel& model) {
    const CpsPolytope poly = cps_polytope(model);
    PolytopeStatus status;
    LinearProgram lp;
    lp.objective = Vector::Zero(poly.dimension());
    lp.eq_matrix = poly.eq_matrix;
    lp.eq_rhs = poly.eq_rhs;
    lp.ineq_matrix = poly.ineq_matrix;
    lp.ineq_rhs = poly.ineq_rhs;
    const LpResult res = solve_lp(lp);
    if (res.status == LpStatus::Infeasible) return status;
    if (!res.optimal()) throw SolverIndeterminate("polytope feasibility LP: " + res.message);
    status.nonempty = true;
    const auto point = max_margin_point(poly.eq_matrix, poly.eq_rhs, poly.ineq_matrix, poly.ineq_rhs);
    if (!point) throw SolverIndeterminate("polytope interior LP failed");
    status.margin = point->margin;
    status.has_interior = point->margin > 1e-12;
    return status;
}

LinearFunctionalMax maximize_pairing(const MarketModel& model, const std::vector<double>& leaf_values) {
    const CpsPolytope poly = cps_polytope(model);
    const auto& tree = model.tree;
    if (leaf_values.size() != tree.leaf_count()) throw InputError("leaf vector has wrong size");
    LinearProgram lp;
    lp.sense = Sense::Maximize;
    lp.objective = Vector::Zero(poly.dimension());
    for (std::size_t k = 0; k < tree.leaf_count(); ++k) {
        const NodeIndex leaf = tree.leaves()[k];
        lp.objective[poly.z0_index(leaf)] = tree.prob(leaf) * leaf_values[k];
    }
    lp.eq_matrix = poly.eq_matrix;
    lp.eq_rhs = poly.eq_rhs;
    lp.ineq_matrix = poly.ineq_matrix;
    lp.ineq_rhs = poly.ineq_rhs;
    const LpResult res = solve_lp(lp);
    if (res.status == LpStatus::Infeasible) throw NoConsistentPriceSystem("no consistent price system: polytope is empty");
    if (!res.optimal()) throw SolverIndeterminate(std::string("pairing LP: ") + to_string(res.status) + " " + res.message);
    return {res.value, poly.unpack(res.z)};
}

double superreplication_price(const MarketModel& model, const PayoffVector& g) {
    for (double v : g.values)
        if (!std::isfinite(v)) throw InputError("payoff must be finite");
    return maximize_pairing(model, g.values).value;
}

double compute_x0(const MarketModel& model) {
    std::vector<double> neg(model.endowment.size());
    std::transform(model.endowment.begin(), model.endowment.end(), neg.begin(), [](double e) { return -e; });
    return maximize_pairing(model, neg).value;
}

DualProblem::DualProblem(const MarketModel& model, const Utility& utility)
    : model_(model), utility_(utility), polytope_(cps_polytope(model)) {
    const auto point = max_margin_point(polytope_.eq_matrix, polytope_.eq_rhs, polytope_.ineq_matrix, polytope_.ineq_rhs);
    if (!point) {
        // Distinguish an empty polytope from LP trouble.
        if (!polytope_status(model).nonempty) throw NoConsistentPriceSystem("no consistent price system: polytope is empty");
        throw SolverIndeterminate("dual: interior-point LP failed");
    }
    if (!(point->margin > 1e-12)) {
        if (point->margin < -1e-9) throw NoConsistentPriceSystem("no consistent price system: polytope is empty");
        throw SolverIndeterminate("dual: polytope has no strictly consistent element; barrier cannot start");
    }
    interior_ = point->z;
}

DualSolution DualProblem::solve(double y, const DualOptions& options) const {
    if (!(y > 0.0) || !std::isfinite(y)) throw DomainError("dual problem requires y > 0");
    const auto& tree = model_.tree;
    const auto probs = tree.leaf_probabilities();
    const auto leaves = tree.leaves();
    const std::size_t l = leaves.size();
    std::vector<Eigen::Index> leaf_var(l);
    for (std::size_t k = 0; k < l; ++k) leaf_var[k] = polytope_.z0_index(leaves[k]);
    const Utility& u = utility_;
    const auto& e = model_.endowment;

    ConvexProgram cp;
    cp.dimension = polytope_.dimension();
    cp.eq_matrix = polytope_.eq_matrix;
    cp.eq_rhs = polytope_.eq_rhs;
    cp.ineq_matrix = polytope_.ineq_matrix;
    cp.ineq_rhs = polytope_.ineq_rhs;
    cp.start = options.start ? *options.start : interior_;
    cp.value = [&](const Vector& z) {
        double f = 0.0;
        for (std::size_t k = 0; k < l; ++k) {
            const double d = z[leaf_var[k]];
            if (!(d > 0.0)) return kInf;
            f += probs[k] * (u.v(y * d) + y * d * e[k]);
        }
        return f;
    };
    cp.gradient = [&](const Vector& z) {
        Vector g = Vector::Zero(cp.dimension);
        for (std::size_t k = 0; k < l; ++k) {
            const double d = z[leaf_var[k]];
            g[leaf_var[k]] = probs[k] * y * (u.v_prime(y * d) + e[k]);
        }
        return g;
    };
    cp.hessian = [&](const Vector& z) {
        Matrix h = Matrix::Zero(cp.dimension, cp.dimension);
        for (std::size_t k = 0; k < l; ++k) {
            const double d = z[leaf_var[k]];
            h(leaf_var[k], leaf_var[k]) = probs[k] * y * y * u.v_second(y * d);
        }
        return h;
    };

    const ConvexResult res = solve_convex(cp, options.tol);
    if (!res.optimal()) throw SolverIndeterminate("dual barrier at y = " + std::to_string(y) + ": " + res.message);

    DualSolution sol;
    sol.y = y;
    sol.optimizer = polytope_.unpack(res.z);
    sol.density = sol.optimizer.density(tree);
    sol.kkt_residual = res.kkt_residual;
    double mass = 0.0;
    for (std::size_t k = 0; k < l; ++k) {
        const double d = sol.density[k];
        sol.expected_conjugate += probs[k] * u.v(y * d);
        sol.endowment_pairing += probs[k] * d * e[k];
        mass += probs[k] * d;
        if (d <= kZeroDensity) sol.excluded_mass += probs[k];
    }
    sol.value = sol.expected_conjugate + y * sol.endowment_pairing;
    sol.singular_mass = 1.0 - mass;
    sol.derivative = dual_derivative(model_, utility_, sol);
    return sol;
}

std::vector<Vector> DualProblem::random_interior_points(std::size_t count, std::uint64_t seed) const {
    const Matrix& eq = polytope_.eq_matrix;
    const Matrix kernel = Eigen::FullPivLU<Matrix>(eq).kernel();
    Rng rng(seed);
    std::vector<Vector> points;
    points.reserve(count);
    const Vector slack0 = polytope_.ineq_rhs - polytope_.ineq_matrix * interior_;
    for (std::size_t i = 0; i < count; ++i) {
        Vector coeff(kernel.cols());
        for (Eigen::Index j = 0; j < coeff.size(); ++j) coeff[j] = rng.normal();
        Vector dir = kernel * coeff;
        const Vector ad = polytope_.ineq_matrix * dir;
        double step = kInf;
        for (Eigen::Index r = 0; r < ad.size(); ++r)
            if (ad[r] > 0.0) step = std::min(step, slack0[r] / ad[r]);
        if (!std::isfinite(step)) step = 1.0;
        points.push_back(interior_ + rng.uniform(0.1, 0.9) * step * dir);
    }
    return points;
}

DualSolution solve_dual(const MarketModel& model, const Utility& utility, double y, const DualOptions& options) {
    if (!(y > 0.0)) throw DomainError("dual problem requires y > 0");
    return DualProblem(model, utility).solve(y, options);
}

double dual_derivative(const MarketModel& model, const Utility& utility, const DualSolution& solution) {
    const auto& tree = model.tree;
    const auto probs = tree.leaf_probabilities();
    double consumption = 0.0;
    double pairing = 0.0;
    for (std::size_t k = 0; k < probs.size(); ++k) {
        const double d = solution.density.at(k);
        pairing += probs[k] * d * model.endowment[k];
        if (d > kZeroDensity) consumption += probs[k] * d * utility.i(solution.y * d);
    }
    return -consumption + pairing;
}

std::vector<DualSolution> dual_grid(const MarketModel& model, const Utility& utility, const std::vector<double>& y_grid,
                                    unsigned jobs) {
    for (std::size_t i = 0; i < y_grid.size(); ++i) {
        if (!(y_grid[i] > 0.0)) throw DomainError("y grid must be positive");
        if (i > 0 && !(y_grid[i] > y_grid[i - 1])) throw InputError("y grid must be strictly increasing");
    }
    const DualProblem problem(model, utility);
    std::vector<DualSolution> out(y_grid.size());
    parallel_for(y_grid.size(), jobs, [&](std::size_t i) { out[i] = problem.solve(y_grid[i]); });
    return out;
}

std::vector<double> log_grid(double lo, double hi, std::size_t n) {
    if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InputError("log grid needs 0 < lo < hi and n >= 2");
    std::vector<double> out(n);
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    out.front() = lo;
    out.back() = hi;
    return out;
}

}  // namespace tcdl
