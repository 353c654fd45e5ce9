#include "tcdl/primal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tcdl/dual.hpp"
#include "tcdl/error.hpp"
#include "tcdl/solver.hpp"

namespace tcdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-leaf linear maps of the trade vector z = [buy (N) | sell (N)], or z = [net (N)] when lambda = 0.
///   cost(leaf)     = sum over path of  S buy - (1 - lambda) S sell      (cash spent)
///   position(leaf) = sum over path of  buy - sell                       (terminal shares)
struct TradeMaps {
    bool split = true;
    Matrix cost;
    Matrix position;
    Eigen::Index n_vars = 0;
};

TradeMaps trade_maps(const MarketModel& model, bool split) {
    const auto& tree = model.tree;
    const auto n = static_cast<Eigen::Index>(tree.size());
    const auto leaves = tree.leaves();
    const auto l = static_cast<Eigen::Index>(leaves.size());
    TradeMaps maps;
    maps.split = split;
    maps.n_vars = maps.split ? 2 * n : n;
    maps.cost = Matrix::Zero(l, maps.n_vars);
    maps.position = Matrix::Zero(l, maps.n_vars);
    for (Eigen::Index k = 0; k < l; ++k) {
        for (NodeIndex node : tree.path(leaves[k])) {
            const auto j = static_cast<Eigen::Index>(node);
            maps.cost(k, j) = model.ask[node];
            maps.position(k, j) = 1.0;
            if (maps.split) {
                maps.cost(k, n + j) = -model.bid(node);
                maps.position(k, n + j) = -1.0;
            }
        }
    }
    return maps;
}

TradingStrategy strategy_from_vector(const MarketModel& model, const TradeMaps& maps, double x, const Vector& z) {
    const std::size_t n = model.tree.size();
    std::vector<double> buy(n), sell(n);
    for (std::size_t j = 0; j < n; ++j) {
        if (maps.split) {
            // Netting a simultaneous buy and sell only removes spread cost.
            const double b = std::max(0.0, z[static_cast<Eigen::Index>(j)]);
            const double s = std::max(0.0, z[static_cast<Eigen::Index>(n + j)]);
            buy[j] = b - std::min(b, s);
            sell[j] = s - std::min(b, s);
        } else {
            const double d = z[static_cast<Eigen::Index>(j)];
            buy[j] = std::max(0.0, d);
            sell[j] = std::max(0.0, -d);
        }
    }
    return TradingStrategy::from_trades(model, x, std::move(buy), std::move(sell));
}

/// Minimum-turnover trades whose terminal cash dominates `target - tol` at every leaf.
LpResult superhedge_lp(const TradeMaps& maps, const std::vector<double>& target, double x, double tol) {
    const auto l = maps.cost.rows();
    LinearProgram lp;
    lp.sense = Sense::Minimize;
    lp.objective = Vector::Ones(maps.n_vars);
    lp.lower = Vector::Zero(maps.n_vars);
    lp.eq_matrix = maps.position;
    lp.eq_rhs = Vector::Zero(l);
    lp.ineq_matrix = maps.cost;
    lp.ineq_rhs.resize(l);
    for (Eigen::Index k = 0; k < l; ++k) lp.ineq_rhs[k] = x - target[static_cast<std::size_t>(k)] + tol;
    return solve_lp(lp);
}

}  // namespace

double PayoffVector::lower_bound() const {
    if (values.empty()) return 0.0;
    return *std::min_element(values.begin(), values.end());
}

TradingStrategy TradingStrategy::no_trade(const ScenarioTree& tree, double x) {
    TradingStrategy s;
    s.initial_capital = x;
    s.phi0.assign(tree.size(), x);
    s.phi1.assign(tree.size(), 0.0);
    s.buy.assign(tree.size(), 0.0);
    s.sell.assign(tree.size(), 0.0);
    return s;
}

TradingStrategy TradingStrategy::from_trades(const MarketModel& model, double x, std::vector<double> buy,
                                             std::vector<double> sell) {
    const auto& tree = model.tree;
    TradingStrategy s;
    s.initial_capital = x;
    s.buy = std::move(buy);
    s.sell = std::move(sell);
    s.phi0.resize(tree.size());
    s.phi1.resize(tree.size());
    for (NodeIndex n = 0; n < tree.size(); ++n) {
        const auto parent = tree.parent(n);
        const double cash_before = parent ? s.phi0[*parent] : x;
        const double shares_before = parent ? s.phi1[*parent] : 0.0;
        s.phi1[n] = shares_before + s.buy[n] - s.sell[n];
        s.phi0[n] = cash_before - model.ask[n] * s.buy[n] + model.bid(n) * s.sell[n];
    }
    return s;
}

PayoffVector TradingStrategy::terminal_gain(const ScenarioTree& tree) const {
    PayoffVector g;
    for (NodeIndex leaf : tree.leaves()) g.values.push_back(phi0.at(leaf) - initial_capital);
    return g;
}

double liquidation_value(double phi0, double phi1, double ask, double lambda) {
    return phi0 + std::max(phi1, 0.0) * (1.0 - lambda) * ask - std::max(-phi1, 0.0) * ask;
}

double liquidation_value(const MarketModel& model, const TradingStrategy& strategy, NodeIndex node) {
    if (node >= model.tree.size()) throw InputError("unknown node index " + std::to_string(node));
    return liquidation_value(strategy.phi0.at(node), strategy.phi1.at(node), model.ask.at(node), model.lambda);
}

std::vector<Violation> check_self_financing(const MarketModel& model, const TradingStrategy& s, double tol) {
    const auto& tree = model.tree;
    std::vector<Violation> out;
    const std::size_t n = tree.size();
    if (s.phi0.size() != n || s.phi1.size() != n || s.buy.size() != n || s.sell.size() != n) {
        out.push_back({0, "strategy vectors do not match the tree size", kInf});
        return out;
    }
    for (NodeIndex node = 0; node < n; ++node) {
        const auto parent = tree.parent(node);
        const double cash_before = parent ? s.phi0[*parent] : s.initial_capital;
        const double shares_before = parent ? s.phi1[*parent] : 0.0;
        if (s.buy[node] < -tol) out.push_back({node, "negative purchase", -s.buy[node]});
        if (s.sell[node] < -tol) out.push_back({node, "negative sale", -s.sell[node]});
        const double split_gap = std::abs((s.phi1[node] - shares_before) - (s.buy[node] - s.sell[node]));
        if (split_gap > tol) out.push_back({node, "share change differs from buy - sell", split_gap});
        const double excess = (s.phi0[node] - cash_before) -
                              (-model.ask[node] * s.buy[node] + model.bid(node) * s.sell[node]);
        if (excess > tol) out.push_back({node, "self-financing inequality violated", excess});
    }
    return out;
}

std::vector<Violation> check_admissible(const MarketModel& model, const TradingStrategy& s, double tol) {
    auto out = check_self_financing(model, s, tol);
    if (!out.empty() && out.front().what == "strategy vectors do not match the tree size") return out;
    const double bound = s.initial_capital + model.rho() + 1.0;
    for (NodeIndex node = 0; node < model.tree.size(); ++node) {
        const double liq = liquidation_value(model, s, node);
        if (liq < -bound - tol) out.push_back({node, "liquidation value below -(x + rho + 1)", -bound - liq});
    }
    for (NodeIndex leaf : model.tree.leaves())
        if (std::abs(s.phi1[leaf]) > tol) out.push_back({leaf, "stock position not liquidated at T", std::abs(s.phi1[leaf])});
    return out;
}

Attainability attain(const MarketModel& model, const PayoffVector& g, double x, double tol) {
    require_valid(model);
    if (g.size() != model.tree.leaf_count()) throw InputError("payoff has wrong number of leaves");
    for (double v : g.values)
        if (!std::isfinite(v)) throw InputError("payoff must be finite (bounded below on a finite tree)");
    const TradeMaps maps = trade_maps(model, true);
    const LpResult res = superhedge_lp(maps, g.values, x, tol);
    Attainability out;
    switch (res.status) {
        case LpStatus::Optimal:
            out.attainable = true;
            out.strategy = strategy_from_vector(model, maps, x, res.z);
            return out;
        case LpStatus::Infeasible:
            return out;
        case LpStatus::Unbounded:
        case LpStatus::Indeterminate:
            break;
    }
    throw SolverIndeterminate(std::string("attainability LP: ") + to_string(res.status) + " " + res.message);
}

bool is_attainable(const MarketModel& model, const PayoffVector& g, double x, double tol) {
    return attain(model, g, x, tol).attainable;
}

bool positive_wealth_feasible(const MarketModel& model, double x, double floor) {
    PayoffVector target;
    for (double e : model.endowment) target.values.push_back(floor - e);
    return is_attainable(model, target, x, 0.0);
}

const char* to_string(PrimalStatus status) {
    switch (status) {
        case PrimalStatus::Optimal: return "optimal";
        case PrimalStatus::BelowX0: return "infeasible-below-x0";
        case PrimalStatus::Indeterminate: return "indeterminate";
    }
    return "unknown";
}

PrimalSolution solve_primal(const MarketModel& model, const Utility& utility, double x, const PrimalOptions& options) {
    require_valid(model);
    PrimalSolution sol;
    sol.x = x;
    const double x0 = options.x0 ? *options.x0 : compute_x0(model);
    if (!(x > x0)) {
        sol.status = PrimalStatus::BelowX0;
        sol.message = BelowX0(x, x0).what();
        return sol;
    }

    const auto& tree = model.tree;
    const auto probs = tree.leaf_probabilities();
    // lambda = 0 makes round trips free, so the split would leave an unbounded barrier direction.
    const TradeMaps maps = trade_maps(model, model.lambda > 0.0);
    const auto l = maps.cost.rows();
    Vector base(l);  // x + e_T
    for (Eigen::Index k = 0; k < l; ++k) base[k] = x + model.endowment[static_cast<std::size_t>(k)];

    ConvexProgram cp;
    cp.dimension = maps.n_vars;
    cp.eq_matrix = maps.position;
    cp.eq_rhs = Vector::Zero(l);
    // Wealth positivity (x + e - cost > 0) and, for split trades, buy, sell > 0.
    const Eigen::Index m = l + (maps.split ? maps.n_vars : 0);
    cp.ineq_matrix = Matrix::Zero(m, maps.n_vars);
    cp.ineq_rhs = Vector::Zero(m);
    cp.ineq_matrix.topRows(l) = maps.cost;
    cp.ineq_rhs.head(l) = base;
    if (maps.split) cp.ineq_matrix.bottomRows(maps.n_vars) = -Matrix::Identity(maps.n_vars, maps.n_vars);

    const Matrix& cost = maps.cost;
    auto wealth_of = [&](const Vector& z) -> Vector { return base - cost * z; };
    cp.value = [&](const Vector& z) {
        const Vector w = wealth_of(z);
        double f = 0.0;
        for (Eigen::Index k = 0; k < l; ++k) {
            if (!(w[k] > 0.0)) return kInf;
            f -= probs[static_cast<std::size_t>(k)] * utility.u(w[k]);
        }
        return f;
    };
    cp.gradient = [&](const Vector& z) {
        const Vector w = wealth_of(z);
        Vector dw(l);
        for (Eigen::Index k = 0; k < l; ++k) dw[k] = probs[static_cast<std::size_t>(k)] * utility.u_prime(w[k]);
        return Vector(cost.transpose() * dw);
    };
    cp.hessian = [&](const Vector& z) {
        const Vector w = wealth_of(z);
        Vector curv(l);
        for (Eigen::Index k = 0; k < l; ++k)
            curv[k] = -probs[static_cast<std::size_t>(k)] * utility.u_second(w[k]);
        const Matrix scaled = curv.cwiseSqrt().asDiagonal() * cost;
        return Matrix(scaled.transpose() * scaled);
    };

    ConvexResult res;
    try {
        res = solve_convex(cp, options.tol);
    } catch (const NoStrictlyFeasiblePoint& e) {
        sol.status = PrimalStatus::BelowX0;
        sol.message = e.what();
        return sol;
    }
    sol.kkt_residual = res.kkt_residual;
    sol.message = res.message;
    sol.strategy = strategy_from_vector(model, maps, x, res.z);
    if (options.minimal_turnover) {
        const PayoffVector g = sol.strategy.terminal_gain(tree);
        std::vector<double> target(g.values.size());
        for (std::size_t k = 0; k < target.size(); ++k) target[k] = x + g.values[k];
        const TradeMaps split = trade_maps(model, true);
        const LpResult lp = superhedge_lp(split, target, x, 1e-12);
        if (lp.optimal()) sol.strategy = strategy_from_vector(model, split, x, lp.z);
    }
    sol.ghat = sol.strategy.terminal_gain(tree);
    sol.wealth.resize(sol.ghat.size());
    sol.value = 0.0;
    for (std::size_t k = 0; k < sol.wealth.size(); ++k) {
        sol.wealth[k] = x + sol.ghat.values[k] + model.endowment[k];
        sol.value += probs[k] * utility.u(sol.wealth[k]);
    }
    sol.status = res.optimal() ? PrimalStatus::Optimal : PrimalStatus::Indeterminate;
    if (options.compute_marginal && sol.optimal()) {
        PrimalOptions inner = options;
        inner.compute_marginal = false;
        inner.minimal_turnover = false;
        inner.x0 = x0;
        sol.marginal = primal_marginal(model, utility, x, std::nullopt, inner);
    }
    return sol;
}

double primal_marginal(const MarketModel& model, const Utility& utility, double x, std::optional<double> h,
                       const PrimalOptions& options) {
    const double step = h ? *h : 1e-4 * std::max(1.0, std::abs(x));
    if (!(step > 0.0)) throw DomainError("finite-difference step must be positive");
    PrimalOptions inner = options;
    inner.compute_marginal = false;
    if (!inner.x0) inner.x0 = compute_x0(model);
    if (!(x - step > *inner.x0)) throw BelowX0(x - step, *inner.x0);
    const auto up = solve_primal(model, utility, x + step, inner);
    const auto down = solve_primal(model, utility, x - step, inner);
    if (!up.optimal() || !down.optimal())
        throw SolverIndeterminate("primal marginal: " + up.message + " " + down.message);
    return (up.value - down.value) / (2.0 * step);
}

}  // namespace tcdl
