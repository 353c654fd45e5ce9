#pragma once

// Test-side oracles and market builders. The oracles share no code with the library solvers.

#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tcdl/dual.hpp"
#include "tcdl/market.hpp"

namespace tcdl::test {

inline MarketModel make_model(TreeDescription desc, std::vector<double> ask_in_desc_order, double lambda,
                              std::map<std::string, double> endowment = {}) {
    MarketModel m;
    m.tree = ScenarioTree::build(desc);
    m.ask.assign(m.tree.size(), 0.0);
    for (std::size_t k = 0; k < desc.nodes.size(); ++k) m.ask[m.tree.index_of(desc.nodes[k].id)] = ask_in_desc_order[k];
    m.lambda = lambda;
    m.endowment.assign(m.tree.leaf_count(), 0.0);
    for (const auto& [id, e] : endowment) m.endowment[m.tree.leaf_position(m.tree.index_of(id))] = e;
    return m;
}

inline MarketModel single_node(double s = 1.0, double lambda = 0.1, double e = 0.0) {
    TreeDescription d;
    d.nodes = {{"r", std::nullopt, 0}};
    d.leaf_probabilities = {{"r", 1.0}};
    return make_model(d, {s}, lambda, {{"r", e}});
}

/// S = (4; 8, 2), P[up] = 1/2.
inline MarketModel binomial(double lambda, double e_up = 0.0, double e_down = 0.0, double s_up = 8.0, double s_down = 2.0) {
    TreeDescription d;
    d.nodes = {{"root", std::nullopt, 0}, {"up", "root", 1}, {"down", "root", 1}};
    d.leaf_probabilities = {{"up", 0.5}, {"down", 0.5}};
    return make_model(d, {4.0, s_up, s_down}, lambda, {{"up", e_up}, {"down", e_down}});
}

/// Full tree of the given shape with the same price everywhere.
inline MarketModel constant_price_tree(int depth, int branching, double s, double lambda, double e = 0.0) {
    TreeDescription d;
    std::vector<std::string> level{"n"};
    d.nodes.push_back({"n", std::nullopt, 0});
    for (int t = 1; t <= depth; ++t) {
        std::vector<std::string> next;
        for (const auto& parent : level) {
            for (int b = 0; b < branching; ++b) {
                const std::string id = parent + std::to_string(b);
                d.nodes.push_back({id, parent, t});
                d.conditional_probabilities[id] = 1.0 / branching;
                next.push_back(id);
            }
        }
        level = next;
    }
    if (depth == 0) d.leaf_probabilities["n"] = 1.0;
    std::map<std::string, double> endow;
    for (const auto& id : level) endow[id] = e;
    return make_model(d, std::vector<double>(d.nodes.size(), s), lambda, endow);
}

/// Every distinct vertex of {z : A z <= b} found by solving each square subsystem of active rows.
inline std::vector<Eigen::VectorXd> enumerate_vertices(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                                       double feas_tol = 1e-9) {
    const int m = static_cast<int>(a.rows());
    const int n = static_cast<int>(a.cols());
    std::vector<Eigen::VectorXd> out;
    std::vector<int> pick(static_cast<std::size_t>(n));
    std::function<void(int, int)> rec = [&](int start, int depth) {
        if (depth == n) {
            Eigen::MatrixXd sub(n, n);
            Eigen::VectorXd rhs(n);
            for (int k = 0; k < n; ++k) {
                sub.row(k) = a.row(pick[static_cast<std::size_t>(k)]);
                rhs[k] = b[pick[static_cast<std::size_t>(k)]];
            }
            Eigen::FullPivLU<Eigen::MatrixXd> lu(sub);
            if (lu.rank() < n) return;
            const Eigen::VectorXd z = lu.solve(rhs);
            if (!((a * z - b).array() <= feas_tol * (1.0 + b.cwiseAbs().array())).all()) return;
            for (const auto& v : out)
                if ((v - z).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + z.cwiseAbs().maxCoeff())) return;
            out.push_back(z);
            return;
        }
        for (int i = start; i <= m - (n - depth); ++i) {
            pick[static_cast<std::size_t>(depth)] = i;
            rec(i + 1, depth + 1);
        }
    };
    rec(0, 0);
    return out;
}

/// max c'z over the vertices of a bounded polytope; nullopt when there are none.
inline std::optional<double> vertex_max(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    std::optional<double> best;
    for (const auto& v : enumerate_vertices(a, b)) {
        const double val = c.dot(v);
        if (!best || val > *best) best = val;
    }
    return best;
}

/// The CPS polytope as pure inequalities (equalities doubled, z0, z1 >= 0 added) for enumeration.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> cps_as_inequalities(const MarketModel& model) {
    const std::size_t n = model.tree.size();
    const Eigen::Index dim = static_cast<Eigen::Index>(2 * n);
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> rhs;
    auto eq = [&](Eigen::VectorXd r, double v) {
        rows.push_back(r);
        rhs.push_back(v);
        rows.push_back(-r);
        rhs.push_back(-v);
    };
    Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
    r[0] = 1.0;
    eq(r, 1.0);
    for (NodeIndex node = 0; node < n; ++node) {
        if (model.tree.is_leaf(node)) continue;
        for (int part = 0; part < 2; ++part) {
            const Eigen::Index off = part * static_cast<Eigen::Index>(n);
            Eigen::VectorXd m = Eigen::VectorXd::Zero(dim);
            m[off + static_cast<Eigen::Index>(node)] = 1.0;
            for (NodeIndex c : model.tree.children(node)) m[off + static_cast<Eigen::Index>(c)] -= model.tree.cond_prob(c);
            eq(m, 0.0);
        }
    }
    for (NodeIndex node = 0; node < n; ++node) {
        const Eigen::Index i0 = static_cast<Eigen::Index>(node);
        const Eigen::Index i1 = static_cast<Eigen::Index>(n + node);
        Eigen::VectorXd lo = Eigen::VectorXd::Zero(dim);  // (1 - lambda) S z0 - z1 <= 0
        lo[i0] = (1.0 - model.lambda) * model.ask[node];
        lo[i1] = -1.0;
        rows.push_back(lo);
        rhs.push_back(0.0);
        Eigen::VectorXd hi = Eigen::VectorXd::Zero(dim);  // z1 - S z0 <= 0
        hi[i0] = -model.ask[node];
        hi[i1] = 1.0;
        rows.push_back(hi);
        rhs.push_back(0.0);
        for (Eigen::Index i : {i0, i1}) {
            Eigen::VectorXd nn = Eigen::VectorXd::Zero(dim);
            nn[i] = -1.0;
            rows.push_back(nn);
            rhs.push_back(0.0);
        }
    }
    Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()), dim);
    Eigen::VectorXd b(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        a.row(static_cast<Eigen::Index>(k)) = rows[k].transpose();
        b[static_cast<Eigen::Index>(k)] = rhs[k];
    }
    return {a, b};
}

/// Objective vector for E[Z0_T h] over the packed (z0, z1) variables.
inline Eigen::VectorXd leaf_pairing(const MarketModel& model, const std::vector<double>& h) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(2 * model.tree.size()));
    const auto leaves = model.tree.leaves();
    for (std::size_t k = 0; k < leaves.size(); ++k) c[static_cast<Eigen::Index>(leaves[k])] = model.tree.prob(leaves[k]) * h[k];
    return c;
}

/// A random strict CPS built from a shadow price: leaf values of S~ are drawn inside the spread,
/// each inner node takes a value strictly between its children's extremes and inside its own
/// spread, and Q averages the two-point martingale measures of every straddling child pair.
inline std::optional<CpsElement> random_cps(const MarketModel& model, std::mt19937_64& rng, int attempts = 2000) {
    const ScenarioTree& tree = model.tree;
    const std::size_t n = tree.size();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::vector<double> shadow(n, 0.0);
        bool ok = true;
        for (std::size_t k = n; k-- > 0 && ok;) {
            const double lo = (1.0 - model.lambda) * model.ask[k], hi = model.ask[k];
            if (tree.is_leaf(k)) {
                shadow[k] = lo + unit(rng) * (hi - lo);
                continue;
            }
            double cmin = std::numeric_limits<double>::infinity(), cmax = -cmin;
            for (NodeIndex c : tree.children(k)) {
                cmin = std::min(cmin, shadow[c]);
                cmax = std::max(cmax, shadow[c]);
            }
            if (tree.children(k).size() == 1) {
                ok = cmin >= lo && cmin <= hi;
                shadow[k] = cmin;
                continue;
            }
            const double a = std::max(lo, cmin), b = std::min(hi, cmax);
            if (!(b >= a && b > cmin && a < cmax)) { ok = false; break; }
            shadow[k] = a + (0.05 + 0.9 * unit(rng)) * (b - a);
        }
        if (!ok) continue;
        // Conditional Q at each inner node.
        std::vector<double> q_node(n, 1.0);
        for (NodeIndex k = 0; k < n; ++k) {
            const auto kids = tree.children(k);
            if (kids.empty()) continue;
            std::vector<double> q(kids.size(), 0.0);
            if (kids.size() == 1) {
                q[0] = 1.0;
            } else {
                int pairs = 0;
                for (std::size_t i = 0; i < kids.size(); ++i) {
                    for (std::size_t j = 0; j < kids.size(); ++j) {
                        const double si = shadow[kids[i]], sj = shadow[kids[j]];
                        if (!(si < shadow[k] && sj > shadow[k])) continue;
                        const double w = (sj - shadow[k]) / (sj - si);
                        q[i] += w;
                        q[j] += 1.0 - w;
                        ++pairs;
                    }
                }
                for (double& v : q) v /= pairs;
            }
            for (std::size_t i = 0; i < kids.size(); ++i) q_node[kids[i]] = q_node[k] * q[i];
        }
        CpsElement z;
        z.z0.resize(n);
        z.z1.resize(n);
        for (NodeIndex k = 0; k < n; ++k) {
            z.z0[k] = q_node[k] / tree.prob(k);
            z.z1[k] = z.z0[k] * shadow[k];
        }
        return z;
    }
    return std::nullopt;
}

/// E[Z0_T h] for a leaf vector.
inline double pairing(const MarketModel& model, const CpsElement& z, const std::vector<double>& h) {
    const auto leaves = model.tree.leaves();
    double s = 0.0;
    for (std::size_t k = 0; k < leaves.size(); ++k) s += model.tree.prob(leaves[k]) * z.z0[leaves[k]] * h[k];
    return s;
}

/// Golden-section minimizer of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - g * (b - a), d = a + g * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace tcdl::test
