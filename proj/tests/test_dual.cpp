#include <array>
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "support.hpp"
#include "tcdl/dual.hpp"
#include "tcdl/error.hpp"
#include "tcdl/harness.hpp"
#include "tcdl/primal.hpp"

using namespace tcdl;
using tcdl::test::binomial;
using tcdl::test::constant_price_tree;
using tcdl::test::single_node;

namespace {

bool mentions(const std::vector<Violation>& v, const std::string& text) {
    for (const auto& e : v)
        if (e.what.find(text) != std::string::npos) return true;
    return false;
}

bool in_library_polytope(const CpsPolytope& p, const Vector& z, double tol) {
    if (((p.eq_matrix * z - p.eq_rhs).cwiseAbs().array() > tol).any()) return false;
    if (((p.ineq_matrix * z - p.ineq_rhs).array() > tol).any()) return false;
    return (z.array() >= -tol).all();
}

// Vertex-enumeration extremes of Q(up) = P(up) Z0(up) for the binomial.
std::pair<double, double> q_range_oracle(const MarketModel& m) {
    const auto [a, b] = tcdl::test::cps_as_inequalities(m);
    const NodeIndex up = m.tree.index_of("up");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(a.cols());
    c[static_cast<Eigen::Index>(up)] = m.tree.prob(up);
    return {-*tcdl::test::vertex_max(a, b, -c), *tcdl::test::vertex_max(a, b, c)};
}

const MarketModel& binomial_loss() {
    static const MarketModel m = binomial(0.1, 0.0, -1.0);
    return m;
}

}  // namespace

TEST(CpsCheck, Examples) {
    const MarketModel flat = constant_price_tree(2, 2, 3.0, 0.1);
    CpsElement p;
    p.z0.assign(flat.tree.size(), 1.0);
    p.z1.assign(flat.tree.size(), 3.0);
    EXPECT_TRUE(cps_check(flat, p, true).empty());
    EXPECT_TRUE(p.strict());

    const MarketModel fr = binomial(0.0);
    CpsElement q;
    q.z0 = {1.0, 2.0 / 3.0, 4.0 / 3.0};
    q.z1 = {4.0, 8.0 * 2.0 / 3.0, 2.0 * 4.0 / 3.0};
    EXPECT_TRUE(cps_check(fr, q, true).empty());
    const auto d = q.density(fr.tree);
    EXPECT_NEAR(d[0], 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(d[1], 4.0 / 3.0, 1e-15);

    const MarketModel m = binomial(0.1);
    CpsElement r;
    r.z0 = {1.0, 1.0, 1.0};
    r.z1 = {4.0, 8.0, 2.0};
    const auto v = cps_check(m, r, true);
    EXPECT_TRUE(mentions(v, "Z1 martingale"));
    EXPECT_FALSE(mentions(v, "above the ask"));
    EXPECT_FALSE(mentions(v, "below the bid"));

    CpsElement s = q;
    s.z0[2] = 0.0;
    s.z1[2] = 0.0;
    EXPECT_TRUE(mentions(cps_check(fr, s, true), "strictly positive"));
    EXPECT_FALSE(mentions(cps_check(fr, s, false), "strictly positive"));
}

TEST(CpsPolytope, SingleNodeIsSpreadInterval) {
    const MarketModel m = single_node(2.0, 0.1);
    const CpsPolytope p = cps_polytope(m);
    const auto [a, b] = tcdl::test::cps_as_inequalities(m);
    const auto verts = tcdl::test::enumerate_vertices(a, b);
    ASSERT_EQ(verts.size(), 2u);
    for (const auto& v : verts) {
        EXPECT_NEAR(v[0], 1.0, 1e-12);
        EXPECT_TRUE(std::abs(v[1] - 1.8) < 1e-12 || std::abs(v[1] - 2.0) < 1e-12);
    }
    for (double z1 : {1.79, 1.8, 1.9, 2.0, 2.01}) {
        const Vector z = (Vector(2) << 1.0, z1).finished();
        const bool oracle = ((a * z - b).array() <= 1e-12).all();
        EXPECT_EQ(in_library_polytope(p, z, 1e-12), oracle) << z1;
    }
}

TEST(CpsPolytope, MembershipMatchesIndependentDescription) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (double lambda : {0.0, 0.1, 0.3}) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            const MarketModel m = random_instance({.seed = seed, .depth = 2, .branching = 3, .lambda = lambda, .rho = 0.1}).model;
            const CpsPolytope p = cps_polytope(m);
            const auto [a, b] = tcdl::test::cps_as_inequalities(m);
            int inside = 0, outside = 0;
            for (int k = 0; k < 40; ++k) {
                const auto z = tcdl::test::random_cps(m, rng);
                ASSERT_TRUE(z.has_value());
                Vector v = p.pack(*z);
                if (k % 2) v += 1e-3 * Vector::NullaryExpr(v.size(), [&] { return noise(rng); });
                const bool oracle = ((a * v - b).array() <= 1e-9).all();
                EXPECT_EQ(in_library_polytope(p, v, 1e-9), oracle);
                EXPECT_EQ(cps_check(m, p.unpack(v), false, 1e-9).empty(), oracle);
                (oracle ? inside : outside)++;
            }
            EXPECT_GE(inside, 20);
            EXPECT_GT(outside, 0);
        }
    }
}

TEST(CpsPolytope, BinomialDensityRange) {
    const MarketModel m = binomial(0.1);
    const auto [qmin, qmax] = q_range_oracle(m);
    EXPECT_NEAR(qmax, 11.0 / 27.0, 1e-12);
    EXPECT_NEAR(qmin, 4.0 / 15.0, 1e-12);
    EXPECT_NEAR(maximize_pairing(m, {1.0, 0.0}).value, qmax, 1e-10);
    EXPECT_NEAR(-maximize_pairing(m, {-1.0, 0.0}).value, qmin, 1e-10);
    const auto status = polytope_status(m);
    EXPECT_TRUE(status.nonempty);
    EXPECT_TRUE(status.has_interior);
}

TEST(CpsPolytope, BoundaryOnlyPolytope) {
    // S = (4; 4.1, 4.0), lambda = 0 forces q = 0: nonempty but no strict element.
    const MarketModel m = binomial(0.0, 0.0, 0.0, 4.1, 4.0);
    const auto [a, b] = tcdl::test::cps_as_inequalities(m);
    const auto verts = tcdl::test::enumerate_vertices(a, b);
    ASSERT_FALSE(verts.empty());
    for (const auto& v : verts) EXPECT_NEAR(v[static_cast<Eigen::Index>(m.tree.index_of("up"))], 0.0, 1e-12);
    const auto status = polytope_status(m);
    EXPECT_TRUE(status.nonempty);
    EXPECT_FALSE(status.has_interior);
    EXPECT_THROW(DualProblem(m, Utility::log()), SolverIndeterminate);
}

TEST(CpsPolytope, ArbitrageMarketHasNoCps) {
    const MarketModel m = binomial(0.0, 0.0, 0.0, 8.0, 5.0);
    const auto [a, b] = tcdl::test::cps_as_inequalities(m);
    EXPECT_TRUE(tcdl::test::enumerate_vertices(a, b).empty());
    EXPECT_FALSE(polytope_status(m).nonempty);
    EXPECT_THROW(compute_x0(m), NoConsistentPriceSystem);
    EXPECT_THROW(superreplication_price(m, {{1.0, 0.0}}), NoConsistentPriceSystem);
    EXPECT_THROW(DualProblem(m, Utility::log()), NoConsistentPriceSystem);
}

TEST(SuperreplicationPrice, Examples) {
    const MarketModel flat = constant_price_tree(2, 3, 2.0, 0.1);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    PayoffVector g;
    for (std::size_t k = 0; k < flat.tree.leaf_count(); ++k) g.values.push_back(u(rng));
    EXPECT_NEAR(superreplication_price(flat, g), *std::max_element(g.values.begin(), g.values.end()), 1e-10);

    const MarketModel m = binomial(0.1);
    EXPECT_NEAR(superreplication_price(m, {{3.0, 0.0}}), 11.0 / 9.0, 1e-10);
    EXPECT_NEAR(superreplication_price(m, {{0.7, 0.7}}), 0.7, 1e-12);
    EXPECT_NEAR(superreplication_price(m, {{-2.5, -2.5}}), -2.5, 1e-12);
}

TEST(ComputeX0, Examples) {
    EXPECT_NEAR(compute_x0(binomial(0.1)), 0.0, 1e-12);
    EXPECT_NEAR(compute_x0(binomial(0.1, 0.3, 0.3)), -0.3, 1e-12);
    const MarketModel flat = constant_price_tree(2, 2, 1.0, 0.2, -0.4);
    EXPECT_NEAR(compute_x0(flat), 0.4, 1e-12);

    const MarketModel& m = binomial_loss();
    const auto [qmin, qmax] = q_range_oracle(m);
    EXPECT_NEAR(compute_x0(m), 1.0 - qmin, 1e-10);
    EXPECT_NEAR(compute_x0(m), 0.7333333333333333, 1e-10);
}

TEST(ComputeX0, WithinRho) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const MarketModel m = random_instance({.seed = seed, .depth = 2, .branching = 3, .lambda = 0.1, .rho = 0.5}).model;
        const double x0 = compute_x0(m);
        EXPECT_LE(std::abs(x0), m.rho() + 1e-12);
    }
}

TEST(SolveDual, ConstantPriceIsJensen) {
    for (const Utility& u : {Utility::log(), Utility::power(0.5), Utility::power(-1.0)}) {
        const MarketModel flat = constant_price_tree(2, 2, 2.0, 0.1);
        for (double y : {0.3, 1.0, 4.0}) {
            const DualSolution s = solve_dual(flat, u, y);
            for (double d : s.density) EXPECT_NEAR(d, 1.0, 1e-7) << u.name();
            EXPECT_NEAR(s.value, u.v(y), 1e-8 * (1.0 + std::abs(u.v(y)))) << u.name();
            EXPECT_LE(s.kkt_residual, 1e-8);
        }
    }
}

TEST(SolveDual, FrictionlessBinomialLog) {
    const DualSolution s = solve_dual(binomial(0.0), Utility::log(), 1.0);
    ASSERT_EQ(s.density.size(), 2u);
    EXPECT_NEAR(s.density[0], 2.0 / 3.0, 1e-7);
    EXPECT_NEAR(s.density[1], 4.0 / 3.0, 1e-7);
    const double closed = -0.5 * (std::log(2.0 / 3.0) + std::log(4.0 / 3.0)) - 1.0;
    EXPECT_NEAR(s.value, closed, 1e-9);
    EXPECT_NEAR(s.value, -0.94111, 1e-5);
    EXPECT_NEAR(s.value, 0.5 * std::log(1.125) - 1.0, 1e-9);
    EXPECT_NEAR(s.singular_mass, 0.0, 1e-12);
}

TEST(SolveDual, FrictionLowersDualValue) {
    const DualSolution frictionless = solve_dual(binomial(0.0), Utility::log(), 1.0);
    const DualSolution costly = solve_dual(binomial(0.1), Utility::log(), 1.0);
    EXPECT_GE(costly.value, Utility::log().v(1.0) - 1e-10);
    EXPECT_LT(costly.value, frictionless.value);
}

TEST(SolveDual, DomainErrors) {
    EXPECT_THROW(solve_dual(binomial(0.1), Utility::log(), 0.0), DomainError);
    EXPECT_THROW(solve_dual(binomial(0.1), Utility::log(), -1.0), DomainError);
}

TEST(DualDerivative, Examples) {
    const MarketModel flat = constant_price_tree(1, 3, 2.0, 0.1);
    const DualSolution a = solve_dual(flat, Utility::log(), 2.0);
    EXPECT_NEAR(dual_derivative(flat, Utility::log(), a), -0.5, 1e-8);
    EXPECT_NEAR(a.derivative, -0.5, 1e-8);

    const MarketModel fr = binomial(0.0);
    const DualSolution b = solve_dual(fr, Utility::log(), 1.0);
    EXPECT_NEAR(b.derivative, -1.0, 1e-8);
    const double h = 1e-4;
    const double fd = (solve_dual(fr, Utility::log(), 1.0 + h).value - solve_dual(fr, Utility::log(), 1.0 - h).value) / (2 * h);
    EXPECT_NEAR(fd, -1.0, 1e-6);

    const double c = 0.35;
    const MarketModel endowed = constant_price_tree(2, 2, 1.5, 0.1, c);
    for (double y : {0.2, 1.0, 5.0}) {
        const DualSolution s = solve_dual(endowed, Utility::log(), y);
        EXPECT_NEAR(s.derivative, -1.0 / y + c, 1e-7 * (1.0 + 1.0 / y));
    }
}

TEST(DualGrid, ConstantPriceClosedForm) {
    const MarketModel flat = constant_price_tree(2, 2, 1.0, 0.1);
    const auto ys = log_grid(1e-3, 1e3, 13);
    const auto sols = dual_grid(flat, Utility::log(), ys, 2);
    ASSERT_EQ(sols.size(), ys.size());
    for (std::size_t k = 0; k < ys.size(); ++k) EXPECT_NEAR(sols[k].value, -std::log(ys[k]) - 1.0, 1e-8 * (1.0 + std::abs(std::log(ys[k]))));
}

TEST(DualGrid, ConvexIncreasingSlopeAndLimits) {
    const MarketModel& m = binomial_loss();
    const auto ys = log_grid(1e-4, 1e3, 29);
    const auto sols = dual_grid(m, Utility::log(), ys, 1);
    for (std::size_t k = 1; k < ys.size(); ++k) EXPECT_GT(sols[k].derivative, sols[k - 1].derivative);
    for (std::size_t k = 1; k + 1 < ys.size(); ++k) {
        const double w = (ys[k] - ys[k - 1]) / (ys[k + 1] - ys[k - 1]);
        EXPECT_LT(sols[k].value, (1.0 - w) * sols[k - 1].value + w * sols[k + 1].value + 1e-9);
    }
    EXPECT_LT(sols.front().derivative, -1e3);
    const double x0 = compute_x0(m);
    EXPECT_NEAR(sols.back().derivative, -x0, 1e-2);
}

TEST(DualGrid, Determinism) {
    const MarketModel m = random_instance({.seed = 8, .depth = 2, .branching = 2, .lambda = 0.1, .rho = 0.2}).model;
    const auto ys = log_grid(0.1, 10.0, 5);
    const auto a = dual_grid(m, Utility::log(), ys, 1);
    const auto b = dual_grid(m, Utility::log(), ys, 3);
    for (std::size_t k = 0; k < ys.size(); ++k) {
        EXPECT_EQ(a[k].value, b[k].value);
        EXPECT_EQ(a[k].density, b[k].density);
    }
}

TEST(DualProperties, ExpectedDensityIsOne) {
    std::mt19937_64 rng(3);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const MarketModel m = random_instance({.seed = seed, .depth = 3, .branching = 2, .lambda = 0.1, .rho = 0.3}).model;
        const std::vector<double> probs = m.tree.leaf_probabilities();
        for (int k = 0; k < 20; ++k) {
            const auto z = tcdl::test::random_cps(m, rng);
            ASSERT_TRUE(z.has_value());
            const auto d = z->density(m.tree);
            EXPECT_NEAR(expectation(m.tree, d), 1.0, 1e-10);
        }
        const DualSolution s = solve_dual(m, Utility::log(), 1.0);
        EXPECT_NEAR(expectation(m.tree, s.density), 1.0, 1e-10);
        EXPECT_TRUE(cps_check(m, s.optimizer, true, 1e-9).empty());
    }
}

TEST(DualProperties, SuperreplicationEquivalence) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    int attainable = 0, rejected = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const double lambda = std::array{0.01, 0.1, 0.3}[trial % 3];
        const auto seed = static_cast<std::uint64_t>(1 + trial / 3 % 20);
        const MarketModel m = random_instance({.seed = seed, .depth = 1 + trial % 3, .branching = 2 + trial % 2,
                                               .lambda = lambda, .rho = 0.0}).model;
        PayoffVector g;
        for (std::size_t k = 0; k < m.tree.leaf_count(); ++k) g.values.push_back(2.0 * u(rng));
        const double price = superreplication_price(m, g);
        const double gap = (u(rng) > 0 ? 1.0 : -1.0) * std::pow(10.0, -6.0 + 5.0 * (u(rng) + 1.0) / 2.0);
        const double x = price + gap;
        const bool att = is_attainable(m, g, x);
        EXPECT_EQ(att, price <= x + 1e-8) << "trial " << trial << " gap " << gap;
        (att ? attainable : rejected)++;
    }
    EXPECT_GT(attainable, 50);
    EXPECT_GT(rejected, 50);
}

TEST(DualProperties, PriceIsSublinear) {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const MarketModel m = random_instance({.seed = seed, .depth = 2, .branching = 3, .lambda = 0.1, .rho = 0.0}).model;
        PayoffVector g1, g2, sum;
        for (std::size_t k = 0; k < m.tree.leaf_count(); ++k) {
            g1.values.push_back(u(rng));
            g2.values.push_back(u(rng));
            sum.values.push_back(g1.values.back() + g2.values.back());
        }
        const double p1 = superreplication_price(m, g1), p2 = superreplication_price(m, g2);
        EXPECT_LE(superreplication_price(m, sum), p1 + p2 + 1e-8);
        for (double c : {0.0, 0.5, 3.0}) {
            PayoffVector scaled = g1;
            for (double& v : scaled.values) v *= c;
            EXPECT_NEAR(superreplication_price(m, scaled), c * p1, 1e-8 * (1.0 + c));
        }
    }
}

TEST(DualProperties, RestartsAgreeOnDensity) {
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const MarketModel m = random_instance({.seed = seed, .depth = 2, .branching = 3, .lambda = 0.1, .rho = 0.2}).model;
        const DualProblem problem(m, Utility::log());
        const DualSolution base = problem.solve(1.0);
        for (const Vector& start : problem.random_interior_points(5, seed)) {
            ASSERT_TRUE(cps_check(m, problem.polytope().unpack(start), true, 1e-9).empty());
            const DualSolution s = problem.solve(1.0, {.start = start});
            for (std::size_t k = 0; k < s.density.size(); ++k) EXPECT_NEAR(s.density[k], base.density[k], 1e-6);
        }
    }
}

TEST(DualProperties, LowerBound) {
    for (const Utility& u : {Utility::log(), Utility::power(0.5), Utility::power(-1.0)}) {
        for (std::uint64_t seed = 1; seed <= 3; ++seed) {
            const MarketModel m = random_instance({.seed = seed, .depth = 2, .branching = 2, .lambda = 0.1, .rho = 0.4}).model;
            for (double y : log_grid(1e-2, 1e2, 9)) {
                const DualSolution s = solve_dual(m, u, y);
                EXPECT_GE(s.value, u.v(y) - y * m.rho() - 1e-9) << u.name() << " y=" << y;
            }
        }
    }
}
