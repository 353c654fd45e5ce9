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

// Log-utility share bought at the root of the frictionless binomial, from the 1-D oracle.
double frictionless_share_oracle(double x) {
    auto f = [x](double th) {
        const double up = x + 4.0 * th, down = x - 2.0 * th;
        if (up <= 0.0 || down <= 0.0) return std::numeric_limits<double>::infinity();
        return -(0.5 * std::log(up) + 0.5 * std::log(down));
    };
    return tcdl::test::golden_section(f, -0.25 * x + 1e-12, 0.5 * x - 1e-12);
}

bool has_violation_at(const std::vector<Violation>& v, NodeIndex node) {
    for (const auto& e : v)
        if (e.node == node) return true;
    return false;
}

}  // namespace

TEST(Liquidation, Examples) {
    EXPECT_EQ(liquidation_value(5.0, 0.0, 4.0, 0.1), 5.0);
    EXPECT_EQ(liquidation_value(5.0, 0.0, 123.0, 0.7), 5.0);
    EXPECT_DOUBLE_EQ(liquidation_value(0.0, 1.0, 4.0, 0.1), 3.6);
    EXPECT_DOUBLE_EQ(liquidation_value(2.0, -1.0, 4.0, 0.1), -2.0);

    const MarketModel m = binomial(0.1);
    TradingStrategy s = TradingStrategy::no_trade(m.tree, 1.0);
    s.phi0[0] = 0.0;
    s.phi1[0] = 1.0;
    EXPECT_DOUBLE_EQ(liquidation_value(m, s, 0), 3.6);
    EXPECT_THROW(liquidation_value(m, s, 17), InputError);
}

TEST(SelfFinancing, NoTradeIsValid) {
    const MarketModel m = constant_price_tree(2, 3, 4.0, 0.1);
    const TradingStrategy s = TradingStrategy::no_trade(m.tree, 2.5);
    EXPECT_TRUE(check_self_financing(m, s).empty());
    EXPECT_TRUE(check_admissible(m, s).empty());
    for (double g : s.terminal_gain(m.tree).values) EXPECT_EQ(g, 0.0);
}

TEST(SelfFinancing, BuyAtRoot) {
    const MarketModel m = binomial(0.1);
    const double x = 10.0;
    TradingStrategy s = TradingStrategy::no_trade(m.tree, x);
    for (NodeIndex n = 0; n < m.tree.size(); ++n) {
        s.phi1[n] = 1.0;
        s.phi0[n] = x - 4.0;
    }
    s.buy[0] = 1.0;
    EXPECT_TRUE(check_self_financing(m, s).empty());

    for (NodeIndex n = 0; n < m.tree.size(); ++n) s.phi0[n] = x - 3.9;
    const auto v = check_self_financing(m, s);
    ASSERT_FALSE(v.empty());
    EXPECT_TRUE(has_violation_at(v, 0));
    EXPECT_FALSE(has_violation_at(v, 1));
    EXPECT_NEAR(v[0].amount, 0.1, 1e-12);

    // Split must be nonnegative and match the share change.
    TradingStrategy bad = TradingStrategy::no_trade(m.tree, x);
    bad.sell[1] = -1.0;
    bad.buy[1] = -1.0;
    EXPECT_TRUE(has_violation_at(check_self_financing(m, bad), 1));
    TradingStrategy mismatch = TradingStrategy::no_trade(m.tree, x);
    mismatch.buy[2] = 1.0;
    EXPECT_TRUE(has_violation_at(check_self_financing(m, mismatch), 2));
}

TEST(SelfFinancing, RoundTripLedger) {
    const MarketModel m = constant_price_tree(1, 2, 4.0, 0.1);
    const double x = 1.0;
    std::vector<double> buy(m.tree.size(), 0.0), sell(m.tree.size(), 0.0);
    buy[0] = 1.0;
    for (NodeIndex leaf : m.tree.leaves()) sell[leaf] = 1.0;
    const TradingStrategy s = TradingStrategy::from_trades(m, x, buy, sell);
    EXPECT_TRUE(check_self_financing(m, s).empty());
    EXPECT_TRUE(check_admissible(m, s).empty());
    for (NodeIndex leaf : m.tree.leaves()) {
        EXPECT_NEAR(s.phi0[leaf], x - 4.0 + 3.6, 1e-15);
        EXPECT_EQ(s.phi1[leaf], 0.0);
    }
    for (double g : s.terminal_gain(m.tree).values) EXPECT_NEAR(g, -0.4, 1e-15);
}

TEST(Admissibility, RejectsTerminalStockAndDeepLiquidation) {
    const MarketModel m = binomial(0.1);
    std::vector<double> buy(m.tree.size(), 0.0), sell(m.tree.size(), 0.0);
    buy[0] = 1.0;
    const TradingStrategy held = TradingStrategy::from_trades(m, 0.0, buy, sell);
    EXPECT_TRUE(check_self_financing(m, held).empty());
    EXPECT_FALSE(check_admissible(m, held).empty());

    // Short 10 shares at x = 0: liquidation -4 * 10 * 0.1 = -4 < -M = -1 at the root.
    std::vector<double> b2(m.tree.size(), 0.0), s2(m.tree.size(), 0.0);
    s2[0] = 10.0;
    for (NodeIndex leaf : m.tree.leaves()) b2[leaf] = 10.0;
    const TradingStrategy shorted = TradingStrategy::from_trades(m, 0.0, b2, s2);
    EXPECT_TRUE(check_self_financing(m, shorted).empty());
    EXPECT_TRUE(has_violation_at(check_admissible(m, shorted), 0));
}

TEST(Attainability, Examples) {
    const MarketModel m = binomial(0.1);
    EXPECT_TRUE(is_attainable(m, {{0.0, 0.0}}, 0.0));
    EXPECT_FALSE(is_attainable(m, {{1.0, 1.0}}, 0.0));
    EXPECT_TRUE(is_attainable(m, {{1.0, 1.0}}, 1.0));

    const PayoffVector call{{3.0, 0.0}};
    EXPECT_TRUE(is_attainable(m, call, 11.0 / 9.0));
    EXPECT_FALSE(is_attainable(m, call, 11.0 / 9.0 - 1e-3));

    const Attainability a = attain(m, call, 11.0 / 9.0);
    ASSERT_TRUE(a.attainable);
    ASSERT_TRUE(a.strategy.has_value());
    EXPECT_TRUE(check_self_financing(m, *a.strategy, 1e-9).empty());
    const auto gain = a.strategy->terminal_gain(m.tree);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_GE(11.0 / 9.0 + gain.values[k], call.values[k] - 1e-9);

    EXPECT_THROW(is_attainable(m, {{1.0}}, 0.0), InputError);
}

TEST(Attainability, FreeDisposal) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
        const MarketModel m = random_instance({.seed = seed, .depth = 2, .branching = 2, .lambda = 0.1, .rho = 0.0}).model;
        PayoffVector g;
        for (std::size_t k = 0; k < m.tree.leaf_count(); ++k) g.values.push_back(u(rng));
        const double x = superreplication_price(m, g) + 0.01;
        ASSERT_TRUE(is_attainable(m, g, x));
        PayoffVector less = g;
        for (double& v : less.values) v -= 0.5 * (u(rng) + 1.0);
        EXPECT_TRUE(is_attainable(m, less, x));
    }
}

TEST(SolvePrimal, SingleNodeLog) {
    const PrimalSolution s = solve_primal(single_node(), Utility::log(), 2.0);
    ASSERT_TRUE(s.optimal()) << s.message;
    EXPECT_NEAR(s.value, std::log(2.0), 1e-12);
    EXPECT_NEAR(s.ghat.values[0], 0.0, 1e-10);
    EXPECT_NEAR(s.wealth[0], 2.0, 1e-10);
}

TEST(SolvePrimal, FrictionlessBinomialMatchesOracle) {
    const double theta = frictionless_share_oracle(1.0);
    EXPECT_NEAR(theta, 0.125, 1e-7);
    const double oracle = 0.5 * std::log(1.0 + 4.0 * theta) + 0.5 * std::log(1.0 - 2.0 * theta);

    const MarketModel m = binomial(0.0);
    const PrimalSolution s = solve_primal(m, Utility::log(), 1.0);
    ASSERT_TRUE(s.optimal()) << s.message;
    EXPECT_NEAR(s.value, oracle, 1e-9);
    EXPECT_NEAR(s.value, 0.0588915, 1e-7);
    EXPECT_NEAR(s.strategy.phi1[0], 0.125, 1e-6);
    EXPECT_NEAR(s.ghat.values[0], 0.5, 1e-6);
    EXPECT_NEAR(s.ghat.values[1], -0.25, 1e-6);
    EXPECT_LE(s.kkt_residual, 1e-8);
    EXPECT_TRUE(check_self_financing(m, s.strategy, 1e-8).empty());
    EXPECT_TRUE(check_admissible(m, s.strategy, 1e-8).empty());
}

TEST(SolvePrimal, WideSpreadMeansNoTrade) {
    const MarketModel m = binomial(0.6);
    // Shadow price (4; 6, 2) is a P-martingale inside the spread, so P is a CPS.
    CpsElement z;
    z.z0 = {1.0, 1.0, 1.0};
    z.z1 = {4.0, 6.0, 2.0};
    ASSERT_TRUE(cps_check(m, z, true).empty());
    for (double x : {0.5, 1.0, 3.0}) {
        const PrimalSolution s = solve_primal(m, Utility::log(), x);
        ASSERT_TRUE(s.optimal()) << s.message;
        EXPECT_NEAR(s.value, std::log(x), 1e-8);
        for (double g : s.ghat.values) EXPECT_NEAR(g, 0.0, 1e-6);
    }
}

TEST(SolvePrimal, BelowX0) {
    const MarketModel m = binomial(0.1, 0.0, -1.0);
    const PrimalSolution s = solve_primal(m, Utility::log(), 0.5);
    EXPECT_EQ(s.status, PrimalStatus::BelowX0);
    EXPECT_STREQ(to_string(s.status), "infeasible-below-x0");
    EXPECT_EQ(s.value, -std::numeric_limits<double>::infinity());
    EXPECT_FALSE(positive_wealth_feasible(m, 0.7333333 - 0.1));
    EXPECT_TRUE(positive_wealth_feasible(m, 0.7333333 + 0.1));
}

TEST(SolvePrimal, MinimalTurnoverKeepsPayoff) {
    const MarketModel m = random_instance({.seed = 3, .depth = 2, .branching = 2, .lambda = 0.1, .rho = 0.2}).model;
    const PrimalSolution a = solve_primal(m, Utility::log(), 1.0);
    PrimalOptions opt;
    opt.minimal_turnover = true;
    const PrimalSolution b = solve_primal(m, Utility::log(), 1.0, opt);
    ASSERT_TRUE(a.optimal() && b.optimal());
    EXPECT_NEAR(a.value, b.value, 1e-8);
    double ta = 0.0, tb = 0.0;
    for (NodeIndex n = 0; n < m.tree.size(); ++n) {
        ta += a.strategy.buy[n] + a.strategy.sell[n];
        tb += b.strategy.buy[n] + b.strategy.sell[n];
    }
    EXPECT_LE(tb, ta + 1e-7);
    EXPECT_TRUE(check_self_financing(m, b.strategy, 1e-8).empty());
}

TEST(PrimalMarginal, Examples) {
    EXPECT_NEAR(primal_marginal(single_node(), Utility::log(), 2.0), 0.5, 1e-5);
    EXPECT_NEAR(primal_marginal(binomial(0.0), Utility::log(), 1.0), 1.0, 1e-4);
    // U = 2 sqrt(x) has U'(4) = 4^(-1/2) = 0.5.
    EXPECT_NEAR(primal_marginal(single_node(), Utility::power(0.5), 4.0), 0.5, 1e-5);
    EXPECT_THROW(primal_marginal(single_node(), Utility::log(), 2.0, -1.0), DomainError);
}

TEST(PrimalProperties, ConcaveNondecreasingOnGrid) {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const MarketModel m = random_instance({.seed = seed, .depth = 2, .branching = 3, .lambda = 0.1, .rho = 0.3}).model;
        const double x0 = compute_x0(m);
        std::vector<double> xs, us;
        for (int k = 0; k < 9; ++k) xs.push_back(x0 + 0.2 + 0.3 * k);
        for (double x : xs) {
            const PrimalSolution s = solve_primal(m, Utility::log(), x, {.x0 = x0});
            ASSERT_TRUE(s.optimal()) << s.message;
            us.push_back(s.value);
        }
        for (std::size_t k = 1; k < xs.size(); ++k) EXPECT_GE(us[k], us[k - 1] - 1e-7);
        for (std::size_t k = 1; k + 1 < xs.size(); ++k) EXPECT_GE(us[k], 0.5 * (us[k - 1] + us[k + 1]) - 1e-7);
    }
}

TEST(PrimalProperties, OptimalPayoffHasNonpositivePriceUnderRandomCps) {
    std::mt19937_64 rng(99);
    for (std::uint64_t seed = 1; seed <= 4; ++seed) {
        const MarketModel m = random_instance({.seed = seed, .depth = 3, .branching = 2, .lambda = 0.1, .rho = 0.2}).model;
        const PrimalSolution s = solve_primal(m, Utility::log(), compute_x0(m) + 1.0);
        ASSERT_TRUE(s.optimal()) << s.message;
        int used = 0;
        for (int k = 0; k < 100; ++k) {
            const auto z = tcdl::test::random_cps(m, rng);
            ASSERT_TRUE(z.has_value());
            ASSERT_TRUE(cps_check(m, *z, true, 1e-9).empty());
            EXPECT_LE(tcdl::test::pairing(m, *z, s.ghat.values), 1e-7);
            ++used;
        }
        EXPECT_EQ(used, 100);
        EXPECT_LE(superreplication_price(m, s.ghat), 1e-7);
    }
}

TEST(PrimalProperties, PowerUtilityScaling) {
    const double alpha = 0.5;
    const Utility u = Utility::power(alpha);
    for (std::uint64_t seed : {4u, 5u}) {
        const MarketModel m = random_instance({.seed = seed, .depth = 2, .branching = 2, .lambda = 0.1, .rho = 0.0}).model;
        const PrimalSolution base = solve_primal(m, u, 1.0);
        ASSERT_TRUE(base.optimal());
        for (double c : {0.5, 3.0}) {
            const PrimalSolution scaled = solve_primal(m, u, c);
            ASSERT_TRUE(scaled.optimal());
            EXPECT_NEAR(scaled.value, std::pow(c, alpha) * base.value, 1e-7 * std::abs(scaled.value));
            for (std::size_t k = 0; k < base.ghat.size(); ++k)
                EXPECT_NEAR(scaled.ghat.values[k], c * base.ghat.values[k], 1e-6 * c);
        }
    }
}
