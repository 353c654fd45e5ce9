#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tcdl/market.hpp"
#include "tcdl/utility.hpp"

namespace tcdl {

/// Terminal cash claim g, one value per leaf (leaves() order).
struct PayoffVector {
    std::vector<double> values;

    double lower_bound() const;
    std::size_t size() const noexcept { return values.size(); }
};

/// Per-node holdings after trading at that node, with the share change split into
/// nonnegative purchases and sales. Pre-trade holdings at the root are (x, 0).
struct TradingStrategy {
    double initial_capital = 0.0;
    std::vector<double> phi0;
    std::vector<double> phi1;
    std::vector<double> buy;
    std::vector<double> sell;

    /// No-trade strategy: phi0 = x, phi1 = 0 everywhere.
    static TradingStrategy no_trade(const ScenarioTree& tree, double x);

    /// Builds holdings from per-node trades, spending exactly the ask on purchases and receiving
    /// exactly the bid on sales (no disposal).
    static TradingStrategy from_trades(const MarketModel& model, double x, std::vector<double> buy,
                                       std::vector<double> sell);

    /// Terminal bond holdings minus x, per leaf.
    PayoffVector terminal_gain(const ScenarioTree& tree) const;
};

struct Violation {
    NodeIndex node = 0;
    std::string what;
    double amount = 0.0;  ///< size of the violation
};

/// phi0 + (phi1)^+ (1 - lambda) S - (phi1)^- S.
double liquidation_value(double phi0, double phi1, double ask, double lambda);
double liquidation_value(const MarketModel& model, const TradingStrategy& strategy, NodeIndex node);

/// Per-node self-financing inequality
///     phi0 - phi0(parent) <= -S buy + (1 - lambda) S sell
/// together with phi1 - phi1(parent) = buy - sell and buy, sell >= 0. The root's parent holdings are (x, 0).
std::vector<Violation> check_self_financing(const MarketModel& model, const TradingStrategy& strategy,
                                            double tol = 1e-10);

/// Membership in the admissible set A(x): self-financing, phi1 = 0 at every leaf, and liquidation
/// value >= -M at every node with M = x + rho + 1.
std::vector<Violation> check_admissible(const MarketModel& model, const TradingStrategy& strategy,
                                        double tol = 1e-10);

struct Attainability {
    bool attainable = false;
    std::optional<TradingStrategy> strategy;  ///< a superhedging strategy when attainable
};

/// Decides g in C(x) by LP feasibility: is there a self-financing strategy from (x, 0) that ends
/// flat in stock with terminal cash >= g - tol at every leaf? Throws SolverIndeterminate.
Attainability attain(const MarketModel& model, const PayoffVector& g, double x, double tol = 1e-9);
bool is_attainable(const MarketModel& model, const PayoffVector& g, double x, double tol = 1e-9);

/// Is there g in C(0) with x + g + e_T >= floor at every leaf? False below x0.
bool positive_wealth_feasible(const MarketModel& model, double x, double floor = 1e-6);

enum class PrimalStatus { Optimal, BelowX0, Indeterminate };
const char* to_string(PrimalStatus status);

struct PrimalSolution {
    PrimalStatus status = PrimalStatus::Indeterminate;
    double x = 0.0;
    TradingStrategy strategy;
    PayoffVector ghat;            ///< optimal terminal gain, an element of C(0)
    std::vector<double> wealth;   ///< x + ghat + e_T per leaf
    double value = -std::numeric_limits<double>::infinity();
    double kkt_residual = 0.0;
    double marginal = std::numeric_limits<double>::quiet_NaN();
    std::string message;

    bool optimal() const noexcept { return status == PrimalStatus::Optimal; }
};

struct PrimalOptions {
    double tol = 1e-8;
    std::optional<double> x0;      ///< skip the x0 LP when already known
    bool minimal_turnover = false; ///< re-select the generating strategy with least turnover
    bool compute_marginal = false;
};

/// u(x) = max E[U(x + g + e_T)] over g in C(0), solved over per-node trades with a log barrier.
PrimalSolution solve_primal(const MarketModel& model, const Utility& utility, double x,
                            const PrimalOptions& options = {});

/// Central difference (u(x + h) - u(x - h)) / 2h; h defaults to 1e-4 max(1, |x|).
double primal_marginal(const MarketModel& model, const Utility& utility, double x,
                       std::optional<double> h = std::nullopt, const PrimalOptions& options = {});

}  // namespace tcdl
