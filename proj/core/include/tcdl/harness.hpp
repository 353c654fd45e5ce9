#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tcdl/dual.hpp"
#include "tcdl/market.hpp"
#include "tcdl/primal.hpp"
#include "tcdl/utility.hpp"

namespace tcdl {

// ---------------------------------------------------------------------------------------------
// Random desk-scale instances
// ---------------------------------------------------------------------------------------------

struct InstanceSpec {
    std::uint64_t seed = 1;
    int depth = 2;
    int branching = 2;
    double lambda = 0.1;
    double rho = 0.0;
};

struct GeneratedInstance {
    MarketModel model;
    int attempts = 0;  ///< draws needed until the polytope had a strict interior
};

/// Prices follow multiplicative shocks uniform in [0.5, 2] from S0 = 1. At each node the shocks are
/// redrawn until they straddle 1 so the node is locally arbitrage-free; conditional probabilities
/// are uniform draws normalized with a floor of 0.05; e_T is uniform in [-rho, rho]. The whole
/// draw is repeated until the CPS polytope has a strict interior (at most 100 times).
GeneratedInstance random_instance(const InstanceSpec& spec);

// ---------------------------------------------------------------------------------------------
// Primal/dual coupling
// ---------------------------------------------------------------------------------------------

struct YhatResult {
    double yhat = 0.0;
    double residual = 0.0;  ///< v'(yhat) + x
    int evaluations = 0;
    DualSolution dual;      ///< dual solution at yhat
};

/// Root of the increasing map y -> v'(y) + x: bracket expansion by factors of 10 inside
/// [1e-8, 1e8], then bisection in log y accelerated by Illinois false-position steps.
/// Throws BelowX0 when x <= x0 and SolverIndeterminate when no bracket is found.
YhatResult find_yhat(const DualProblem& problem, double x, double x0, double tol = 1e-10);
double find_yhat(const MarketModel& model, const Utility& utility, double x);

struct RecoveryCheck {
    PayoffVector ghat;              ///< I(yhat Z0_T) - x - e_T
    std::vector<double> wealth;     ///< I(yhat Z0_T)
    double expected_utility = 0.0;  ///< E[U(x + ghat + e_T)]
    double pairing = 0.0;           ///< E[Z0_T ghat]
    double price = 0.0;             ///< superreplication price of ghat (should be <= 0)
    bool attainable = false;        ///< LP certificate that ghat is in C(0)
    std::optional<TradingStrategy> strategy;
};

/// Builds the primal candidate from a dual solution at yhat and certifies it is attainable from 0
/// (LP with cash tolerance `attain_tol`).
RecoveryCheck recover_from_dual(const MarketModel& model, const Utility& utility, double x, const DualSolution& at_yhat,
                                double attain_tol = 1e-7);

/// Full recovery pipeline: x0, yhat, dual optimizer, then ghat. The returned solution carries the
/// recovered payoff, its generating strategy and E[U(x + ghat + e_T)] as value.
PrimalSolution recover_primal_from_dual(const MarketModel& model, const Utility& utility, double x);

struct SlacknessResiduals {
    double r1 = 0.0;  ///< |E[Z0_T ghat]|
    double r2 = 0.0;  ///< |E[Z0_T (x + ghat)] - x|
    double r3 = 0.0;  ///< singular-part terms; identically zero on a finite space
    bool pass = false;
};

SlacknessResiduals slackness_check(const MarketModel& model, const PrimalSolution& primal, const DualSolution& dual,
                                   double tol = 1e-6);

// ---------------------------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------------------------

struct Tolerances {
    double solver = 1e-8;
    double strong_gap = 1e-5;     ///< |u - (v(yhat) + x yhat)| / (1 + |u|)
    double weak_gap = 1e-6;       ///< u <= min_y (v + x y) + tol
    double conjugate = 1e-5;      ///< v >= sup_x (u - x y) - tol
    double recovery = 1e-6;
    double slackness = 1e-6;
    double marginal = 1e-3;       ///< |u' - yhat| / (1 + yhat)
    double envelope = 1e-4;       ///< |v' - FD| / (1 + |v'|)
    double x0_slope = 1e-2;
    double shape = 1e-7;          ///< concavity / convexity midpoint tests
    double attain = 1e-7;         ///< cash tolerance for the recovery attainability LP
};

struct Check {
    std::string name;
    std::string scope;
    bool pass = false;
    double value = 0.0;
    double threshold = 0.0;
    std::string detail;
    bool advisory = false;  ///< logged but not part of passed()
};

struct XRecord {
    double x = 0.0;
    std::string status;  ///< "ok", "below-x0", "inside-margin", "indeterminate"
    double u = 0.0;
    double marginal = 0.0;
    double yhat = 0.0;
    double v_at_yhat = 0.0;
    double gap = 0.0;
    double weak_gap = 0.0;
    double recovered_utility = 0.0;
    double recovery_price = 0.0;
    bool recovery_attainable = false;
    double r1 = 0.0;
    double r2 = 0.0;
    double r3 = 0.0;
    double kkt = 0.0;
};

struct YRecord {
    double y = 0.0;
    double v = 0.0;
    double v_prime = 0.0;
    double v_prime_fd = 0.0;
    double conjugate_gap = 0.0;  ///< v(y) - sup_x (u(x) - x y) over the x grid
    double lower_bound = 0.0;    ///< V(y) - y rho
    double singular_mass = 0.0;
    double excluded_mass = 0.0;
    double kkt = 0.0;
};

struct DualityReport {
    std::uint64_t seed = 0;
    std::string model_hash;
    std::string utility;
    double lambda = 0.0;
    double rho = 0.0;
    std::size_t nodes = 0;
    std::size_t leaves = 0;
    double x0 = 0.0;
    double x_margin = 0.0;
    std::vector<XRecord> x_records;
    std::vector<YRecord> y_records;
    std::vector<Check> checks;

    bool passed() const;
};

struct AnalysisOptions {
    Tolerances tol;
    unsigned jobs = 1;
    std::uint64_t seed = 0;
    double x0_slope_y = 1e3;
};

/// Evaluates u on the x grid and v on the y grid and runs every duality check: weak and strong
/// duality, conjugacy both ways, marginal consistency, recovery, slackness, envelope derivative,
/// x0 slope, shape tests, Inada behaviour of v and the below-x0 LP certificate.
DualityReport conjugacy_check(const MarketModel& model, const Utility& utility, const std::vector<double>& x_grid,
                              const std::vector<double>& y_grid, const AnalysisOptions& options = {});

/// Default x grid: x0 + {0.5, 1, 2}.
std::vector<double> default_x_grid(double x0);
/// Default y grid: 41 log-spaced points in [1e-3, 1e3].
std::vector<double> default_y_grid();

struct ExperimentConfig {
    std::optional<std::filesystem::path> market_path;
    std::optional<InstanceSpec> instance;
    std::string utility = "log";
    std::optional<std::vector<double>> x_grid;
    std::optional<std::vector<double>> x_offsets;  ///< x grid as offsets above x0
    std::optional<std::vector<double>> y_grid;
    Tolerances tol;
    unsigned jobs = 0;  ///< worker threads, 0 = hardware concurrency

    /// Parses the JSON config schema; throws InputError on schema violations.
    static ExperimentConfig from_json(const std::string& text);
};

struct ExperimentResult {
    DualityReport report;
    std::filesystem::path directory;
};

/// Loads or generates the market, runs conjugacy_check and writes report.json, u_curve.csv,
/// v_curve.csv and checks.csv into output_root/<model-hash>[-s<seed>]-<utility>/.
ExperimentResult run_experiment(const ExperimentConfig& config, const std::filesystem::path& output_root);

/// Writes the four report files into `dir` (created if needed).
void write_report(const DualityReport& report, const std::filesystem::path& dir);
std::string report_json(const DualityReport& report);
std::string u_curve_csv(const DualityReport& report);
std::string v_curve_csv(const DualityReport& report);
std::string checks_csv(const DualityReport& report);

/// Shortest round-trip decimal form used in every CSV/JSON output ("inf", "-inf", "nan" for non-finite).
std::string format_number(double v);

}  // namespace tcdl
