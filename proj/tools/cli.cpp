#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tcdl/dual.hpp"
#include "tcdl/harness.hpp"
#include "tcdl/market_io.hpp"
#include "tcdl/primal.hpp"

namespace tcdl::cli {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

ojson number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

struct Options {
    std::string market;
    std::string payoff;
    std::string utility = "log";
    std::string config;
    std::string seeds = "1..5";
    std::string out;
    double x = 0.0;
    double y = 0.0;
    unsigned jobs = 0;
    bool min_turnover = false;
    InstanceSpec instance{.seed = 1, .depth = 3, .branching = 2, .lambda = 0.1, .rho = 0.2};
};

/// --out wins over TCDL_OUTPUT_DIR; commands that always write fall back to `fallback`.
std::optional<fs::path> output_dir(const Options& o, const char* fallback) {
    if (!o.out.empty()) return fs::path(o.out);
    if (const char* env = std::getenv("TCDL_OUTPUT_DIR"); env && *env) return fs::path(env);
    if (fallback) return fs::path(fallback);
    return std::nullopt;
}

void write_text(const fs::path& path, const std::string& text) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot write " + path.string());
    f << text;
}

void emit(std::ostream& out, const Options& o, const std::string& stem, const ojson& j, const std::string& csv) {
    const std::string text = j.dump(2) + "\n";
    out << text;
    if (auto dir = output_dir(o, nullptr)) {
        write_text(*dir / (stem + ".json"), text);
        write_text(*dir / (stem + ".csv"), csv);
    }
}

MarketModel market_of(const Options& o) {
    MarketModel model = load_market(o.market);
    require_valid(model);
    return model;
}

int cmd_price(const Options& o, std::ostream& out) {
    const MarketModel model = market_of(o);
    const PayoffVector g = load_payoff(o.payoff, model.tree);
    const LinearFunctionalMax best = maximize_pairing(model, g.values);
    const std::vector<double> density = best.maximizer.density(model.tree);

    ojson j;
    j["market_hash"] = model_hash(model);
    j["price"] = number(best.value);
    std::ostringstream csv;
    csv << "leaf,prob,payoff,density\n";
    const auto leaves = model.tree.leaves();
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        csv << model.tree.id(leaves[k]) << ',' << format_number(model.tree.prob(leaves[k])) << ','
            << format_number(g.values[k]) << ',' << format_number(density[k]) << '\n';
    }
    emit(out, o, "price", j, csv.str());
    return kOk;
}

int cmd_x0(const Options& o, std::ostream& out) {
    const MarketModel model = market_of(o);
    std::vector<double> neg(model.endowment.size());
    std::transform(model.endowment.begin(), model.endowment.end(), neg.begin(), [](double e) { return -e; });
    const LinearFunctionalMax best = maximize_pairing(model, neg);
    const std::vector<double> density = best.maximizer.density(model.tree);

    ojson j;
    j["market_hash"] = model_hash(model);
    j["x0"] = number(best.value);
    j["rho"] = number(model.rho());
    std::ostringstream csv;
    csv << "leaf,prob,e_T,density\n";
    const auto leaves = model.tree.leaves();
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        csv << model.tree.id(leaves[k]) << ',' << format_number(model.tree.prob(leaves[k])) << ','
            << format_number(model.endowment[k]) << ',' << format_number(density[k]) << '\n';
    }
    emit(out, o, "x0", j, csv.str());
    return kOk;
}

int cmd_dual(const Options& o, std::ostream& out) {
    const MarketModel model = market_of(o);
    const Utility utility = Utility::parse(o.utility);
    if (!(o.y > 0.0)) throw InputError("--y must be positive");
    const DualSolution d = solve_dual(model, utility, o.y);

    ojson j;
    j["market_hash"] = model_hash(model);
    j["utility"] = utility.name();
    j["y"] = number(d.y);
    j["value"] = number(d.value);
    j["derivative"] = number(d.derivative);
    j["expected_conjugate"] = number(d.expected_conjugate);
    j["endowment_pairing"] = number(d.endowment_pairing);
    j["singular_mass"] = number(d.singular_mass);
    j["excluded_mass"] = number(d.excluded_mass);
    j["kkt_residual"] = number(d.kkt_residual);
    std::ostringstream csv;
    csv << "leaf,prob,S_T,e_T,density,shadow_price\n";
    const auto leaves = model.tree.leaves();
    for (std::size_t k = 0; k < leaves.size(); ++k) {
        const NodeIndex n = leaves[k];
        const double z0 = d.optimizer.z0[n];
        const double shadow = z0 > 0.0 ? d.optimizer.z1[n] / z0 : std::numeric_limits<double>::quiet_NaN();
        csv << model.tree.id(n) << ',' << format_number(model.tree.prob(n)) << ',' << format_number(model.ask[n]) << ','
            << format_number(model.endowment[k]) << ',' << format_number(z0) << ',' << format_number(shadow) << '\n';
    }
    emit(out, o, "dual", j, csv.str());
    return kOk;
}

int cmd_primal(const Options& o, std::ostream& out) {
    const MarketModel model = market_of(o);
    const Utility utility = Utility::parse(o.utility);
    PrimalOptions opts;
    opts.compute_marginal = true;
    opts.minimal_turnover = o.min_turnover;
    const PrimalSolution p = solve_primal(model, utility, o.x, opts);
    if (p.status == PrimalStatus::Indeterminate) throw SolverIndeterminate(p.message);

    ojson j;
    j["market_hash"] = model_hash(model);
    j["utility"] = utility.name();
    j["x"] = number(p.x);
    j["status"] = to_string(p.status);
    j["value"] = number(p.value);
    std::ostringstream csv;
    csv << "leaf,prob,S_T,e_T,ghat,wealth\n";
    if (p.optimal()) {
        j["marginal"] = number(p.marginal);
        j["kkt_residual"] = number(p.kkt_residual);
        ojson nodes = ojson::array();
        for (NodeIndex n = 0; n < model.tree.size(); ++n) {
            ojson e;
            e["id"] = model.tree.id(n);
            e["phi0"] = number(p.strategy.phi0[n]);
            e["phi1"] = number(p.strategy.phi1[n]);
            e["buy"] = number(p.strategy.buy[n]);
            e["sell"] = number(p.strategy.sell[n]);
            nodes.push_back(std::move(e));
        }
        j["strategy"] = std::move(nodes);
        const auto leaves = model.tree.leaves();
        for (std::size_t k = 0; k < leaves.size(); ++k) {
            const NodeIndex n = leaves[k];
            csv << model.tree.id(n) << ',' << format_number(model.tree.prob(n)) << ',' << format_number(model.ask[n])
                << ',' << format_number(model.endowment[k]) << ',' << format_number(p.ghat.values[k]) << ','
                << format_number(p.wealth[k]) << '\n';
        }
    } else if (!p.message.empty()) {
        j["message"] = p.message;
    }
    emit(out, o, "primal", j, csv.str());
    return kOk;
}

bool is_solve_failure(const Check& c) { return c.name == "dual_solve" || c.name == "primal_dual_solve"; }

/// 0 when every binding check passed, 3 when the only failures are solves that could not be
/// certified, 1 otherwise.
int report_exit(const DualityReport& r, std::ostream& err, const std::string& label) {
    bool check_failure = false;
    bool indeterminate = false;
    for (const Check& c : r.checks) {
        if (c.pass || c.advisory) continue;
        (is_solve_failure(c) ? indeterminate : check_failure) = true;
        err << label << ": " << c.name << " [" << c.scope << "] value " << format_number(c.value) << " threshold "
            << format_number(c.threshold);
        if (!c.detail.empty()) err << " (" << c.detail << ")";
        err << '\n';
    }
    if (check_failure) return kCheckFailure;
    return indeterminate ? kIndeterminate : kOk;
}

int cmd_report(const Options& o, bool jobs_given, std::ostream& out, std::ostream& err) {
    ExperimentConfig cfg;
    bool utility_in_config = false;
    if (!o.config.empty()) {
        const std::string text = read_text_file(o.config);
        cfg = ExperimentConfig::from_json(text);
        utility_in_config = nlohmann::json::parse(text).contains("utility");
        if (cfg.market_path && cfg.market_path->is_relative())
            cfg.market_path = fs::path(o.config).parent_path() / *cfg.market_path;
    }
    if (!o.market.empty()) {
        if (cfg.instance) throw InputError("conflicting market sources: --market and a seed in the config");
        if (cfg.market_path) throw InputError("conflicting market sources: --market and a market in the config");
        cfg.market_path = fs::path(o.market);
    }
    if (!cfg.market_path && !cfg.instance) throw InputError("report needs --market or a config naming a market or seed");
    if (!utility_in_config) cfg.utility = o.utility;
    if (jobs_given) cfg.jobs = o.jobs;

    const ExperimentResult result = run_experiment(cfg, *output_dir(o, "tcdl-reports"));
    const DualityReport& r = result.report;
    const auto failed = std::count_if(r.checks.begin(), r.checks.end(), [](const Check& c) { return !c.pass && !c.advisory; });
    out << result.directory.string() << ": " << (r.passed() ? "pass" : "FAIL") << " (" << r.checks.size() << " checks, "
        << failed << " failed)\n";
    return report_exit(r, err, result.directory.filename().string());
}

int cmd_selftest(const Options& o, std::ostream& out, std::ostream& err) {
    const std::vector<unsigned long long> seeds = parse_seed_range(o.seeds);
    const fs::path root = *output_dir(o, "tcdl-selftest");
    std::ostringstream summary;
    summary << "seed,model_hash,directory,passed,checks,failed\n";
    int code = kOk;
    for (unsigned long long seed : seeds) {
        ExperimentConfig cfg;
        cfg.instance = o.instance;
        cfg.instance->seed = seed;
        cfg.utility = o.utility;
        cfg.jobs = o.jobs;
        const ExperimentResult result = run_experiment(cfg, root);
        const DualityReport& r = result.report;
        const auto failed = std::count_if(r.checks.begin(), r.checks.end(), [](const Check& c) { return !c.pass && !c.advisory; });
        summary << seed << ',' << r.model_hash << ',' << result.directory.filename().string() << ',' << (r.passed() ? 1 : 0)
                << ',' << r.checks.size() << ',' << failed << '\n';
        out << "seed " << seed << ": " << (r.passed() ? "pass" : "FAIL") << " (" << r.checks.size() << " checks, " << failed
            << " failed)\n";
        const int c = report_exit(r, err, "seed " + std::to_string(seed));
        if (c == kCheckFailure || (c == kIndeterminate && code == kOk)) code = c;
    }
    write_text(root / "selftest.csv", summary.str());
    return code;
}

}  // namespace

std::vector<unsigned long long> parse_seed_range(const std::string& text) {
    auto parse = [&](std::string_view s) {
        unsigned long long v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) throw InputError("bad seed range '" + text + "'");
        return v;
    };
    const std::string_view all(text);
    const auto dots = all.find("..");
    const unsigned long long a = parse(all.substr(0, dots));
    const unsigned long long b = dots == std::string_view::npos ? a : parse(all.substr(dots + 2));
    if (b < a) throw InputError("bad seed range '" + text + "': end before start");
    if (b - a >= 100000) throw InputError("seed range '" + text + "' is too long");
    std::vector<unsigned long long> seeds;
    for (unsigned long long s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Utility maximization under proportional transaction costs on scenario trees"};
    app.name("tcdl");
    app.require_subcommand(1);
    Options o;

    auto add_out = [&](CLI::App* sub) {
        sub->add_option("--out", o.out, "Output directory (overrides TCDL_OUTPUT_DIR)");
    };
    CLI::Option* jobs_opt = nullptr;
    auto add_jobs = [&](CLI::App* sub) {
        jobs_opt = sub->add_option("--jobs", o.jobs, "Worker threads (default: available cores)");
    };

    CLI::App* price = app.add_subcommand("price", "Superreplication price of a payoff");
    price->add_option("--market", o.market, "Market JSON file")->required();
    price->add_option("--payoff", o.payoff, "Payoff JSON file (leaf id -> value)")->required();
    add_out(price);

    CLI::App* primal = app.add_subcommand("primal", "Solve the primal utility problem u(x)");
    primal->add_option("--market", o.market, "Market JSON file")->required();
    primal->add_option("--utility", o.utility, "log or power:<alpha>");
    primal->add_option("--x", o.x, "Initial capital")->required();
    primal->add_flag("--min-turnover", o.min_turnover, "Report the optimal strategy with least turnover");
    add_out(primal);

    CLI::App* dual = app.add_subcommand("dual", "Solve the dual problem v(y)");
    dual->add_option("--market", o.market, "Market JSON file")->required();
    dual->add_option("--utility", o.utility, "log or power:<alpha>");
    dual->add_option("--y", o.y, "Dual variable y > 0")->required();
    add_out(dual);

    CLI::App* x0 = app.add_subcommand("x0", "Capital threshold x0 = sup E[Z0_T (-e_T)]");
    x0->add_option("--market", o.market, "Market JSON file")->required();
    add_out(x0);

    CLI::App* report = app.add_subcommand("report", "Full duality report for one market");
    report->add_option("--config", o.config, "Experiment config JSON");
    report->add_option("--market", o.market, "Market JSON file");
    report->add_option("--utility", o.utility, "log or power:<alpha> (when the config names none)");
    add_jobs(report);
    CLI::Option* report_jobs = jobs_opt;
    add_out(report);

    CLI::App* selftest = app.add_subcommand("selftest", "Duality reports on seeded random instances");
    selftest->add_option("--seeds", o.seeds, "Seed range a..b")->capture_default_str();
    selftest->add_option("--utility", o.utility, "log or power:<alpha>")->capture_default_str();
    selftest->add_option("--depth", o.instance.depth, "Tree depth")->capture_default_str()->check(CLI::Range(0, 5));
    selftest->add_option("--branching", o.instance.branching, "Children per node")->capture_default_str()->check(CLI::Range(1, 3));
    selftest->add_option("--lambda", o.instance.lambda, "Transaction cost level")->capture_default_str();
    selftest->add_option("--rho", o.instance.rho, "Endowment bound")->capture_default_str();
    add_jobs(selftest);
    add_out(selftest);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (*price) return cmd_price(o, out);
        if (*primal) return cmd_primal(o, out);
        if (*dual) return cmd_dual(o, out);
        if (*x0) return cmd_x0(o, out);
        if (*report) return cmd_report(o, report_jobs->count() > 0, out, err);
        if (*selftest) return cmd_selftest(o, out, err);
    } catch (const SolverIndeterminate& e) {
        err << "tcdl: indeterminate: " << e.what() << '\n';
        return kIndeterminate;
    } catch (const Error& e) {
        err << "tcdl: " << e.what() << '\n';
        return kInputError;
    } catch (const nlohmann::json::exception& e) {
        err << "tcdl: " << e.what() << '\n';
        return kInputError;
    } catch (const fs::filesystem_error& e) {
        err << "tcdl: " << e.what() << '\n';
        return kInputError;
    }
    return kInputError;
}

}  // namespace tcdl::cli
