#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tcdl/error.hpp"
#include "tcdl/harness.hpp"

namespace tcdl {

namespace {

using ojson = nlohmann::ordered_json;

ojson number(double v) {
    if (std::isfinite(v)) return v;
    return format_number(v);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

double positive(const ojson& j, const char* key) {
    if (!j.is_number()) throw InputError(std::string("config: '") + key + "' must be a number");
    const double v = j.get<double>();
    if (!(v > 0.0) || !std::isfinite(v)) throw InputError(std::string("config: '") + key + "' must be positive");
    return v;
}

std::vector<double> number_list(const ojson& j, const char* key) {
    if (!j.is_array() || j.empty()) throw InputError(std::string("config: '") + key + "' must be a non-empty array");
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw InputError(std::string("config: '") + key + "' must contain numbers");
        out.push_back(v.get<double>());
        if (!std::isfinite(out.back())) throw InputError(std::string("config: '") + key + "' must be finite");
    }
    return out;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw InputError("write failed for '" + path.string() + "'");
}

}  // namespace

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

ExperimentConfig ExperimentConfig::from_json(const std::string& text) {
    ojson j;
    try {
        j = ojson::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InputError(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw InputError("config: top level must be an object");
    static const std::set<std::string> known{"market", "seed",     "depth",    "branching",  "lambda", "rho",
                                             "utility", "x_grid", "x_offsets", "y_grid", "tolerances", "jobs"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) throw InputError("config: unknown key '" + key + "'");

    ExperimentConfig cfg;
    const bool has_market = j.contains("market");
    const bool has_seed = j.contains("seed");
    if (has_market && has_seed) throw InputError("config: 'market' and 'seed' are mutually exclusive");
    if (!has_market && !has_seed) throw InputError("config: one of 'market' or 'seed' is required");
    if (has_market) {
        if (!j["market"].is_string()) throw InputError("config: 'market' must be a path string");
        for (const char* k : {"depth", "branching", "lambda", "rho"})
            if (j.contains(k)) throw InputError(std::string("config: '") + k + "' only applies to random instances");
        cfg.market_path = j["market"].get<std::string>();
    } else {
        InstanceSpec spec;
        if (!j["seed"].is_number_unsigned()) throw InputError("config: 'seed' must be a nonnegative integer");
        spec.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("depth")) {
            if (!j["depth"].is_number_integer()) throw InputError("config: 'depth' must be an integer");
            spec.depth = j["depth"].get<int>();
        }
        if (j.contains("branching")) {
            if (!j["branching"].is_number_integer()) throw InputError("config: 'branching' must be an integer");
            spec.branching = j["branching"].get<int>();
        }
        if (j.contains("lambda")) {
            if (!j["lambda"].is_number()) throw InputError("config: 'lambda' must be a number");
            spec.lambda = j["lambda"].get<double>();
        }
        if (j.contains("rho")) {
            if (!j["rho"].is_number()) throw InputError("config: 'rho' must be a number");
            spec.rho = j["rho"].get<double>();
        }
        cfg.instance = spec;
    }
    if (j.contains("utility")) {
        if (!j["utility"].is_string()) throw InputError("config: 'utility' must be a string");
        cfg.utility = j["utility"].get<std::string>();
        Utility::parse(cfg.utility);
    }
    if (j.contains("x_grid") && j.contains("x_offsets"))
        throw InputError("config: 'x_grid' and 'x_offsets' are mutually exclusive");
    if (j.contains("x_grid")) cfg.x_grid = number_list(j["x_grid"], "x_grid");
    if (j.contains("x_offsets")) cfg.x_offsets = number_list(j["x_offsets"], "x_offsets");
    if (j.contains("y_grid")) {
        const auto& g = j["y_grid"];
        if (g.is_object()) {
            for (const auto& [key, _] : g.items())
                if (key != "lo" && key != "hi" && key != "n") throw InputError("config: unknown y_grid key '" + key + "'");
            if (!g.contains("lo") || !g.contains("hi") || !g.contains("n"))
                throw InputError("config: y_grid object needs 'lo', 'hi' and 'n'");
            const double lo = positive(g["lo"], "y_grid.lo");
            const double hi = positive(g["hi"], "y_grid.hi");
            if (!g["n"].is_number_unsigned() || g["n"].get<std::size_t>() < 2)
                throw InputError("config: 'y_grid.n' must be an integer >= 2");
            if (!(hi > lo)) throw InputError("config: y_grid needs hi > lo");
            cfg.y_grid = log_grid(lo, hi, g["n"].get<std::size_t>());
        } else {
            cfg.y_grid = number_list(g, "y_grid");
            for (double y : *cfg.y_grid)
                if (!(y > 0.0)) throw InputError("config: y_grid values must be positive");
        }
    }
    if (j.contains("tolerances")) {
        const auto& t = j["tolerances"];
        if (!t.is_object()) throw InputError("config: 'tolerances' must be an object");
        for (const auto& [key, value] : t.items()) {
            double* slot = nullptr;
            if (key == "solver") slot = &cfg.tol.solver;
            else if (key == "strong_gap") slot = &cfg.tol.strong_gap;
            else if (key == "weak_gap") slot = &cfg.tol.weak_gap;
            else if (key == "conjugate") slot = &cfg.tol.conjugate;
            else if (key == "recovery") slot = &cfg.tol.recovery;
            else if (key == "slackness") slot = &cfg.tol.slackness;
            else if (key == "marginal") slot = &cfg.tol.marginal;
            else if (key == "envelope") slot = &cfg.tol.envelope;
            else if (key == "x0_slope") slot = &cfg.tol.x0_slope;
            else if (key == "shape") slot = &cfg.tol.shape;
            else if (key == "attain") slot = &cfg.tol.attain;
            else throw InputError("config: unknown tolerance '" + key + "'");
            *slot = positive(value, key.c_str());
        }
    }
    if (j.contains("jobs")) {
        if (!j["jobs"].is_number_unsigned()) throw InputError("config: 'jobs' must be a nonnegative integer");
        cfg.jobs = j["jobs"].get<unsigned>();
    }
    return cfg;
}

std::string report_json(const DualityReport& r) {
    ojson j;
    j["seed"] = r.seed;
    j["model_hash"] = r.model_hash;
    j["utility"] = r.utility;
    j["lambda"] = number(r.lambda);
    j["rho"] = number(r.rho);
    j["nodes"] = r.nodes;
    j["leaves"] = r.leaves;
    j["x0"] = number(r.x0);
    j["x_margin"] = number(r.x_margin);
    j["passed"] = r.passed();
    std::size_t failed = 0;
    for (const auto& c : r.checks) failed += (c.pass || c.advisory) ? 0 : 1;
    j["checks_total"] = r.checks.size();
    j["checks_failed"] = failed;
    ojson xs = ojson::array();
    for (const auto& x : r.x_records) {
        ojson e;
        e["x"] = number(x.x);
        e["status"] = x.status;
        e["u"] = number(x.u);
        e["marginal"] = number(x.marginal);
        e["yhat"] = number(x.yhat);
        e["v_at_yhat"] = number(x.v_at_yhat);
        e["gap"] = number(x.gap);
        e["weak_gap"] = number(x.weak_gap);
        e["recovered_utility"] = number(x.recovered_utility);
        e["recovery_price"] = number(x.recovery_price);
        e["recovery_attainable"] = x.recovery_attainable;
        e["r1"] = number(x.r1);
        e["r2"] = number(x.r2);
        e["r3"] = number(x.r3);
        e["kkt"] = number(x.kkt);
        xs.push_back(std::move(e));
    }
    j["x_records"] = std::move(xs);
    ojson ys = ojson::array();
    for (const auto& y : r.y_records) {
        ojson e;
        e["y"] = number(y.y);
        e["v"] = number(y.v);
        e["v_prime"] = number(y.v_prime);
        e["v_prime_fd"] = number(y.v_prime_fd);
        e["conjugate_gap"] = number(y.conjugate_gap);
        e["lower_bound"] = number(y.lower_bound);
        e["singular_mass"] = number(y.singular_mass);
        e["excluded_mass"] = number(y.excluded_mass);
        e["kkt"] = number(y.kkt);
        ys.push_back(std::move(e));
    }
    j["y_records"] = std::move(ys);
    ojson cs = ojson::array();
    for (const auto& c : r.checks) {
        ojson e;
        e["name"] = c.name;
        e["scope"] = c.scope;
        e["pass"] = c.pass;
        e["value"] = number(c.value);
        e["threshold"] = number(c.threshold);
        e["advisory"] = c.advisory;
        if (!c.detail.empty()) e["detail"] = c.detail;
        cs.push_back(std::move(e));
    }
    j["checks"] = std::move(cs);
    return j.dump(2) + "\n";
}

std::string u_curve_csv(const DualityReport& r) {
    std::ostringstream os;
    os << "x,status,u,marginal,yhat,v_at_yhat,gap,weak_gap,recovered_utility,recovery_price,recovery_attainable,r1,r2,r3,kkt\n";
    for (const auto& x : r.x_records) {
        os << format_number(x.x) << ',' << x.status << ',' << format_number(x.u) << ',' << format_number(x.marginal) << ','
           << format_number(x.yhat) << ',' << format_number(x.v_at_yhat) << ',' << format_number(x.gap) << ','
           << format_number(x.weak_gap) << ',' << format_number(x.recovered_utility) << ','
           << format_number(x.recovery_price) << ',' << (x.recovery_attainable ? 1 : 0) << ',' << format_number(x.r1)
           << ',' << format_number(x.r2) << ',' << format_number(x.r3) << ',' << format_number(x.kkt) << '\n';
    }
    return os.str();
}

std::string v_curve_csv(const DualityReport& r) {
    std::ostringstream os;
    os << "y,v,v_prime,v_prime_fd,conjugate_gap,lower_bound,singular_mass,excluded_mass,kkt\n";
    for (const auto& y : r.y_records) {
        os << format_number(y.y) << ',' << format_number(y.v) << ',' << format_number(y.v_prime) << ','
           << format_number(y.v_prime_fd) << ',' << format_number(y.conjugate_gap) << ',' << format_number(y.lower_bound)
           << ',' << format_number(y.singular_mass) << ',' << format_number(y.excluded_mass) << ','
           << format_number(y.kkt) << '\n';
    }
    return os.str();
}

std::string checks_csv(const DualityReport& r) {
    std::ostringstream os;
    os << "check,scope,pass,advisory,value,threshold,detail\n";
    for (const auto& c : r.checks) {
        os << csv_field(c.name) << ',' << csv_field(c.scope) << ',' << (c.pass ? 1 : 0) << ',' << (c.advisory ? 1 : 0) << ','
           << format_number(c.value)
           << ',' << format_number(c.threshold) << ',' << csv_field(c.detail) << '\n';
    }
    return os.str();
}

void write_report(const DualityReport& report, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw InputError("cannot create '" + dir.string() + "': " + ec.message());
    write_file(dir / "report.json", report_json(report));
    write_file(dir / "u_curve.csv", u_curve_csv(report));
    write_file(dir / "v_curve.csv", v_curve_csv(report));
    write_file(dir / "checks.csv", checks_csv(report));
}

}  // namespace tcdl
