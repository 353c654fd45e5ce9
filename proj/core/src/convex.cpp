#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>


#include "tcdl/solver.hpp"

namespace tcdl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBarrierGrowth = 12.0;
constexpr int kMaxNewton = 200;

double max_abs(const Vector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

std::optional<StrictFeasibility> max_margin_point(const Matrix& eq_matrix, const Vector& eq_rhs,
                                                  const Matrix& ineq_matrix, const Vector& ineq_rhs) {
    const Eigen::Index n = std::max(eq_matrix.cols(), ineq_matrix.cols());
    const Eigen::Index mi = ineq_matrix.rows();
    const Eigen::Index me = eq_matrix.rows();
    LinearProgram lp;
    lp.sense = Sense::Maximize;
    lp.objective = Vector::Zero(n + 1);
    lp.objective[n] = 1.0;
    lp.lower = Vector::Constant(n + 1, -kInf);
    lp.ineq_matrix = Matrix::Zero(mi + 1, n + 1);
    lp.ineq_rhs = Vector::Zero(mi + 1);
    if (mi > 0) {
        lp.ineq_matrix.topLeftCorner(mi, n) = ineq_matrix;
        lp.ineq_matrix.col(n).head(mi).setOnes();
        lp.ineq_rhs.head(mi) = ineq_rhs;
    }
    lp.ineq_matrix(mi, n) = 1.0;
    lp.ineq_rhs[mi] = 1.0;
    if (me > 0) {
        lp.eq_matrix = Matrix::Zero(me, n + 1);
        lp.eq_matrix.leftCols(n) = eq_matrix;
        lp.eq_rhs = eq_rhs;
    }
    const LpResult res = solve_lp(lp);
    if (!res.optimal()) return std::nullopt;
    return StrictFeasibility{res.z[n], res.z.head(n)};
}

ConvexResult solve_convex(const ConvexProgram& cp, double tol) {
    const Eigen::Index n = cp.dimension;
    const Eigen::Index m = cp.ineq_matrix.rows();
    const Eigen::Index p = cp.eq_matrix.rows();
    if ((m > 0 && cp.ineq_matrix.cols() != n) || cp.ineq_rhs.size() != m || (p > 0 && cp.eq_matrix.cols() != n) ||
        cp.eq_rhs.size() != p || !cp.value || !cp.gradient || !cp.hessian)
        throw InputError("convex program: inconsistent definition");
    if (!(tol > 0.0)) throw InputError("convex program: tolerance must be positive");

    const double eq_scale = 1.0 + max_abs(cp.eq_rhs);
    auto slacks = [&](const Vector& z) -> Vector {
        if (m == 0) return Vector();
        return cp.ineq_rhs - cp.ineq_matrix * z;
    };

    Vector z;
    if (cp.start) {
        z = *cp.start;
        if (z.size() != n) throw InputError("convex program: start has wrong dimension");
        if (m > 0 && !(slacks(z).minCoeff() > 0.0)) throw NoStrictlyFeasiblePoint("start point violates an inequality");
        if (p > 0 && max_abs(cp.eq_matrix * z - cp.eq_rhs) > 1e-8 * eq_scale)
            throw NoStrictlyFeasiblePoint("start point violates the equality constraints");
    } else {
        auto point = max_margin_point(cp.eq_matrix, cp.eq_rhs, cp.ineq_matrix, cp.ineq_rhs);
        if (!point || !(point->margin > 0.0)) throw NoStrictlyFeasiblePoint("phase-1 LP found no interior point");
        z = point->z;
    }
    if (!std::isfinite(cp.value(z))) throw NoStrictlyFeasiblePoint("start point outside the objective domain");

    // Redundant equality rows are dropped so the augmented Newton system stays nonsingular.
    Matrix eq_rows;
    Vector eq_vals;
    std::vector<Eigen::Index> eq_index;
    if (p > 0) {
        Eigen::ColPivHouseholderQR<Matrix> qr(cp.eq_matrix.transpose());
        qr.setThreshold(1e-10);
        const Eigen::Index rank = qr.rank();
        eq_rows.resize(rank, n);
        eq_vals.resize(rank);
        for (Eigen::Index r = 0; r < rank; ++r) {
            const Eigen::Index row = qr.colsPermutation().indices()[r];
            eq_rows.row(r) = cp.eq_matrix.row(row);
            eq_vals[r] = cp.eq_rhs[row];
            eq_index.push_back(row);
        }
    }
    const Eigen::Index r_eq = eq_rows.rows();
    const Eigen::Index k = n - r_eq;

    ConvexResult result;
    double t = 1.0;
    // The path stops once the barrier gap m / t is below half the tolerance relative to the objective.
    // Magnitude of the objective at z; terms of f can cancel, so |f| alone understates it.
    auto value_scale = [&](const Vector& x) { return 1.0 + std::abs(cp.value(x)) + std::abs(cp.gradient(x).dot(x)); };
    auto gap_reached = [&](double tt) { return m == 0 || static_cast<double>(m) / tt <= 0.5 * tol * value_scale(z); };

    auto barrier_value = [&](const Vector& x, double tt) {
        const double f = cp.value(x);
        if (!std::isfinite(f)) return kInf;
        double phi = tt * f;
        if (m > 0) {
            const Vector s = slacks(x);
            if (s.minCoeff() <= 0.0) return kInf;
            phi -= s.array().log().sum();
        }
        return phi;
    };

    // Last Newton step computed at the current z, with its equality multipliers.
    Vector last_dz;
    Vector last_w;
    bool step_at_z = false;

    auto center = [&](double tt, double dec_tol) -> bool {
        if (k == 0) return true;
        double prev_dec2 = kInf;
        for (int iter = 0; iter < kMaxNewton; ++iter) {
            const Vector s = slacks(z);
            Vector g = tt * cp.gradient(z);
            Matrix h = tt * cp.hessian(z);
            if (m > 0) {
                const Vector inv_s = s.cwiseInverse();
                g.noalias() += cp.ineq_matrix.transpose() * inv_s;
                const Matrix scaled = inv_s.asDiagonal() * cp.ineq_matrix;
                h.noalias() += scaled.transpose() * scaled;
            }
            // Augmented system [H E'; E 0] with symmetric diagonal scaling. Large barrier terms sit on
            // the diagonal, so pivoted elimination stays accurate when slacks span many magnitudes.
            const Vector d = h.diagonal().unaryExpr([](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; });
            Vector rs(r_eq);
            for (Eigen::Index r = 0; r < r_eq; ++r) {
                const double nr = eq_rows.row(r).cwiseProduct(d.transpose()).cwiseAbs().maxCoeff();
                rs[r] = nr > 0.0 ? 1.0 / nr : 1.0;
            }
            Matrix kkt(n + r_eq, n + r_eq);
            kkt.topLeftCorner(n, n) = d.asDiagonal() * h * d.asDiagonal();
            if (r_eq > 0) {
                const Matrix ed = rs.asDiagonal() * eq_rows * d.asDiagonal();
                kkt.bottomLeftCorner(r_eq, n) = ed;
                kkt.topRightCorner(n, r_eq) = ed.transpose();
                kkt.bottomRightCorner(r_eq, r_eq).setZero();
            }
            Vector rhs(n + r_eq);
            rhs.head(n) = -d.cwiseProduct(g);
            if (r_eq > 0) rhs.tail(r_eq) = rs.cwiseProduct(eq_vals - eq_rows * z);
            const Eigen::PartialPivLU<Matrix> lu(kkt);
            Vector sol = lu.solve(rhs);
            for (int ref = 0; ref < 3; ++ref) sol += lu.solve(rhs - kkt * sol);
            if (!sol.allFinite()) return false;
            const Vector dz = d.cwiseProduct(sol.head(n));
            const double dec2 = std::max(0.0, dz.dot(h * dz));
            ++result.newton_steps;
            last_dz = dz;
            last_w = rs.cwiseProduct(sol.tail(r_eq));
            step_at_z = true;
            if (dec2 / 2.0 <= dec_tol) return true;
            // Quadratic convergence has ended in rounding noise.
            if (dec2 < 1e-6 && dec2 > 0.25 * prev_dec2) return true;
            prev_dec2 = dec2;

            double alpha = 1.0;
            if (m > 0) {
                const Vector ad = cp.ineq_matrix * dz;
                for (Eigen::Index i = 0; i < m; ++i)
                    if (ad[i] > 0.0) alpha = std::min(alpha, 0.99 * s[i] / ad[i]);
            }
            // Close to the centre the full Newton step is taken; rounding in the barrier value would
            // otherwise block the last quadratic steps.
            if (dec2 < 1e-2) {
                const Vector trial = z + alpha * dz;
                if (!std::isfinite(barrier_value(trial, tt))) return false;
                z = trial;
                step_at_z = false;
                continue;
            }
            const double phi0 = barrier_value(z, tt);
            bool accepted = false;
            for (int ls = 0; ls < 80; ++ls) {
                const Vector trial = z + alpha * dz;
                const double phi = barrier_value(trial, tt);
                if (std::isfinite(phi) && phi <= phi0 - 0.25 * alpha * dec2) {
                    z = trial;
                    step_at_z = false;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if (!accepted) return false;
        }
        return false;
    };

    while (true) {
        if (!center(t, 1e-9)) {
            std::ostringstream os;
            os << "Newton centering stalled at t = " << t;
            result.message = os.str();
            break;
        }
        if (gap_reached(t)) {
            result.status = ConvexStatus::Optimal;
            break;
        }
        t *= kBarrierGrowth;
    }

    result.z = z;
    result.value = cp.value(z);
    const Vector grad = cp.gradient(z);
    const double f_scale = value_scale(z);
    const double g_scale = 1.0 + max_abs(grad);

    // Multipliers: least squares over the near-active inequalities and the equalities. The barrier
    // estimates 1/(t s) are kept as a fallback; whichever certifies the smaller residual is reported.
    auto residuals = [&](const Vector& mu, const Vector& nu) {
        Vector r = grad;
        double compl_res = 0.0;
        if (m > 0) {
            r += cp.ineq_matrix.transpose() * mu;
            const Vector sl = slacks(z);
            for (Eigen::Index i = 0; i < m; ++i) compl_res = std::max(compl_res, std::abs(mu[i] * sl[i]));
            if (mu.minCoeff() < 0.0) compl_res = std::max(compl_res, -mu.minCoeff());
        }
        if (p > 0) r += cp.eq_matrix.transpose() * nu;
        return std::max(max_abs(r) / g_scale, compl_res / f_scale);
    };
    auto eq_fit = [&](const Vector& partial) -> Vector {
        if (p == 0) return Vector();
        return cp.eq_matrix.transpose().colPivHouseholderQr().solve(-partial);
    };

    Vector mu_barrier = m > 0 ? Vector((t * slacks(z)).cwiseInverse()) : Vector();
    Vector stat_partial = grad;
    if (m > 0) stat_partial += cp.ineq_matrix.transpose() * mu_barrier;
    Vector nu_barrier = eq_fit(stat_partial);
    double best = residuals(mu_barrier, nu_barrier);
    result.ineq_multipliers = mu_barrier;
    result.eq_multipliers = nu_barrier;

    if (step_at_z) {
        // Primal-dual estimate from the last Newton system: stationarity then fails only by the
        // curvature of f along the (tiny) step.
        Vector mu = mu_barrier;
        if (m > 0) {
            const Vector sl = slacks(z);
            mu = mu.cwiseProduct(Vector::Ones(m) + (cp.ineq_matrix * last_dz).cwiseQuotient(sl));
        }
        Vector nu = Vector::Zero(p);
        for (std::size_t r = 0; r < eq_index.size(); ++r) nu[eq_index[r]] = last_w[static_cast<Eigen::Index>(r)] / t;
        const double r = residuals(mu, nu);
        if (mu.allFinite() && nu.allFinite() && r < best) {
            best = r;
            result.ineq_multipliers = mu;
            result.eq_multipliers = nu;
        }
    }

    if (m > 0) {
        // Near-active constraints get least-squares multipliers; the rest keep their barrier estimate.
        const Vector sl = slacks(z);
        std::vector<Eigen::Index> active;
        Vector mu = mu_barrier;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (sl[i] * sl[i] * t < 1.0) {
                active.push_back(i);
                mu[i] = 0.0;
            }
        }
        const Eigen::Index na = static_cast<Eigen::Index>(active.size());
        const Vector target = -(grad + cp.ineq_matrix.transpose() * mu);
        Matrix cols(n, na + p);
        for (Eigen::Index a = 0; a < na; ++a) cols.col(a) = cp.ineq_matrix.row(active[a]).transpose();
        if (p > 0) cols.rightCols(p) = cp.eq_matrix.transpose();
        if (na + p > 0) {
            const Vector sol = cols.colPivHouseholderQr().solve(target);
            for (Eigen::Index a = 0; a < na; ++a) mu[active[a]] = sol[a];
            const Vector nu = p > 0 ? Vector(sol.tail(p)) : Vector();
            const double r = residuals(mu, nu);
            if (sol.allFinite() && r < best) {
                best = r;
                result.ineq_multipliers = mu;
                result.eq_multipliers = nu;
            }
        }
    }
    const double gap = m > 0 ? static_cast<double>(m) / t / f_scale : 0.0;
    const double eq_res = p > 0 ? max_abs(cp.eq_matrix * z - cp.eq_rhs) / eq_scale : 0.0;
    result.kkt_residual = std::max({best, gap, eq_res});
    if (result.status == ConvexStatus::Optimal && !(result.kkt_residual <= tol)) {
        result.status = ConvexStatus::Indeterminate;
        std::ostringstream os;
        os << "KKT residual " << result.kkt_residual << " above tolerance " << tol;
        result.message = os.str();
    }
    return result;
}

}  // namespace tcdl
