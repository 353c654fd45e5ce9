#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tcdl/solver.hpp"

namespace tcdl {

const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::Indeterminate: return "numerically-indeterminate";
    }
    return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Equality form  min c'x  s.t.  A x = b  over the shifted user variables and the inequality
/// slacks. Free variables keep a single column; every other column is nonnegative.
struct StandardForm {
    Matrix a;
    Vector b;
    Vector c;
    std::vector<bool> free;       // per column
    Eigen::Index num_ineq = 0;
    Eigen::Index num_vars = 0;    // user variables; slacks follow
};

StandardForm to_standard_form(const LinearProgram& lp, const Vector& lower) {
    const Eigen::Index n = lp.num_variables();
    const Eigen::Index mi = lp.ineq_matrix.rows();
    const Eigen::Index me = lp.eq_matrix.rows();
    StandardForm sf;
    sf.num_ineq = mi;
    sf.num_vars = n;
    const Eigen::Index cols = n + mi;
    const Eigen::Index m = mi + me;
    sf.a = Matrix::Zero(m, cols);
    sf.b = Vector::Zero(m);
    sf.c = Vector::Zero(cols);
    sf.free.assign(static_cast<std::size_t>(cols), false);
    const double sign = lp.sense == Sense::Minimize ? 1.0 : -1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        sf.c[j] = sign * lp.objective[j];
        sf.free[static_cast<std::size_t>(j)] = !std::isfinite(lower[j]);
    }
    auto fill_row = [&](Eigen::Index row, const auto& coeffs, double rhs) {
        double shifted = rhs;
        for (Eigen::Index j = 0; j < n; ++j) {
            const double v = coeffs[j];
            if (v == 0.0) continue;
            sf.a(row, j) = v;
            if (std::isfinite(lower[j])) shifted -= v * lower[j];
        }
        sf.b[row] = shifted;
    };
    for (Eigen::Index i = 0; i < mi; ++i) {
        fill_row(i, lp.ineq_matrix.row(i), lp.ineq_rhs[i]);
        sf.a(i, n + i) = 1.0;
    }
    for (Eigen::Index k = 0; k < me; ++k) fill_row(mi + k, lp.eq_matrix.row(k), lp.eq_rhs[k]);
    return sf;
}

/// Free columns eliminated by Gauss-Jordan: each pivot row defines one free variable in terms of
/// the nonnegative columns, and the remaining rows form an LP over nonnegative columns only.
struct Reduction {
    Matrix w;                               // eliminated [A | b]
    Vector cost;                            // eliminated objective over all columns
    std::vector<Eigen::Index> pivot_row;    // per column, -1 unless a free column with a pivot
    std::vector<Eigen::Index> rest_rows;    // rows left for the simplex
    std::vector<Eigen::Index> rest_cols;    // nonnegative columns
    bool free_direction = false;            // a free column without pivot still moves the objective
};

Reduction eliminate_free(const StandardForm& sf, double pivot_tol) {
    const Eigen::Index m = sf.a.rows();
    const Eigen::Index cols = sf.a.cols();
    Reduction r;
    r.w.resize(m, cols + 1);
    r.w.leftCols(cols) = sf.a;
    r.w.col(cols) = sf.b;
    r.cost = sf.c;
    r.pivot_row.assign(static_cast<std::size_t>(cols), -1);
    std::vector<bool> used(static_cast<std::size_t>(m), false);
    const double scale = 1.0 + (m > 0 && cols > 0 ? sf.a.cwiseAbs().maxCoeff() : 0.0);
    double c_scale = 1.0 + (cols > 0 ? sf.c.cwiseAbs().maxCoeff() : 0.0);
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (!sf.free[static_cast<std::size_t>(j)]) continue;
        Eigen::Index best = -1;
        double best_abs = pivot_tol * scale;
        for (Eigen::Index i = 0; i < m; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            if (std::abs(r.w(i, j)) > best_abs) {
                best_abs = std::abs(r.w(i, j));
                best = i;
            }
        }
        if (best < 0) {
            if (std::abs(r.cost[j]) > 1e-9 * c_scale) r.free_direction = true;
            continue;
        }
        used[static_cast<std::size_t>(best)] = true;
        r.pivot_row[static_cast<std::size_t>(j)] = best;
        r.w.row(best) /= r.w(best, j);
        for (Eigen::Index i = 0; i < m; ++i) {
            if (i == best) continue;
            const double f = r.w(i, j);
            if (f != 0.0) r.w.row(i) -= f * r.w.row(best);
        }
        const double f = r.cost[j];
        if (f != 0.0) r.cost -= f * r.w.row(best).head(cols).transpose();
        r.w.col(j).setZero();
        r.w(best, j) = 1.0;
    }
    for (Eigen::Index i = 0; i < m; ++i)
        if (!used[static_cast<std::size_t>(i)]) r.rest_rows.push_back(i);
    for (Eigen::Index j = 0; j < cols; ++j)
        if (!sf.free[static_cast<std::size_t>(j)]) r.rest_cols.push_back(j);
    return r;
}

/// Dense tableau over [structural | artificial | rhs]. Dantzig pricing with a Harris two-pass
/// ratio test; after a run of degenerate pivots it switches to Bland's rule until progress resumes.
/// The tableau is rebuilt from the original data every kReinvertEvery pivots and before any
/// optimal or unbounded verdict.
class Tableau {
public:
    static constexpr int kReinvertEvery = 40;
    static constexpr int kDegenerateRun = 30;

    /// `b` must be nonnegative; the artificial basis is the starting point.
    Tableau(const Matrix& a, const Vector& b, const LpOptions& opt)
        : m_(a.rows()), ns_(a.cols()), cols_(ns_ + m_), opt_(opt) {
        full_ = Matrix::Zero(m_, cols_);
        full_.leftCols(ns_) = a;
        full_.rightCols(m_).setIdentity();
        b_ = b;
        b_scale_ = 1.0 + (m_ > 0 ? b_.cwiseAbs().maxCoeff() : 0.0);
        t_.setZero(m_ + 1, cols_ + 1);
        t_.topLeftCorner(m_, cols_) = full_;
        t_.block(0, cols_, m_, 1) = b;
        basis_.resize(m_);
        for (Eigen::Index i = 0; i < m_; ++i) basis_[i] = ns_ + i;
    }

    Eigen::Index rows() const { return m_; }
    const std::vector<Eigen::Index>& basis() const { return basis_; }
    int pivots() const { return pivots_; }

    /// Loads reduced costs for cost vector `cost` (size cols_) into the last row.
    void set_costs(const Vector& cost) {
        cost_ = cost;
        t_.row(m_).setZero();
        t_.row(m_).head(cols_) = cost.transpose();
        for (Eigen::Index i = 0; i < m_; ++i) {
            const double cb = cost[basis_[i]];
            if (cb != 0.0) t_.row(m_) -= cb * t_.row(i);
        }
    }

    double objective() const { return -t_(m_, cols_); }
    double rhs(Eigen::Index i) const { return t_(i, cols_); }
    double at(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }

    enum class Outcome { Optimal, Unbounded, Stalled };

    /// Pivots over columns [0, allowed_cols) until optimal. With `bounded` set (phase 1) a column
    /// without an acceptable pivot is skipped instead of signalling unboundedness.
    Outcome iterate(Eigen::Index allowed_cols, bool bounded) {
        int degenerate = 0;
        std::vector<bool> skipped(static_cast<std::size_t>(allowed_cols), false);
        while (true) {
            if (pivots_ >= opt_.max_pivots) return Outcome::Stalled;
            const bool bland = degenerate >= kDegenerateRun;
            const double scale = 1.0 + t_.row(m_).head(allowed_cols).cwiseAbs().maxCoeff();
            Eigen::Index enter = -1;
            double most = -1e-10 * scale;
            for (Eigen::Index j = 0; j < allowed_cols; ++j) {
                if (skipped[static_cast<std::size_t>(j)]) continue;
                if (t_(m_, j) < most) {
                    enter = j;
                    if (bland) break;
                    most = t_(m_, j);
                }
            }
            if (enter < 0) {
                if (fresh_) return Outcome::Optimal;
                reinvert();
                std::fill(skipped.begin(), skipped.end(), false);
                continue;
            }

            // Entries below the pivot tolerance relative to the column are treated as zero.
            const double tol = opt_.pivot_tolerance * std::max(1.0, t_.col(enter).head(m_).cwiseAbs().maxCoeff());
            // Harris pass 1: largest step keeping every basic variable above -delta.
            const double delta = 1e-11 * b_scale_;
            double bound = kInf;
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = t_(i, enter);
                if (a > tol) bound = std::min(bound, (std::max(t_(i, cols_), 0.0) + delta) / a);
            }
            if (!std::isfinite(bound)) {
                if (!fresh_) {
                    reinvert();
                    std::fill(skipped.begin(), skipped.end(), false);
                    continue;
                }
                if (!bounded) return Outcome::Unbounded;
                skipped[static_cast<std::size_t>(enter)] = true;
                continue;
            }
            // Pass 2: among rows within the bound take the largest pivot (smallest basis index under Bland).
            Eigen::Index leave = -1;
            for (Eigen::Index i = 0; i < m_; ++i) {
                const double a = t_(i, enter);
                if (a <= tol || std::max(t_(i, cols_), 0.0) / a > bound) continue;
                if (leave < 0) {
                    leave = i;
                } else if (bland) {
                    if (basis_[i] < basis_[leave]) leave = i;
                } else if (a > t_(leave, enter)) {
                    leave = i;
                }
            }
            const double step = std::max(t_(leave, cols_), 0.0) / t_(leave, enter);
            degenerate = step <= 1e-12 * b_scale_ ? degenerate + 1 : 0;
            pivot(leave, enter);
            std::fill(skipped.begin(), skipped.end(), false);
            if (pivots_ % kReinvertEvery == 0) reinvert();
        }
    }

    void pivot(Eigen::Index row, Eigen::Index col) {
        ++pivots_;
        const double p = t_(row, col);
        t_.row(row) /= p;
        for (Eigen::Index i = 0; i <= m_; ++i) {
            if (i == row) continue;
            const double f = t_(i, col);
            if (f != 0.0) t_.row(i) -= f * t_.row(row);
        }
        t_.col(col).setZero();
        t_(row, col) = 1.0;
        basis_[row] = col;
        fresh_ = false;
        clamp_rhs();
    }

    /// Recomputes the tableau as B^-1 [A | I | b] for the current basis.
    void reinvert() {
        fresh_ = true;
        if (m_ == 0) return;
        Matrix bm(m_, m_);
        for (Eigen::Index i = 0; i < m_; ++i) bm.col(i) = full_.col(basis_[i]);
        const Eigen::PartialPivLU<Matrix> lu(bm);
        Matrix body(m_, cols_ + 1);
        body.leftCols(cols_) = full_;
        body.col(cols_) = b_;
        const Matrix solved = lu.solve(body);
        // A numerically singular basis leaves the pivoted tableau in place.
        if (!solved.allFinite() || (bm * solved.col(cols_) - b_).cwiseAbs().maxCoeff() > 1e-8 * b_scale_) return;
        t_.topRows(m_) = solved;
        for (Eigen::Index i = 0; i < m_; ++i) {
            t_.col(basis_[i]).setZero();
            t_(i, basis_[i]) = 1.0;
        }
        clamp_rhs();
        set_costs(cost_);
    }

private:
    void clamp_rhs() {
        for (Eigen::Index i = 0; i < m_; ++i)
            if (t_(i, cols_) < 0.0 && t_(i, cols_) > -1e-9 * b_scale_) t_(i, cols_) = 0.0;
    }

    Eigen::Index m_;
    Eigen::Index ns_;
    Eigen::Index cols_;
    LpOptions opt_;
    Matrix full_;
    Vector b_;
    Vector cost_;
    double b_scale_ = 1.0;
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> t_;
    std::vector<Eigen::Index> basis_;
    int pivots_ = 0;
    bool fresh_ = false;  // tableau rebuilt since the last pivot
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, const LpOptions& options) {
    const Eigen::Index n = lp.num_variables();
    if (lp.ineq_matrix.rows() != lp.ineq_rhs.size() || (lp.ineq_matrix.rows() > 0 && lp.ineq_matrix.cols() != n) ||
        lp.eq_matrix.rows() != lp.eq_rhs.size() || (lp.eq_matrix.rows() > 0 && lp.eq_matrix.cols() != n) ||
        (lp.lower.size() != 0 && lp.lower.size() != n))
        throw InputError("linear program: inconsistent dimensions");
    const Vector lower = lp.lower.size() == 0 ? Vector::Zero(n) : lp.lower;
    for (Eigen::Index j = 0; j < n; ++j)
        if (lower[j] == kInf || std::isnan(lower[j])) throw InputError("linear program: invalid lower bound");
    if (!lp.objective.allFinite() || !lp.ineq_matrix.allFinite() || !lp.ineq_rhs.allFinite() ||
        !lp.eq_matrix.allFinite() || !lp.eq_rhs.allFinite())
        throw InputError("linear program: non-finite data");

    const StandardForm sf = to_standard_form(lp, lower);
    const Eigen::Index m = sf.a.rows();
    const Eigen::Index cols = sf.a.cols();
    const Reduction red = eliminate_free(sf, options.pivot_tolerance);
    const Eigen::Index mr = static_cast<Eigen::Index>(red.rest_rows.size());
    const Eigen::Index nr = static_cast<Eigen::Index>(red.rest_cols.size());
    Matrix ar(mr, nr);
    Vector br(mr);
    Vector cr(nr);
    for (Eigen::Index i = 0; i < mr; ++i) {
        const Eigen::Index row = red.rest_rows[static_cast<std::size_t>(i)];
        const double flip = red.w(row, cols) < 0.0 ? -1.0 : 1.0;
        for (Eigen::Index k = 0; k < nr; ++k) ar(i, k) = flip * red.w(row, red.rest_cols[static_cast<std::size_t>(k)]);
        br[i] = flip * red.w(row, cols);
    }
    for (Eigen::Index k = 0; k < nr; ++k) cr[k] = red.cost[red.rest_cols[static_cast<std::size_t>(k)]];
    const double b_scale = 1.0 + std::max(m > 0 ? sf.b.cwiseAbs().maxCoeff() : 0.0, mr > 0 ? br.cwiseAbs().maxCoeff() : 0.0);

    LpResult result;
    Tableau tab(ar, br, options);

    // Phase 1: minimise the sum of artificials.
    Vector phase1_cost = Vector::Zero(nr + mr);
    phase1_cost.tail(mr).setOnes();
    tab.set_costs(phase1_cost);
    const auto phase1 = tab.iterate(nr + mr, true);
    if (phase1 != Tableau::Outcome::Optimal) {
        result.pivots = tab.pivots();
        result.message = phase1 == Tableau::Outcome::Stalled ? "phase 1 pivot limit" : "phase 1 lost consistency";
        return result;
    }
    if (tab.objective() > options.feasibility_tolerance * b_scale) {
        result.status = LpStatus::Infeasible;
        result.pivots = tab.pivots();
        return result;
    }
    if (red.free_direction) {
        result.status = LpStatus::Unbounded;
        result.pivots = tab.pivots();
        return result;
    }
    // Drive zero-level artificials out of the basis; rows with no structural entry are redundant.
    std::vector<bool> redundant(static_cast<std::size_t>(mr), false);
    for (Eigen::Index i = 0; i < mr; ++i) {
        if (tab.basis()[static_cast<std::size_t>(i)] < nr) continue;
        Eigen::Index best = -1;
        double best_abs = 1e-9;
        for (Eigen::Index j = 0; j < nr; ++j) {
            if (std::abs(tab.at(i, j)) > best_abs) {
                best_abs = std::abs(tab.at(i, j));
                best = j;
            }
        }
        if (best >= 0) tab.pivot(i, best);
        else redundant[static_cast<std::size_t>(i)] = true;
    }

    // Phase 2.
    Vector phase2_cost = Vector::Zero(nr + mr);
    phase2_cost.head(nr) = cr;
    tab.set_costs(phase2_cost);
    tab.reinvert();
    const auto outcome = tab.iterate(nr, false);
    result.pivots = tab.pivots();
    if (outcome == Tableau::Outcome::Stalled) {
        result.message = "phase 2 pivot limit";
        return result;
    }
    if (outcome == Tableau::Outcome::Unbounded) {
        result.status = LpStatus::Unbounded;
        return result;
    }

    // Refactor the final basis (pivoted free columns plus the simplex basis) from the original
    // data; redundant rows keep their artificial.
    Matrix basis_matrix = Matrix::Zero(m, m);
    Vector basis_cost = Vector::Zero(m);
    std::vector<Eigen::Index> basis_col(static_cast<std::size_t>(m), -1);  // -1 - row for an artificial
    Eigen::Index slot = 0;
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (red.pivot_row[static_cast<std::size_t>(j)] < 0) continue;
        basis_col[static_cast<std::size_t>(slot++)] = j;
    }
    std::vector<Eigen::Index> redundant_rows;
    for (Eigen::Index i = 0; i < mr; ++i) {
        const Eigen::Index col = tab.basis()[static_cast<std::size_t>(i)];
        if (col < nr) {
            basis_col[static_cast<std::size_t>(slot++)] = red.rest_cols[static_cast<std::size_t>(col)];
        } else {
            const Eigen::Index row = red.rest_rows[static_cast<std::size_t>(col - nr)];
            basis_col[static_cast<std::size_t>(slot++)] = -1 - row;
            if (redundant[static_cast<std::size_t>(col - nr)]) redundant_rows.push_back(row);
        }
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        const Eigen::Index col = basis_col[static_cast<std::size_t>(i)];
        if (col >= 0) {
            basis_matrix.col(i) = sf.a.col(col);
            basis_cost[i] = sf.c[col];
        } else {
            basis_matrix(-1 - col, i) = 1.0;
        }
    }
    Vector x = Vector::Zero(cols);
    Vector y = Vector::Zero(m);
    if (m > 0) {
        Eigen::FullPivLU<Matrix> lu(basis_matrix);
        if (!lu.isInvertible()) {
            result.message = "singular final basis";
            return result;
        }
        const Vector xb = lu.solve(sf.b);
        y = lu.transpose().solve(basis_cost);
        for (Eigen::Index i = 0; i < m; ++i) {
            const Eigen::Index col = basis_col[static_cast<std::size_t>(i)];
            if (col >= 0) x[col] = xb[i];
            else if (std::abs(xb[i]) > options.feasibility_tolerance * b_scale) {
                result.message = "artificial variable left at nonzero level";
                return result;
            }
        }
        for (Eigen::Index row : redundant_rows) y[row] = 0.0;
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
        if (sf.free[static_cast<std::size_t>(j)]) continue;
        if (x[j] < -options.feasibility_tolerance * b_scale) {
            result.message = "refactored basis is primal infeasible";
            return result;
        }
        x[j] = std::max(x[j], 0.0);
    }
    Vector reduced = sf.c - sf.a.transpose() * y;

    // Map back to user space.
    result.z.resize(n);
    result.bound_duals = Vector::Zero(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (sf.free[static_cast<std::size_t>(j)]) {
            result.z[j] = x[j];
        } else {
            result.z[j] = lower[j] + x[j];
            result.bound_duals[j] = reduced[j];
        }
    }
    const Eigen::Index mi = sf.num_ineq;
    result.ineq_duals = -y.head(mi);
    result.eq_duals = -y.tail(m - mi);

    // Certificate check in user space (minimisation form).
    const double sign = lp.sense == Sense::Minimize ? 1.0 : -1.0;
    const Vector c_min = sign * lp.objective;
    double primal_res = 0.0;
    double slack_res = 0.0;
    double data_scale = b_scale;
    Vector ineq_slack;
    if (mi > 0) {
        ineq_slack = lp.ineq_rhs - lp.ineq_matrix * result.z;
        primal_res = std::max(primal_res, (-ineq_slack).cwiseMax(0.0).maxCoeff());
        slack_res = std::max(slack_res, result.ineq_duals.cwiseProduct(ineq_slack).cwiseAbs().maxCoeff());
    }
    if (m - mi > 0) primal_res = std::max(primal_res, (lp.eq_matrix * result.z - lp.eq_rhs).cwiseAbs().maxCoeff());
    double dual_value = 0.0;
    double dual_infeas = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (sf.free[static_cast<std::size_t>(j)]) continue;
        primal_res = std::max(primal_res, lower[j] - result.z[j]);
        slack_res = std::max(slack_res, std::abs(result.bound_duals[j] * (result.z[j] - lower[j])));
        dual_infeas = std::max(dual_infeas, -result.bound_duals[j]);
        dual_value += result.bound_duals[j] * lower[j];
    }
    if (mi > 0) {
        dual_value -= result.ineq_duals.dot(lp.ineq_rhs);
        dual_infeas = std::max(dual_infeas, (-result.ineq_duals).cwiseMax(0.0).maxCoeff());
    }
    if (m - mi > 0) dual_value -= result.eq_duals.dot(lp.eq_rhs);
    Vector stationarity = c_min - result.bound_duals;
    if (mi > 0) stationarity += lp.ineq_matrix.transpose() * result.ineq_duals;
    if (m - mi > 0) stationarity += lp.eq_matrix.transpose() * result.eq_duals;
    const double c_scale = 1.0 + (n > 0 ? c_min.cwiseAbs().maxCoeff() : 0.0);
    dual_infeas = std::max(dual_infeas, n > 0 ? stationarity.cwiseAbs().maxCoeff() : 0.0);

    const double primal_value = c_min.dot(result.z);
    result.value = sign * primal_value;
    result.primal_residual = primal_res;
    result.slackness_residual = slack_res;
    result.relative_gap = std::abs(primal_value - dual_value) / (1.0 + std::abs(primal_value));

    data_scale = std::max(data_scale, c_scale);
    if (primal_res > 1e-9 * b_scale || slack_res > 1e-8 * data_scale * b_scale ||
        result.relative_gap > 1e-8 * data_scale || dual_infeas > 1e-8 * c_scale) {
        result.message = "certificate check failed";
        return result;
    }
    result.status = LpStatus::Optimal;
    return result;
}

}  // namespace tcdl
