#include "cardmv/qp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "cardmv/errors.hpp"

namespace cardmv::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void validate_problem(const QpProblem& p) {
    const Eigen::Index n = p.q.size();
    require(n >= 0, "q missing");
    require(p.P.rows() == n && p.P.cols() == n, "P must be n x n");
    require(p.lb.size() == n && p.ub.size() == n, "bounds must have length n");
    require(p.P.allFinite(), "P contains non-finite entries");
    require(p.q.allFinite(), "q contains non-finite entries");
    if (n > 0) {
        require((p.P - p.P.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                "P must be symmetric within 1e-12");
    }
    const Eigen::Index me = p.b_eq.size();
    require((p.A_eq.rows() == me) && (me == 0 || p.A_eq.cols() == n),
            "equality system dimensions inconsistent");
    const Eigen::Index mi = p.h_in.size();
    require((p.A_in.rows() == mi) && (mi == 0 || p.A_in.cols() == n),
            "inequality system dimensions inconsistent");
    require(me == 0 || (p.A_eq.allFinite() && p.b_eq.allFinite()),
            "equality system contains non-finite entries");
    require(mi == 0 || (p.A_in.allFinite() && p.h_in.allFinite()),
            "inequality system contains non-finite entries");
    for (Eigen::Index j = 0; j < n; ++j) {
        require(!(p.lb[j] > p.ub[j]), "lower bound exceeds upper bound at variable " +
                                          std::to_string(j));
        require(p.lb[j] < kInf && p.ub[j] > -kInf, "bound has the wrong sign of infinity");
        require(!std::isnan(p.lb[j]) && !std::isnan(p.ub[j]), "bounds contain NaN");
    }
}

// One inequality row of the reduced problem, kept sparse. kind 0 = original
// A_in row, kind 1 = lower bound of variable `origin`, kind 2 = upper bound.
struct InRow {
    std::vector<std::pair<int, double>> nz;
    double rhs = 0.0;
    int kind = 0;
    int origin = 0;
};

struct Reduced {
    int n = 0;
    std::vector<int> orig_of;   // reduced var -> original var
    std::vector<int> red_of;    // original var -> reduced var or -1
    Eigen::VectorXd fixed;      // original-sized, value where red_of == -1
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd A;          // reduced equality rows, dense
    Eigen::VectorXd b;
    std::vector<int> eq_of;     // reduced eq row -> original eq row
    std::vector<InRow> rows;    // all inequalities including bounds
    bool infeasible = false;
    std::string message;
};

Reduced presolve(const QpProblem& p, double feas_tol) {
    Reduced r;
    const int n = static_cast<int>(p.q.size());
    r.red_of.assign(n, -1);
    r.fixed = Eigen::VectorXd::Zero(n);
    for (int j = 0; j < n; ++j) {
        if (p.lb[j] >= p.ub[j]) {
            r.fixed[j] = p.lb[j];
        } else {
            r.red_of[j] = static_cast<int>(r.orig_of.size());
            r.orig_of.push_back(j);
        }
    }
    r.n = static_cast<int>(r.orig_of.size());

    r.P.setZero(r.n, r.n);
    r.q.setZero(r.n);
    for (int jr = 0; jr < r.n; ++jr) {
        const int j = r.orig_of[jr];
        r.q[jr] = p.q[j];
        for (int ir = 0; ir < r.n; ++ir) r.P(ir, jr) = p.P(r.orig_of[ir], j);
        for (int i = 0; i < n; ++i) {
            if (r.red_of[i] < 0 && r.fixed[i] != 0.0) r.q[jr] += p.P(j, i) * r.fixed[i];
        }
    }

    const int me = static_cast<int>(p.b_eq.size());
    std::vector<Eigen::VectorXd> eq_rows;
    for (int i = 0; i < me; ++i) {
        Eigen::VectorXd row(r.n);
        bool empty = true;
        double rhs = p.b_eq[i];
        for (int j = 0; j < n; ++j) {
            const double c = p.A_eq(i, j);
            if (r.red_of[j] >= 0) {
                row[r.red_of[j]] = c;
                if (c != 0.0) empty = false;
            } else {
                rhs -= c * r.fixed[j];
            }
        }
        if (empty) {
            if (std::abs(rhs) > feas_tol) {
                r.infeasible = true;
                std::ostringstream msg;
                msg << "equality row " << i
                    << " is fixed by the bounds and violated by " << std::abs(rhs);
                r.message = msg.str();
                return r;
            }
            continue;
        }
        eq_rows.push_back(row);
        r.b.conservativeResize(r.b.size() + 1);
        r.b[r.b.size() - 1] = rhs;
        r.eq_of.push_back(i);
    }
    r.A.setZero(static_cast<Eigen::Index>(eq_rows.size()), r.n);
    for (size_t i = 0; i < eq_rows.size(); ++i) r.A.row(static_cast<Eigen::Index>(i)) = eq_rows[i];

    const int mi = static_cast<int>(p.h_in.size());
    for (int i = 0; i < mi; ++i) {
        InRow row;
        row.kind = 0;
        row.origin = i;
        row.rhs = p.h_in[i];
        bool empty = true;
        for (int j = 0; j < n; ++j) {
            const double c = p.A_in(i, j);
            if (c == 0.0) continue;
            if (r.red_of[j] >= 0) {
                row.nz.emplace_back(r.red_of[j], c);
                empty = false;
            } else {
                row.rhs -= c * r.fixed[j];
            }
        }
        if (empty) {
            if (row.rhs < -feas_tol) {
                r.infeasible = true;
                std::ostringstream msg;
                msg << "inequality row " << i
                    << " is fixed by the bounds and violated by " << -row.rhs;
                r.message = msg.str();
                return r;
            }
            continue;
        }
        r.rows.push_back(std::move(row));
    }

    for (int jr = 0; jr < r.n; ++jr) {
        const int j = r.orig_of[jr];
        if (p.lb[j] > -kInf) {
            InRow row;
            row.kind = 1;
            row.origin = j;
            row.rhs = -p.lb[j];
            row.nz.emplace_back(jr, -1.0);
            r.rows.push_back(std::move(row));
        }
        if (p.ub[j] < kInf) {
            InRow row;
            row.kind = 2;
            row.origin = j;
            row.rhs = p.ub[j];
            row.nz.emplace_back(jr, 1.0);
            r.rows.push_back(std::move(row));
        }
    }
    return r;
}

double row_dot(const InRow& row, const Eigen::VectorXd& y) {
    double v = 0.0;
    for (const auto& [j, c] : row.nz) v += c * y[j];
    return v;
}

// Assembles the original-space solution and duals from a reduced primal/dual
// point, reconstructing multipliers of eliminated (fixed) variables from the
// stationarity gradient so that the full KKT system closes.
QpSolution assemble(const QpProblem& p, const Reduced& red, const Eigen::VectorXd& y_red,
                    const Eigen::VectorXd& nu_red, const Eigen::VectorXd& lam_red) {
    const int n = static_cast<int>(p.q.size());
    QpSolution sol;
    sol.y = red.fixed;
    for (int jr = 0; jr < red.n; ++jr) sol.y[red.orig_of[jr]] = y_red[jr];

    sol.duals.eq = Eigen::VectorXd::Zero(p.b_eq.size());
    for (size_t i = 0; i < red.eq_of.size(); ++i)
        sol.duals.eq[red.eq_of[i]] = nu_red[static_cast<Eigen::Index>(i)];
    sol.duals.in = Eigen::VectorXd::Zero(p.h_in.size());
    sol.duals.lb = Eigen::VectorXd::Zero(n);
    sol.duals.ub = Eigen::VectorXd::Zero(n);
    for (size_t i = 0; i < red.rows.size(); ++i) {
        const InRow& row = red.rows[i];
        const double lam = lam_red[static_cast<Eigen::Index>(i)];
        if (row.kind == 0)
            sol.duals.in[row.origin] = lam;
        else if (row.kind == 1)
            sol.duals.lb[row.origin] = lam;
        else
            sol.duals.ub[row.origin] = lam;
    }

    // Multipliers of eliminated variables: the stationarity row must close
    // exactly, and both bound slacks are zero, so complementarity is free.
    Eigen::VectorXd grad = p.P * sol.y + p.q;
    if (p.b_eq.size() > 0) grad += p.A_eq.transpose() * sol.duals.eq;
    if (p.h_in.size() > 0) grad += p.A_in.transpose() * sol.duals.in;
    for (int j = 0; j < n; ++j) {
        if (red.red_of[j] >= 0) continue;
        const double g = grad[j];
        sol.duals.lb[j] = std::max(g, 0.0);
        sol.duals.ub[j] = std::max(-g, 0.0);
    }

    sol.objective = 0.5 * sol.y.dot(p.P * sol.y) + p.q.dot(sol.y);
    return sol;
}

struct IpmOutcome {
    Eigen::VectorXd y, nu, lam;
    int iterations = 0;
    bool converged = false; // residuals at or below the contract tolerance
};

// Residuals of a reduced-space iterate, matching the public definitions.
struct RedResiduals {
    double primal = 0.0, dual = 0.0, comp = 0.0;
    double max() const { return std::max({primal, dual, comp}); }
};

RedResiduals reduced_residuals(const Reduced& red, const Eigen::VectorXd& y,
                               const Eigen::VectorXd& nu, const Eigen::VectorXd& lam) {
    RedResiduals rr;
    Eigen::VectorXd rd = red.P * y + red.q;
    if (red.A.rows() > 0) {
        rd += red.A.transpose() * nu;
        rr.primal = std::max(rr.primal, (red.A * y - red.b).cwiseAbs().maxCoeff());
    }
    for (size_t i = 0; i < red.rows.size(); ++i) {
        const InRow& row = red.rows[i];
        const double lam_i = lam[static_cast<Eigen::Index>(i)];
        const double slack = row.rhs - row_dot(row, y);
        rr.primal = std::max(rr.primal, -slack);
        rr.comp = std::max(rr.comp, std::abs(lam_i * slack));
        rr.dual = std::max(rr.dual, -lam_i);
        for (const auto& [j, c] : row.nz) rd[j] += c * lam_i;
    }
    if (y.size() > 0) rr.dual = std::max(rr.dual, rd.cwiseAbs().maxCoeff());
    rr.primal = std::max(rr.primal, 0.0);
    return rr;
}

// Active-set refinement: re-solves the KKT system of the equality
// constraints plus the inequalities in `active`, with tiny regularization
// and iterative refinement, then runs a primal-dual active-set loop (add
// violated rows, drop rows with negative multipliers). Active bound rows
// fix their variable and are eliminated instead of carried as dual rows,
// which keeps the KKT system small. The best candidate over all passes is
// kept. Returns true when the refined point was adopted. `accept_below`
// admits the refined point even when the incoming iterate already had
// smaller residuals: the refined point is canonical (minimum-norm on any
// flat optimal face), which keeps repeated solves of one problem
// reproducible under different warm starts. The loop ends early once a
// candidate reaches `stop_below`.
bool polish(const Reduced& red, std::vector<int> active, Eigen::VectorXd& y,
            Eigen::VectorXd& nu, Eigen::VectorXd& lam, double accept_below,
            double stop_below) {
    const int n = red.n;
    const int me = static_cast<int>(red.A.rows());
    const int m = static_cast<int>(red.rows.size());
    const double delta = 1e-11 * std::max(1.0, red.P.cwiseAbs().maxCoeff());

    Eigen::VectorXd y_best, nu_best, lam_best;
    double best_max = std::numeric_limits<double>::infinity();
    std::vector<char> in_active(static_cast<size_t>(m), 0);
    for (int i : active) in_active[static_cast<size_t>(i)] = 1;

    for (int pass = 0; pass < 25; ++pass) {
        // partition: active bound rows pin variables, the rest join the KKT
        std::vector<double> fix_value(static_cast<size_t>(n));
        std::vector<int> fix_row(static_cast<size_t>(n), -1);
        std::vector<int> general;
        for (int i : active) {
            const InRow& row = red.rows[static_cast<size_t>(i)];
            if (row.kind == 0 || row.nz.size() != 1) {
                general.push_back(i);
                continue;
            }
            const auto& [j, c] = row.nz[0];
            const double value = row.rhs / c; // -y <= -lb pins lb, y <= ub pins ub
            if (fix_row[static_cast<size_t>(j)] >= 0) continue; // keep first pin
            fix_row[static_cast<size_t>(j)] = i;
            fix_value[static_cast<size_t>(j)] = value;
        }

        std::vector<int> free_of; // dense index -> variable
        std::vector<int> pos(static_cast<size_t>(n), -1);
        for (int j = 0; j < n; ++j) {
            if (fix_row[static_cast<size_t>(j)] < 0) {
                pos[static_cast<size_t>(j)] = static_cast<int>(free_of.size());
                free_of.push_back(j);
            }
        }
        const int nf = static_cast<int>(free_of.size());

        // equality and general rows restricted to the free variables; rows
        // that lost every variable drop out (their violation, if any, shows
        // up in the candidate's residuals)
        std::vector<int> eq_keep;
        for (int i = 0; i < me; ++i) {
            bool any = false;
            for (int j = 0; j < n && !any; ++j)
                any = pos[static_cast<size_t>(j)] >= 0 && red.A(i, j) != 0.0;
            if (any) eq_keep.push_back(i);
        }
        std::vector<int> gen_keep;
        for (int i : general) {
            const InRow& row = red.rows[static_cast<size_t>(i)];
            bool any = false;
            for (const auto& [j, c] : row.nz)
                if (pos[static_cast<size_t>(j)] >= 0 && c != 0.0) any = true;
            if (any) gen_keep.push_back(i);
        }

        const int mek = static_cast<int>(eq_keep.size());
        const int mag = static_cast<int>(gen_keep.size());
        const int dim = nf + mek + mag;
        Eigen::VectorXd y_new(n), nu_new = Eigen::VectorXd::Zero(me);
        Eigen::VectorXd lam_new = Eigen::VectorXd::Zero(m);
        std::vector<double> raw_general(static_cast<size_t>(m), 0.0);
        for (int j = 0; j < n; ++j)
            y_new[j] = fix_row[static_cast<size_t>(j)] >= 0 ? fix_value[static_cast<size_t>(j)] : 0.0;

        if (dim > 0 && nf > 0) {
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
            Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
            for (int a = 0; a < nf; ++a) {
                const int ja = free_of[static_cast<size_t>(a)];
                rhs[a] = -red.q[ja];
                for (int b = 0; b < nf; ++b)
                    K(a, b) = red.P(ja, free_of[static_cast<size_t>(b)]);
                for (int j = 0; j < n; ++j)
                    if (fix_row[static_cast<size_t>(j)] >= 0)
                        rhs[a] -= red.P(ja, j) * fix_value[static_cast<size_t>(j)];
            }
            for (int k = 0; k < mek; ++k) {
                const int i = eq_keep[static_cast<size_t>(k)];
                double b = red.b[i];
                for (int j = 0; j < n; ++j) {
                    const double c = red.A(i, j);
                    if (c == 0.0) continue;
                    const int a = pos[static_cast<size_t>(j)];
                    if (a >= 0) {
                        K(nf + k, a) = c;
                        K(a, nf + k) = c;
                    } else {
                        b -= c * fix_value[static_cast<size_t>(j)];
                    }
                }
                rhs[nf + k] = b;
            }
            for (int k = 0; k < mag; ++k) {
                const InRow& row = red.rows[static_cast<size_t>(gen_keep[static_cast<size_t>(k)])];
                double b = row.rhs;
                for (const auto& [j, c] : row.nz) {
                    const int a = pos[static_cast<size_t>(j)];
                    if (a >= 0) {
                        K(nf + mek + k, a) = c;
                        K(a, nf + mek + k) = c;
                    } else {
                        b -= c * fix_value[static_cast<size_t>(j)];
                    }
                }
                rhs[nf + mek + k] = b;
            }

            // Proximal regularization makes the system nonsingular even with
            // dependent rows or a singular Hessian block; the regularized
            // solution selects the minimum-norm point of the optimal face,
            // keeping repeated solves of identical problems bitwise
            // reproducible. Refinement therefore targets the regularized
            // matrix.
            Eigen::MatrixXd Kreg = K;
            Kreg.topLeftCorner(nf, nf).diagonal().array() += delta;
            Kreg.bottomRightCorner(mek + mag, mek + mag).diagonal().array() -= delta;
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(Kreg);
            Eigen::VectorXd sol = lu.solve(rhs);
            for (int refine = 0; refine < 2; ++refine) {
                const Eigen::VectorXd resid = rhs - Kreg * sol;
                sol += lu.solve(resid);
            }
            if (!sol.allFinite()) break;

            for (int a = 0; a < nf; ++a) y_new[free_of[static_cast<size_t>(a)]] = sol[a];
            for (int k = 0; k < mek; ++k) nu_new[eq_keep[static_cast<size_t>(k)]] = sol[nf + k];
            for (int k = 0; k < mag; ++k) {
                raw_general[static_cast<size_t>(gen_keep[static_cast<size_t>(k)])] =
                    sol[nf + mek + k];
                lam_new[gen_keep[static_cast<size_t>(k)]] = std::max(sol[nf + mek + k], 0.0);
            }
        }

        // bound multipliers of pinned variables close their stationarity rows
        Eigen::VectorXd grad = red.P * y_new + red.q;
        if (me > 0) grad += red.A.transpose() * nu_new;
        for (int k = 0; k < mag; ++k) {
            const InRow& row = red.rows[static_cast<size_t>(gen_keep[static_cast<size_t>(k)])];
            const double lam_k = lam_new[gen_keep[static_cast<size_t>(k)]];
            for (const auto& [j, c] : row.nz) grad[j] += c * lam_k;
        }
        std::vector<double> bound_dual(static_cast<size_t>(n), 0.0);
        for (int j = 0; j < n; ++j) {
            const int i = fix_row[static_cast<size_t>(j)];
            if (i < 0) continue;
            const InRow& row = red.rows[static_cast<size_t>(i)];
            // row is c*y <= rhs with c = +-1; lambda = -grad_j / c closes it
            const double lam_j = -grad[j] / row.nz[0].second;
            bound_dual[static_cast<size_t>(j)] = lam_j;
            lam_new[i] = std::max(lam_j, 0.0);
        }

        const RedResiduals rr = reduced_residuals(red, y_new, nu_new, lam_new);
#ifdef CARDMV_QP_DEBUG
        std::fprintf(stderr, "  polish pass=%d nf=%d mag=%d rr=(%.2e %.2e %.2e)\n", pass, nf,
                     mag, rr.primal, rr.dual, rr.comp);
#endif
        if (rr.max() < best_max) {
            best_max = rr.max();
            y_best = y_new;
            nu_best = nu_new;
            lam_best = lam_new;
        }
        if (best_max <= stop_below) break;

        bool changed = false;
        for (int i = 0; i < m; ++i) {
            if (in_active[static_cast<size_t>(i)]) continue;
            const double slack = red.rows[static_cast<size_t>(i)].rhs -
                                 row_dot(red.rows[static_cast<size_t>(i)], y_new);
            if (slack < -1e-11 * (1.0 + std::abs(red.rows[static_cast<size_t>(i)].rhs))) {
                active.push_back(i);
                in_active[static_cast<size_t>(i)] = 1;
                changed = true;
            }
        }
        std::vector<int> kept;
        kept.reserve(active.size());
        for (int i : active) {
            bool drop = false;
            const InRow& row = red.rows[static_cast<size_t>(i)];
            if (row.kind != 0 && row.nz.size() == 1) {
                const int j = row.nz[0].first;
                drop = fix_row[static_cast<size_t>(j)] == i &&
                       bound_dual[static_cast<size_t>(j)] < -1e-10;
            } else {
                drop = raw_general[static_cast<size_t>(i)] < -1e-10;
            }
            if (drop) {
                in_active[static_cast<size_t>(i)] = 0;
                changed = true;
            } else {
                kept.push_back(i);
            }
        }
        active = std::move(kept);
        if (!changed) break;
    }
    if (!y_best.size()) return false;

    const RedResiduals before = reduced_residuals(red, y, nu, lam);
#ifdef CARDMV_QP_DEBUG
    std::fprintf(stderr, "polish: before=(%.2e %.2e %.2e) after_max=%.2e\n", before.primal,
                 before.dual, before.comp, best_max);
#endif
    if (best_max < before.max() || best_max <= accept_below) {
        y = std::move(y_best);
        nu = std::move(nu_best);
        lam = std::move(lam_best);
        return true;
    }
    return false;
}


// Re-estimates the multipliers at a fixed primal point: least-squares fit
// of the stationarity condition over the active rows, minimum-norm via a
// complete orthogonal decomposition. Rescues iterates whose primal part is
// excellent but whose duals drifted along a degenerate ray (linearly
// dependent active constraints). Adopts the fit only when it helps.
bool repair_duals(const Reduced& red, const Eigen::VectorXd& y, Eigen::VectorXd& nu,
                  Eigen::VectorXd& lam) {
    const int n = red.n;
    const int me = static_cast<int>(red.A.rows());
    std::vector<int> active;
    for (size_t i = 0; i < red.rows.size(); ++i) {
        const double slack = red.rows[i].rhs - row_dot(red.rows[i], y);
        if (slack <= std::max(lam[static_cast<Eigen::Index>(i)], 1e-9))
            active.push_back(static_cast<int>(i));
    }
    if (me + static_cast<int>(active.size()) == 0) return false;

    const Eigen::VectorXd g = red.P * y + red.q;
    Eigen::VectorXd nu_new, lam_new;
    // nonnegativity by column pruning: drop active rows whose fitted
    // multiplier is negative and refit
    for (int prune_pass = 0; prune_pass < 5; ++prune_pass) {
        const int ma = static_cast<int>(active.size());
        Eigen::MatrixXd M(n, me + ma);
        if (me > 0) M.leftCols(me) = red.A.transpose();
        for (int k = 0; k < ma; ++k) {
            M.col(me + k).setZero();
            for (const auto& [j, c] : red.rows[static_cast<size_t>(active[k])].nz)
                M(j, me + k) = c;
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
        const Eigen::VectorXd w = cod.solve(-g);

        std::vector<int> kept;
        for (int k = 0; k < ma; ++k) {
            if (w[me + k] >= -1e-10) kept.push_back(active[static_cast<size_t>(k)]);
        }
        nu_new = w.head(me);
        lam_new = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(red.rows.size()));
        for (int k = 0; k < ma; ++k)
            lam_new[active[static_cast<size_t>(k)]] = std::max(w[me + k], 0.0);
        if (static_cast<int>(kept.size()) == ma) break;
        active = std::move(kept);
    }

    const RedResiduals before = reduced_residuals(red, y, nu, lam);
    const RedResiduals after = reduced_residuals(red, y, nu_new, lam_new);
#ifdef CARDMV_QP_DEBUG
    std::fprintf(stderr, "repair_duals: ma=%zu before=(%.2e %.2e %.2e) after=(%.2e %.2e %.2e)\n",
                 active.size(), before.primal, before.dual, before.comp, after.primal,
                 after.dual, after.comp);
#endif
    if (after.max() < before.max()) {
        nu = std::move(nu_new);
        lam = std::move(lam_new);
        return true;
    }
    return false;
}

// Mehrotra predictor-corrector on the reduced problem. Inequalities (with
// bounds folded in) are handled through slack variables; the Newton system
// is condensed to H = P + G' W G and the equality block is eliminated with
// a Schur complement.
IpmOutcome run_ipm(const Reduced& red, const QpConfig& cfg,
                   const std::optional<Eigen::VectorXd>& warm_red) {
    const int n = red.n;
    const int me = static_cast<int>(red.A.rows());
    const int m = static_cast<int>(red.rows.size());

    // Least-squares starting point: equality-feasible with uniform
    // complementarity products. Starting anywhere cruder lets the first
    // Mehrotra steps blow the duals up on degenerate instances.
    Eigen::VectorXd y(n);
    Eigen::VectorXd nu = Eigen::VectorXd::Zero(me);
    {
        Eigen::MatrixXd H0 = warm_red ? Eigen::MatrixXd(Eigen::MatrixXd::Identity(n, n))
                                      : Eigen::MatrixXd(red.P);
        if (!warm_red) H0.diagonal().array() += 1.0;
        const Eigen::VectorXd g0 = warm_red ? Eigen::VectorXd(-*warm_red) : red.q;
        Eigen::LLT<Eigen::MatrixXd> llt0(H0);
        if (me > 0 && llt0.info() == Eigen::Success) {
            const Eigen::MatrixXd HiAt0 = llt0.solve(red.A.transpose());
            Eigen::MatrixXd S0 = red.A * HiAt0;
            S0.diagonal().array() += 1e-12;
            const Eigen::VectorXd nu0 =
                S0.llt().solve(HiAt0.transpose() * (-g0) - red.b);
            y = llt0.solve(-g0 - red.A.transpose() * nu0);
        } else if (llt0.info() == Eigen::Success) {
            y = llt0.solve(-g0);
        } else {
            y = warm_red ? *warm_red : Eigen::VectorXd::Zero(n);
        }
        if (!y.allFinite()) y.setZero();
    }
    Eigen::VectorXd s(m), lam(m);
    {
        Eigen::VectorXd st(m);
        for (int i = 0; i < m; ++i) st[i] = red.rows[i].rhs - row_dot(red.rows[i], y);
        double worst = 0.0;
        for (int i = 0; i < m; ++i) worst = std::max(worst, -st[i]);
        const double pad =
            0.1 * std::clamp(st.cwiseAbs().maxCoeff(), 1.0, 10.0) + 1.5 * worst;
        const double mu0 =
            std::clamp((red.P * y + red.q).cwiseAbs().maxCoeff(), 1e-3, 1e6);
        for (int i = 0; i < m; ++i) {
            s[i] = st[i] + pad;
            lam[i] = mu0 / s[i];
        }
    }

    const double tight = std::max(cfg.tol * 1e-2, 5e-14);
    const int iter_cap = std::max(1, std::min(cfg.max_iter, 500));

    IpmOutcome best;
    best.y = y;
    best.nu = nu;
    best.lam = lam;
    double best_max = reduced_residuals(red, y, nu, lam).max();
    int best_iter = 0;

    Eigen::MatrixXd H(n, n);
    Eigen::VectorXd rd(n), rp(me), rg(m), rc(m);
    // Static proximal regularization. It bounds the otherwise-unbounded
    // optimal faces (e.g. simultaneous buy/sell churn at zero cost) so the
    // central path stays finite; the polish step solves the unregularized
    // KKT system afterwards, so certified residuals do not inherit it.
    double delta_p = 1e-9 * std::max(1.0, red.P.cwiseAbs().maxCoeff());

    int iter = 0;
    for (; iter < iter_cap; ++iter) {
        const RedResiduals rr = reduced_residuals(red, y, nu, lam);
#ifdef CARDMV_QP_DEBUG
        std::fprintf(stderr, "ipm it=%2d res=(%.2e %.2e %.2e) mu=%.2e lam_max=%.1e\n", iter,
                     rr.primal, rr.dual, rr.comp, m > 0 ? s.dot(lam) / m : 0.0,
                     m > 0 ? lam.maxCoeff() : 0.0);
#endif
        if (rr.max() < best_max) {
            best_max = rr.max();
            best.y = y;
            best.nu = nu;
            best.lam = lam;
            best_iter = iter;
        }
        if (rr.primal <= tight && rr.dual <= tight && rr.comp <= tight) break;
        // give up sooner when the best iterate is already certified
        const int patience = best_max <= cfg.tol ? 5 : 15;
        if (iter - best_iter > patience) break; // stalled

        // residuals of the slack formulation
        rd = red.P * y + red.q;
        if (me > 0) rd += red.A.transpose() * nu;
        for (int i = 0; i < m; ++i) {
            const InRow& row = red.rows[i];
            for (const auto& [j, c] : row.nz) rd[j] += c * lam[i];
            rg[i] = row_dot(row, y) + s[i] - row.rhs;
        }
        if (me > 0) rp = red.A * y - red.b;
        const double mu = m > 0 ? s.dot(lam) / m : 0.0;

        // H = P + delta I + G' diag(lam/s) G, lower triangle only
        H.triangularView<Eigen::Lower>() = red.P;
        H.diagonal().array() += delta_p;
        for (int i = 0; i < m; ++i) {
            const double w = lam[i] / s[i];
            const InRow& row = red.rows[i];
            for (size_t aa = 0; aa < row.nz.size(); ++aa) {
                const auto& [ja, ca] = row.nz[aa];
                for (size_t bb = 0; bb <= aa; ++bb) {
                    const auto& [jb, cb] = row.nz[bb];
                    if (ja >= jb)
                        H(ja, jb) += w * ca * cb;
                    else
                        H(jb, ja) += w * ca * cb;
                }
            }
        }

        Eigen::LLT<Eigen::MatrixXd> llt(H.selfadjointView<Eigen::Lower>());
        int bumps = 0;
        while (llt.info() != Eigen::Success && bumps < 6) {
            delta_p *= 100.0;
            H.diagonal().array() += delta_p;
            llt.compute(H.selfadjointView<Eigen::Lower>());
            ++bumps;
        }
        if (llt.info() != Eigen::Success) break;

        Eigen::MatrixXd AHiAt;
        Eigen::MatrixXd HiAt;
        Eigen::LLT<Eigen::MatrixXd> llt_s;
        if (me > 0) {
            HiAt = llt.solve(red.A.transpose());
            AHiAt = red.A * HiAt;
            AHiAt.diagonal().array() += 1e-12;
            llt_s.compute(AHiAt);
            if (llt_s.info() != Eigen::Success) break;
        }

        auto kkt_solve = [&](const Eigen::VectorXd& f, const Eigen::VectorXd& g,
                             Eigen::VectorXd& dy, Eigen::VectorXd& dnu) {
            if (me > 0) {
                dnu = llt_s.solve(HiAt.transpose() * f - g);
                dy = llt.solve(f - red.A.transpose() * dnu);
            } else {
                dnu.resize(0);
                dy = llt.solve(f);
            }
        };

        auto step_lengths = [&](const Eigen::VectorXd& ds, const Eigen::VectorXd& dlam) {
            double alpha = 1.0;
            for (int i = 0; i < m; ++i) {
                if (ds[i] < 0.0) alpha = std::min(alpha, -s[i] / ds[i]);
                if (dlam[i] < 0.0) alpha = std::min(alpha, -lam[i] / dlam[i]);
            }
            return alpha;
        };

        // predictor
        for (int i = 0; i < m; ++i) rc[i] = s[i] * lam[i];
        Eigen::VectorXd f = -rd;
        for (int i = 0; i < m; ++i) {
            const double coef = (rc[i] - lam[i] * rg[i]) / s[i];
            for (const auto& [j, c] : red.rows[i].nz) f[j] += c * coef;
        }
        Eigen::VectorXd dy, dnu;
        kkt_solve(f, me > 0 ? Eigen::VectorXd(-rp) : Eigen::VectorXd(), dy, dnu);
        Eigen::VectorXd ds(m), dlam(m);
        for (int i = 0; i < m; ++i) {
            ds[i] = -rg[i] - row_dot(red.rows[i], dy);
            dlam[i] = -(rc[i] + lam[i] * ds[i]) / s[i];
        }

        double sigma = 0.0;
        if (m > 0 && mu > 0.0) {
            const double alpha_aff = step_lengths(ds, dlam);
            double mu_aff = 0.0;
            for (int i = 0; i < m; ++i)
                mu_aff += (s[i] + alpha_aff * ds[i]) * (lam[i] + alpha_aff * dlam[i]);
            mu_aff /= m;
            sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
        }

        // corrector
        for (int i = 0; i < m; ++i) rc[i] = s[i] * lam[i] - sigma * mu + ds[i] * dlam[i];
        f = -rd;
        for (int i = 0; i < m; ++i) {
            const double coef = (rc[i] - lam[i] * rg[i]) / s[i];
            for (const auto& [j, c] : red.rows[i].nz) f[j] += c * coef;
        }
        kkt_solve(f, me > 0 ? Eigen::VectorXd(-rp) : Eigen::VectorXd(), dy, dnu);
        for (int i = 0; i < m; ++i) {
            ds[i] = -rg[i] - row_dot(red.rows[i], dy);
            dlam[i] = -(rc[i] + lam[i] * ds[i]) / s[i];
        }

        const double alpha = std::min(1.0, 0.99 * step_lengths(ds, dlam));
        y += alpha * dy;
        if (me > 0) nu += alpha * dnu;
        s += alpha * ds;
        lam += alpha * dlam;
    }

    const RedResiduals rr = reduced_residuals(red, y, nu, lam);
    if (rr.max() < best_max) {
        best_max = rr.max();
        best.y = y;
        best.nu = nu;
        best.lam = lam;
    }
    best.iterations = iter;

    // Rescue path for iterates that stalled above the tolerance: active-set
    // refinement with the complementarity-ratio set first, then wider nets
    // joining slack thresholds at several scales (a stall can leave a
    // barely active row unresolved). Over-inclusion is repaired by the
    // negativity pruning inside polish, and a wrong face never survives the
    // keep-the-best residual comparison. Cleanly converged iterates skip
    // all of this.
    if (best_max > 0.5 * cfg.tol) {
        {
            std::vector<int> active;
            for (size_t i = 0; i < red.rows.size(); ++i) {
                const double slack = red.rows[i].rhs - row_dot(red.rows[i], best.y);
                if (slack <= best.lam[static_cast<Eigen::Index>(i)])
                    active.push_back(static_cast<int>(i));
            }
            polish(red, active, best.y, best.nu, best.lam, 0.1 * cfg.tol, 0.01 * cfg.tol);
        }
        for (const double eps : {1e-9, 1e-7, 1e-5}) {
            if (reduced_residuals(red, best.y, best.nu, best.lam).max() <= 0.1 * cfg.tol)
                break;
            std::vector<int> active;
            for (size_t i = 0; i < red.rows.size(); ++i) {
                const double slack = red.rows[i].rhs - row_dot(red.rows[i], best.y);
                if (slack <= best.lam[static_cast<Eigen::Index>(i)] ||
                    slack <= eps * (1.0 + std::abs(red.rows[i].rhs)))
                    active.push_back(static_cast<int>(i));
            }
            polish(red, active, best.y, best.nu, best.lam, 0.0, 0.01 * cfg.tol);
        }
        repair_duals(red, best.y, best.nu, best.lam);
    }
    best.converged = reduced_residuals(red, best.y, best.nu, best.lam).max() <= cfg.tol;
    return best;
}

// Direct KKT solve for problems without inequalities (after presolve).
IpmOutcome solve_equality_only(const Reduced& red) {
    const int n = red.n;
    const int me = static_cast<int>(red.A.rows());
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(n + me, n + me);
    K.topLeftCorner(n, n) = red.P;
    if (me > 0) {
        K.block(n, 0, me, n) = red.A;
        K.block(0, n, n, me) = red.A.transpose();
    }
    Eigen::VectorXd rhs(n + me);
    rhs.head(n) = -red.q;
    if (me > 0) rhs.segment(n, me) = red.b;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(K);
    Eigen::VectorXd sol = qr.solve(rhs);

    IpmOutcome out;
    out.y = sol.head(n);
    out.nu = sol.segment(n, me);
    out.lam.resize(0);
    out.iterations = 1;
    return out;
}

QpSolution solve_impl(const QpProblem& p, const QpConfig& cfg, bool allow_probe);

// Feasibility probe: minimize a uniform relaxation t >= 0 of every general
// constraint (variable bounds stay hard). A strictly positive optimum is a
// certificate that the constraint system is incompatible.
bool probe_infeasible(const QpProblem& p, const QpConfig& cfg, double* t_out) {
    const int n = static_cast<int>(p.q.size());
    const int me = static_cast<int>(p.b_eq.size());
    const int mi = static_cast<int>(p.h_in.size());
    QpProblem probe;
    probe.P = Eigen::MatrixXd::Zero(n + 1, n + 1);
    probe.q = Eigen::VectorXd::Zero(n + 1);
    probe.q[n] = 1.0;
    probe.A_eq.resize(0, n + 1);
    probe.b_eq.resize(0);
    probe.A_in = Eigen::MatrixXd::Zero(2 * me + mi, n + 1);
    probe.h_in.resize(2 * me + mi);
    for (int i = 0; i < me; ++i) {
        probe.A_in.block(2 * i, 0, 1, n) = p.A_eq.row(i);
        probe.A_in(2 * i, n) = -1.0;
        probe.h_in[2 * i] = p.b_eq[i];
        probe.A_in.block(2 * i + 1, 0, 1, n) = -p.A_eq.row(i);
        probe.A_in(2 * i + 1, n) = -1.0;
        probe.h_in[2 * i + 1] = -p.b_eq[i];
    }
    for (int i = 0; i < mi; ++i) {
        probe.A_in.block(2 * me + i, 0, 1, n) = p.A_in.row(i);
        probe.A_in(2 * me + i, n) = -1.0;
        probe.h_in[2 * me + i] = p.h_in[i];
    }
    probe.lb.resize(n + 1);
    probe.ub.resize(n + 1);
    probe.lb.head(n) = p.lb;
    probe.ub.head(n) = p.ub;
    probe.lb[n] = 0.0;
    probe.ub[n] = kInf;

    QpConfig probe_cfg;
    probe_cfg.tol = std::max(cfg.tol, 1e-9);
    probe_cfg.max_iter = 500;
    const QpSolution sol = solve_impl(probe, probe_cfg, false);
    if (sol.status != QpStatus::Optimal) return false;
    *t_out = sol.y[n];
    return *t_out > 10.0 * cfg.tol;
}

QpSolution solve_impl(const QpProblem& p, const QpConfig& cfg, bool allow_probe) {
    validate_problem(p);
    require(cfg.tol > 0.0, "tolerance must be positive");
    require(cfg.max_iter > 0, "max_iter must be positive");

    const Reduced red = presolve(p, cfg.tol);
    QpSolution sol;
    if (red.infeasible) {
        sol.y = red.fixed;
        sol.duals.eq = Eigen::VectorXd::Zero(p.b_eq.size());
        sol.duals.in = Eigen::VectorXd::Zero(p.h_in.size());
        sol.duals.lb = Eigen::VectorXd::Zero(p.q.size());
        sol.duals.ub = Eigen::VectorXd::Zero(p.q.size());
        sol.status = QpStatus::Infeasible;
        sol.message = red.message;
        sol.objective = 0.5 * sol.y.dot(p.P * sol.y) + p.q.dot(sol.y);
        sol.residuals = kkt_residuals(p, sol.y, sol.duals);
        return sol;
    }

    // Index-ordered infinitesimal tilt, an anti-degeneracy device: on a
    // tied optimal face it selects one extreme point instead of the central
    // one, which keeps selection-style variables away from fractional
    // centers. The certified residuals are evaluated against the untilted
    // problem, and the tilt stays well under the tolerance.
    Reduced tilted = red;
    const double tilt = std::min(1e-9, 0.05 * cfg.tol);
    for (int jr = 0; jr < tilted.n; ++jr)
        tilted.q[jr] += tilt * static_cast<double>(jr + 1) / tilted.n;

    IpmOutcome out;
    if (red.n == 0) {
        out.y.resize(0);
        out.nu = Eigen::VectorXd::Zero(red.A.rows());
        out.lam = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(red.rows.size()));
        out.iterations = 0;
    } else if (red.rows.empty()) {
        out = solve_equality_only(red);
    } else {
        std::optional<Eigen::VectorXd> warm_red;
        if (cfg.warm_start && cfg.warm_start->size() == p.q.size()) {
            Eigen::VectorXd w(red.n);
            for (int jr = 0; jr < red.n; ++jr) {
                const int j = red.orig_of[jr];
                w[jr] = std::clamp((*cfg.warm_start)[j], p.lb[j], p.ub[j]);
            }
            if (w.allFinite()) warm_red = std::move(w);
        }
        out = run_ipm(tilted, cfg, warm_red);
    }

    sol = assemble(p, red, out.y, out.nu, out.lam);
    sol.iterations = std::max(out.iterations, 1);
    sol.residuals = kkt_residuals(p, sol.y, sol.duals);

    // A warm start that sits on the wrong active face can strand the
    // iteration; a cold start has different geometry, so retry before
    // concluding anything.
    if (sol.residuals.max() > cfg.tol && red.n > 0 && !red.rows.empty() &&
        cfg.warm_start) {
        const IpmOutcome retry = run_ipm(tilted, cfg, std::nullopt);
        QpSolution cold = assemble(p, red, retry.y, retry.nu, retry.lam);
        cold.iterations = sol.iterations + std::max(retry.iterations, 1);
        cold.residuals = kkt_residuals(p, cold.y, cold.duals);
        if (cold.residuals.max() < sol.residuals.max()) sol = std::move(cold);
    }

    if (sol.residuals.max() <= cfg.tol) {
        sol.status = QpStatus::Optimal;
        return sol;
    }

    // Contract residuals not reached: decide between a genuinely infeasible
    // system and a solver that merely gave up.
    if (allow_probe) {
        double t = 0.0;
        if (probe_infeasible(p, cfg, &t)) {
            sol.status = QpStatus::Infeasible;
            std::ostringstream msg;
            msg << "constraints incompatible: minimal uniform relaxation " << t;
            sol.message = msg.str();
            return sol;
        }
    }
    if (p.b_eq.size() == 0 && p.h_in.size() == 0 && (p.lb.array() == -kInf).all() &&
        (p.ub.array() == kInf).all()) {
        sol.status = QpStatus::Infeasible;
        sol.message = "objective unbounded below (dual unbounded direction)";
        return sol;
    }
    sol.status = QpStatus::IterationLimit;
    sol.message = "best iterate returned; residuals above tolerance";
    return sol;
}

} // namespace

QpProblem QpProblem::unconstrained(const Eigen::MatrixXd& P, const Eigen::VectorXd& q) {
    QpProblem p;
    p.P = P;
    p.q = q;
    p.A_eq.resize(0, q.size());
    p.b_eq.resize(0);
    p.A_in.resize(0, q.size());
    p.h_in.resize(0);
    p.lb = Eigen::VectorXd::Constant(q.size(), -kInf);
    p.ub = Eigen::VectorXd::Constant(q.size(), kInf);
    return p;
}

const char* to_string(QpStatus s) {
    switch (s) {
        case QpStatus::Optimal: return "optimal";
        case QpStatus::Infeasible: return "infeasible";
        case QpStatus::IterationLimit: return "iteration-limit";
    }
    return "unknown";
}

double KktResiduals::max() const {
    return std::max({primal, dual, complementarity});
}

QpSolution solve_qp(const QpProblem& p, const QpConfig& cfg) {
    QpSolution sol = solve_impl(p, cfg, true);
    if (cfg.on_solve) cfg.on_solve(p, sol);
    return sol;
}

KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& y,
                           const QpDuals& duals) {
    const Eigen::Index n = p.q.size();
    require(y.size() == n, "y has the wrong length");
    require(duals.eq.size() == p.b_eq.size(), "eq duals have the wrong length");
    require(duals.in.size() == p.h_in.size(), "inequality duals have the wrong length");
    require(duals.lb.size() == n && duals.ub.size() == n, "bound duals have the wrong length");

    KktResiduals r;
    Eigen::VectorXd stat = p.P * y + p.q - duals.lb + duals.ub;
    if (p.b_eq.size() > 0) {
        stat += p.A_eq.transpose() * duals.eq;
        r.primal = std::max(r.primal, (p.A_eq * y - p.b_eq).cwiseAbs().maxCoeff());
    }
    if (p.h_in.size() > 0) {
        stat += p.A_in.transpose() * duals.in;
        const Eigen::VectorXd slack = p.h_in - p.A_in * y;
        r.primal = std::max(r.primal, (-slack).maxCoeff());
        r.complementarity =
            std::max(r.complementarity, duals.in.cwiseProduct(slack).cwiseAbs().maxCoeff());
        r.dual = std::max(r.dual, (-duals.in).maxCoeff());
    }
    for (Eigen::Index j = 0; j < n; ++j) {
        if (p.lb[j] > -kInf) {
            r.primal = std::max(r.primal, p.lb[j] - y[j]);
            r.complementarity =
                std::max(r.complementarity, std::abs(duals.lb[j] * (y[j] - p.lb[j])));
        }
        if (p.ub[j] < kInf) {
            r.primal = std::max(r.primal, y[j] - p.ub[j]);
            r.complementarity =
                std::max(r.complementarity, std::abs(duals.ub[j] * (p.ub[j] - y[j])));
        }
        r.dual = std::max({r.dual, -duals.lb[j], -duals.ub[j]});
    }
    if (n > 0) r.dual = std::max(r.dual, stat.cwiseAbs().maxCoeff());
    r.primal = std::max(r.primal, 0.0);
    r.dual = std::max(r.dual, 0.0);
    return r;
}

void dump_qp(const QpProblem& p, std::ostream& os) {
    const Eigen::Index n = p.q.size();
    os << "cardmv qp 1\n";
    os << "vars " << n << "\neq " << p.b_eq.size() << "\nin " << p.h_in.size() << '\n';
    auto put_row = [&os](const char* key, const auto& v) {
        os << key;
        for (Eigen::Index j = 0; j < v.size(); ++j) os << ' ' << fmt17(v[j]);
        os << '\n';
    };
    for (Eigen::Index i = 0; i < n; ++i) put_row("P", p.P.row(i));
    put_row("q", p.q);
    for (Eigen::Index i = 0; i < p.A_eq.rows(); ++i) put_row("A_eq", p.A_eq.row(i));
    put_row("b_eq", p.b_eq);
    for (Eigen::Index i = 0; i < p.A_in.rows(); ++i) put_row("A_in", p.A_in.row(i));
    put_row("h_in", p.h_in);
    put_row("lb", p.lb);
    put_row("ub", p.ub);
}

QpProblem load_qp(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("cardmv qp", 0) != 0)
        throw ParseError("missing qp header", 1);
    long n = -1, me = -1, mi = -1;
    QpProblem p;
    int prow = 0, erow = 0, irow = 0;
    int lineno = 1;
    auto parse_row = [&lineno](const std::vector<std::string>& toks, long count) {
        if (static_cast<long>(toks.size()) != count + 1)
            throw ParseError("wrong value count for '" + toks[0] + "'", lineno);
        Eigen::VectorXd v(count);
        for (long j = 0; j < count; ++j) {
            char* end = nullptr;
            v[j] = std::strtod(toks[static_cast<size_t>(j + 1)].c_str(), &end);
            if (end == toks[static_cast<size_t>(j + 1)].c_str())
                throw ParseError("bad number", lineno);
        }
        return v;
    };
    while (std::getline(is, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::vector<std::string> toks;
        std::string t;
        while (ls >> t) toks.push_back(t);
        if (toks.empty()) continue;
        const std::string& key = toks[0];
        if (key == "vars") {
            n = std::strtol(toks.at(1).c_str(), nullptr, 10);
            p.P.setZero(n, n);
            p.q.setZero(n);
            p.lb.setZero(n);
            p.ub.setZero(n);
        } else if (key == "eq") {
            me = std::strtol(toks.at(1).c_str(), nullptr, 10);
            p.A_eq.setZero(me, n);
            p.b_eq.setZero(me);
        } else if (key == "in") {
            mi = std::strtol(toks.at(1).c_str(), nullptr, 10);
            p.A_in.setZero(mi, n);
            p.h_in.setZero(mi);
        } else if (key == "P") {
            p.P.row(prow++) = parse_row(toks, n);
        } else if (key == "q") {
            p.q = parse_row(toks, n);
        } else if (key == "A_eq") {
            p.A_eq.row(erow++) = parse_row(toks, n);
        } else if (key == "b_eq") {
            p.b_eq = parse_row(toks, me);
        } else if (key == "A_in") {
            p.A_in.row(irow++) = parse_row(toks, n);
        } else if (key == "h_in") {
            p.h_in = parse_row(toks, mi);
        } else if (key == "lb") {
            p.lb = parse_row(toks, n);
        } else if (key == "ub") {
            p.ub = parse_row(toks, n);
        } else {
            throw ParseError("unknown field '" + key + "'", lineno);
        }
    }
    if (n < 0 || me < 0 || mi < 0 || prow != n || erow != me || irow != mi)
        throw ParseError("qp document incomplete", lineno);
    return p;
}

} // namespace cardmv::qp
