#include "cardmv/dca.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "cardmv/errors.hpp"

namespace cardmv::dca {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

Eigen::VectorXd stack_point(const model::Point& p) {
    const Eigen::Index n = p.x.size();
    Eigen::VectorXd y(4 * n);
    y << p.x, p.x_b, p.x_s, p.z;
    return y;
}

model::Point unstack_point(const Eigen::VectorXd& y) {
    const Eigen::Index n = y.size() / 4;
    model::Point p;
    p.x = y.segment(0, n);
    p.x_b = y.segment(n, n);
    p.x_s = y.segment(2 * n, n);
    p.z = y.segment(3 * n, n);
    return p;
}

// Ranking used by repair_and_polish: larger z first, ties by larger x,
// remaining ties by lower index.
std::vector<int> rank_assets(const model::Point& p) {
    std::vector<int> order(static_cast<size_t>(p.z.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&p](int i, int j) {
        if (p.z[i] != p.z[j]) return p.z[i] > p.z[j];
        if (p.x[i] != p.x[j]) return p.x[i] > p.x[j];
        return i < j;
    });
    return order;
}

bool z_is_binary(const Eigen::VectorXd& z, double tol) {
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        if (std::min(z[j], 1.0 - z[j]) > tol) return false;
    }
    return true;
}

} // namespace

const char* to_string(Termination t) {
    switch (t) {
        case Termination::StepTolerance: return "step-tolerance";
        case Termination::MaxIterations: return "max-iter";
        case Termination::SubproblemInfeasible: return "subproblem-infeasible";
    }
    return "unknown";
}

double penalty_alpha(const Eigen::VectorXd& z) {
    // slop covers certified solver output, which may overshoot a bound by
    // up to the residual tolerance
    constexpr double kSlop = 2e-8;
    double alpha = 0.0;
    for (Eigen::Index j = 0; j < z.size(); ++j) {
        const double zj = std::clamp(z[j], 0.0, 1.0);
        if (std::abs(zj - z[j]) > kSlop) {
            std::ostringstream msg;
            msg << "z[" << j << "] = " << z[j] << " outside [0,1]";
            throw std::invalid_argument(msg.str());
        }
        alpha += zj * (1.0 - zj);
    }
    return alpha;
}

double penalized_objective(const model::Instance& inst, double theta,
                           const model::Point& p) {
    return model::objective(inst, p.x) + theta * penalty_alpha(p.z);
}

Eigen::VectorXd subgradient_h(double theta, const Eigen::VectorXd& z) {
    return (theta * (2.0 * z.array() - 1.0)).matrix();
}

qp::QpProblem build_subproblem(const model::Instance& inst, const Eigen::VectorXd& v) {
    const int n = inst.n;
    if (v.size() != n) throw std::invalid_argument("v must have length n");
    const int nv = 4 * n; // y = (x, x_b, x_s, z)

    qp::QpProblem p;
    p.P = Eigen::MatrixXd::Zero(nv, nv);
    p.P.topLeftCorner(n, n) = 2.0 * inst.Q; // (1/2) y'Py reproduces x'Qx
    p.q = Eigen::VectorXd::Zero(nv);
    p.q.head(n) = -2.0 * inst.Q * inst.x_bar;
    p.q.tail(n) = -v;

    // equalities: budget, cardinality, and the n rebalancing rows
    p.A_eq = Eigen::MatrixXd::Zero(n + 2, nv);
    p.b_eq = Eigen::VectorXd::Zero(n + 2);
    p.A_eq.row(0).segment(0, n).setOnes();
    p.b_eq[0] = 1.0;
    p.A_eq.row(1).segment(3 * n, n).setOnes();
    p.b_eq[1] = static_cast<double>(inst.card);
    for (int j = 0; j < n; ++j) {
        p.A_eq(2 + j, j) = 1.0;         // x_j
        p.A_eq(2 + j, n + j) = -1.0;    // -x_b_j
        p.A_eq(2 + j, 2 * n + j) = 1.0; // +x_s_j
        p.b_eq[2 + j] = inst.P[j];
    }

    // inequalities: net-return floor and the 2n holding-link rows
    p.A_in = Eigen::MatrixXd::Zero(2 * n + 1, nv);
    p.h_in = Eigen::VectorXd::Zero(2 * n + 1);
    p.A_in.row(0).segment(0, n) = -inst.r.transpose();
    p.A_in.row(0).segment(n, n) = inst.c_b.transpose();
    p.A_in.row(0).segment(2 * n, n) = inst.c_s.transpose();
    p.h_in[0] = -inst.R - inst.x_bar.dot(inst.r);
    for (int j = 0; j < n; ++j) {
        p.A_in(1 + j, j) = 1.0; // x_j - b_j z_j <= 0
        p.A_in(1 + j, 3 * n + j) = -inst.b[j];
        p.A_in(1 + n + j, j) = -1.0; // a_j z_j - x_j <= 0
        p.A_in(1 + n + j, 3 * n + j) = inst.a[j];
    }

    p.lb = Eigen::VectorXd::Zero(nv);
    p.ub = Eigen::VectorXd::Constant(nv, kInf);
    p.ub.tail(n).setOnes(); // z in [0,1]
    return p;
}

std::optional<model::Point> initial_point(const model::Instance& inst,
                                          const qp::QpConfig& qp_cfg,
                                          std::string* error) {
    const qp::QpProblem relaxation = build_subproblem(inst, Eigen::VectorXd::Zero(inst.n));
    const qp::QpSolution sol = qp::solve_qp(relaxation, qp_cfg);
    if (sol.status != qp::QpStatus::Optimal) {
        if (error) {
            *error = sol.status == qp::QpStatus::Infeasible
                         ? "continuous relaxation infeasible: " + sol.message
                         : "continuous relaxation not solved: " + sol.message;
        }
        return std::nullopt;
    }
    model::Point p = unstack_point(sol.y);
    for (int j = 0; j < inst.n; ++j) p.z[j] = p.x[j] > 1e-9 ? 1.0 : 0.0;
    return p;
}

std::optional<Solution> solve_support_qp(const model::Instance& inst,
                                         const std::vector<int>& support,
                                         const qp::QpConfig& qp_cfg) {
    if (static_cast<int>(support.size()) != inst.card)
        throw std::invalid_argument("support size must equal card");
    std::vector<bool> in_support(static_cast<size_t>(inst.n), false);
    for (int j : support) {
        if (j < 0 || j >= inst.n) throw std::invalid_argument("support index out of range");
        in_support[static_cast<size_t>(j)] = true;
    }

    qp::QpProblem p = build_subproblem(inst, Eigen::VectorXd::Zero(inst.n));
    for (int j = 0; j < inst.n; ++j) {
        const int zj = 3 * inst.n + j;
        if (in_support[static_cast<size_t>(j)]) {
            p.lb[zj] = p.ub[zj] = 1.0;
        } else {
            p.lb[zj] = p.ub[zj] = 0.0;
            p.ub[j] = 0.0; // off-support holdings pinned to zero
        }
    }

    qp::QpConfig cfg = qp_cfg;
    cfg.tol = std::min(qp_cfg.tol, 1e-10); // certified binary solutions need slack
    const qp::QpSolution sol = qp::solve_qp(p, cfg);
    if (sol.status != qp::QpStatus::Optimal) return std::nullopt;

    Solution out;
    const model::Point pt = unstack_point(sol.y);
    out.x = pt.x;
    out.x_b = pt.x_b;
    out.x_s = pt.x_s;
    out.support = support;
    std::sort(out.support.begin(), out.support.end());
    out.objective = model::objective(inst, out.x);
    out.feasibility = model::check_feasibility(inst, pt, 1e-9, /*binary_mode=*/true);
    if (!out.feasibility.feasible) return std::nullopt;
    return out;
}

std::optional<Solution> repair_and_polish(const model::Instance& inst,
                                          const model::Point& p,
                                          const qp::QpConfig& qp_cfg) {
    const std::vector<int> order = rank_assets(p);
    const int attempts = inst.n - inst.card + 1;
    for (int t = 0; t < attempts; ++t) {
        std::vector<int> support(order.begin() + t, order.begin() + t + inst.card);
        if (auto sol = solve_support_qp(inst, support, qp_cfg)) return sol;
    }
    return std::nullopt;
}

DcaResult run_dca(const model::Instance& inst, const SolverConfig& cfg,
                  const std::optional<model::Point>& start) {
    if (cfg.theta <= 0.0) throw std::invalid_argument("theta must be positive");
    if (cfg.epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");
    if (cfg.theta_escalation <= 1.0)
        throw std::invalid_argument("theta escalation multiplier must exceed 1");

    DcaResult result;
    result.theta_used = cfg.theta;

    // card == n: the selection is forced, a single convex solve remains.
    if (inst.card == inst.n) {
        std::vector<int> support(static_cast<size_t>(inst.n));
        std::iota(support.begin(), support.end(), 0);
        const double t0 = now_seconds();
        auto sol = solve_support_qp(inst, support, cfg.qp);
        const double dt = now_seconds() - t0;
        result.iterations = 1;
        if (!sol) {
            result.termination = Termination::SubproblemInfeasible;
            result.message = "instance infeasible with all assets selected";
            return result;
        }
        model::Point pt{sol->x, sol->x_b, sol->x_s, Eigen::VectorXd::Ones(inst.n)};
        IterationRecord rec;
        rec.k = 0;
        rec.theta = cfg.theta;
        rec.point = pt;
        rec.objective = sol->objective;
        rec.alpha = 0.0;
        rec.penalized_objective = sol->objective;
        rec.step_norm = 0.0;
        rec.solve_seconds = dt;
        result.trace.push_back(std::move(rec));
        result.final_point = pt;
        result.polished = std::move(sol);
        result.termination = Termination::StepTolerance;
        return result;
    }

    std::optional<model::Point> first = start;
    if (!first) {
        std::string init_error;
        first = initial_point(inst, cfg.qp, &init_error);
        if (!first) {
            result.termination = Termination::SubproblemInfeasible;
            result.message = init_error;
            return result;
        }
    }

    model::Point current = *first;
    double theta = cfg.theta;
    bool more_phases = true;
    int fruitless_phases = 0;
    bool binary_restart_done = false;

    while (more_phases) {
        more_phases = false;
        const Eigen::VectorXd z_phase_start = current.z;
        Eigen::VectorXd y_prev = stack_point(current);
        double f_prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k < cfg.max_iter; ++k) {
            const Eigen::VectorXd v = subgradient_h(theta, current.z);
            const qp::QpProblem sub = build_subproblem(inst, v);
            // Subproblems are solved cold on purpose: the solver is then a
            // deterministic function of the subproblem alone, so once the
            // subgradient stabilizes the iterates repeat bitwise and the
            // step-norm test can fire even on flat optimal faces (zero-cost
            // buy/sell churn), where a warm-started solve would keep
            // drifting and never terminate.
            const double t0 = now_seconds();
            const qp::QpSolution sol = qp::solve_qp(sub, cfg.qp);
            const double dt = now_seconds() - t0;

            // A near-optimal iterate whose primal side is certified is still
            // a usable linearization point (degenerate selection geometry
            // can starve the subproblem duals); the final answer is always
            // re-certified by the restricted solve in the repair step.
            const bool usable =
                sol.status == qp::QpStatus::Optimal ||
                (sol.status == qp::QpStatus::IterationLimit &&
                 sol.residuals.primal <= 10.0 * cfg.qp.tol && sol.residuals.max() <= 1e-5);
            if (!usable) {
                result.iterations += 1;
                result.termination = Termination::SubproblemInfeasible;
                result.message = "subproblem " + std::string(qp::to_string(sol.status)) +
                                 (sol.message.empty() ? "" : ": " + sol.message);
                result.final_point = current;
                result.theta_used = theta;
                return result;
            }

            const model::Point next = unstack_point(sol.y);
            const double step = (sol.y - y_prev).norm();
            result.iterations += 1;

            IterationRecord rec;
            rec.k = result.iterations - 1;
            rec.theta = theta;
            rec.point = next;
            rec.objective = model::objective(inst, next.x);
            rec.alpha = penalty_alpha(next.z);
            rec.penalized_objective = rec.objective + theta * rec.alpha;
            rec.step_norm = step;
            rec.solve_seconds = dt;

            // The exact iteration never increases F within a phase; a rise
            // can only be subproblem-solver noise, which means the sequence
            // has reached the solver's resolution. Keep the better point.
            if (rec.penalized_objective > f_prev) {
                result.termination = Termination::StepTolerance;
                break;
            }
            f_prev = rec.penalized_objective;
            result.trace.push_back(std::move(rec));
            current = next;
            y_prev = sol.y;

            if (step <= cfg.epsilon) {
                result.termination = Termination::StepTolerance;
                break;
            }
            if (k == cfg.max_iter - 1) result.termination = Termination::MaxIterations;
        }

        const bool binary_enough = z_is_binary(current.z, cfg.binariness_tol) &&
                                   penalty_alpha(current.z) <= cfg.binariness_tol;
        if (binary_enough) continue;

        // Penalty escalation while it still moves the iterate. A fractional
        // point the escalation cannot move is a symmetric fixed point of
        // the linearized penalty (the lock-in scales with theta), so the
        // remaining escape is a one-time restart from the feasible binary
        // point the repair produces.
        const bool moved =
            (current.z - z_phase_start).cwiseAbs().maxCoeff() > cfg.binariness_tol;
        fruitless_phases = moved ? 0 : fruitless_phases + 1;
        if (fruitless_phases < 2 && theta * cfg.theta_escalation <= cfg.theta_cap) {
            theta *= cfg.theta_escalation;
            more_phases = true;
        } else if (!binary_restart_done) {
            if (auto sol = repair_and_polish(inst, current, cfg.qp)) {
                current.x = sol->x;
                current.x_b = sol->x_b;
                current.x_s = sol->x_s;
                current.z = Eigen::VectorXd::Zero(inst.n);
                for (int j : sol->support) current.z[j] = 1.0;
                binary_restart_done = true;
                fruitless_phases = 0;
                more_phases = true;
            }
        }
    }

    result.theta_used = theta;
    result.final_point = current;
    result.polished = repair_and_polish(inst, current, cfg.qp);
    if (!result.polished) {
        result.message = "no feasible binary support found during polishing";
    }
    return result;
}

void write_trace(const DcaResult& result, std::ostream& os) {
    os << "k\tF\tobjective\talpha\tstep_norm\tsolve_seconds\n";
    char buf[64];
    for (const auto& rec : result.trace) {
        os << rec.k;
        const double vals[] = {rec.penalized_objective, rec.objective, rec.alpha,
                               rec.step_norm, rec.solve_seconds};
        for (double v : vals) {
            std::snprintf(buf, sizeof(buf), "%.12g", v);
            os << '\t' << buf;
        }
        os << '\n';
    }
}

void write_trace(const DcaResult& result, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ParseError("cannot open '" + path + "' for writing");
    write_trace(result, os);
}

} // namespace cardmv::dca
