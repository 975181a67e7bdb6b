#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cardmv/model.hpp"
#include "cardmv/qp.hpp"

namespace cardmv::dca {

/// Tuning knobs of the DC iteration. The defaults reproduce the standard
/// experimental setup: penalty weight theta = 2, stopping tolerance
/// epsilon = 1e-6 on the step norm.
struct SolverConfig {
    double theta = 2.0;          ///< penalty weight on sum z_j (1 - z_j)
    double epsilon = 1e-6;       ///< stop when the full step norm falls below
    int max_iter = 200;          ///< per-phase iteration cap
    double theta_escalation = 5.0; ///< multiplier applied when z stays fractional
    double theta_cap = 1e6;      ///< never escalate theta beyond this
    double binariness_tol = 1e-6; ///< z counts as binary when max_j min(z_j,1-z_j) <= this
    qp::QpConfig qp;             ///< subproblem solver settings
};

/// A feasible binary portfolio: the selected support, re-optimized holdings
/// and trades, the risk value and the feasibility certificate.
struct Solution {
    Eigen::VectorXd x;
    std::vector<int> support;   ///< selected asset indices, ascending
    double objective = 0.0;
    Eigen::VectorXd x_b;
    Eigen::VectorXd x_s;
    model::FeasibilityReport feasibility;
};

struct IterationRecord {
    int k = 0;
    double theta = 0.0;          ///< penalty weight in force at this iteration
    model::Point point;
    double penalized_objective = 0.0; ///< F = objective + theta * alpha
    double objective = 0.0;
    double alpha = 0.0;          ///< penalty value at the iterate
    double step_norm = 0.0;      ///< Euclidean norm of the full 4n step
    double solve_seconds = 0.0;
};

enum class Termination {
    StepTolerance,
    MaxIterations,
    SubproblemInfeasible,
};

const char* to_string(Termination t);

struct DcaResult {
    std::vector<IterationRecord> trace;
    model::Point final_point;
    std::optional<Solution> polished;
    int iterations = 0;          ///< total subproblem solves across phases
    Termination termination = Termination::MaxIterations;
    double theta_used = 0.0;     ///< penalty weight after any escalation
    std::string message;
};

/// Penalty alpha(z) = sum_j z_j (1 - z_j); zero exactly on binary z.
/// Components outside [0,1] (beyond 1e-12 rounding slop) are rejected with
/// std::invalid_argument.
double penalty_alpha(const Eigen::VectorXd& z);

/// F = (x - x_bar)' Q (x - x_bar) + theta * alpha(z).
double penalized_objective(const model::Instance& inst, double theta,
                           const model::Point& p);

/// Subgradient of the concave penalty part at z: v_j = theta (2 z_j - 1).
/// The (x, x_b, x_s) components of the subgradient are identically zero and
/// are not materialized.
Eigen::VectorXd subgradient_h(double theta, const Eigen::VectorXd& z);

/// Assembles the convex subproblem over the stacked variable
/// y = (x, x_b, x_s, z) of dimension 4n: tracking-risk quadratic on x,
/// linear term -v on z, the budget / cardinality / rebalancing equalities,
/// the net-return and holding-link inequalities, and the box bounds.
/// With v = 0 this is exactly the continuous relaxation of the problem.
qp::QpProblem build_subproblem(const model::Instance& inst,
                               const Eigen::VectorXd& v);

/// Solves the continuous relaxation and rounds: z0_j = 1 when the relaxed
/// x_j > 1e-9, else 0 (z0 may violate the cardinality sum; it only feeds
/// the first subgradient). Returns nullopt when the relaxation is
/// infeasible, which proves the instance itself infeasible.
std::optional<model::Point> initial_point(const model::Instance& inst,
                                          const qp::QpConfig& qp_cfg,
                                          std::string* error = nullptr);

/// Best portfolio restricted to a fixed support: z pinned to the indicator
/// of `support`, off-support holdings pinned to zero, remaining constraints
/// kept. Returns nullopt when the support admits no feasible holdings.
std::optional<Solution> solve_support_qp(const model::Instance& inst,
                                         const std::vector<int>& support,
                                         const qp::QpConfig& qp_cfg);

/// Rounds the final DC point to a certified feasible binary solution:
/// ranks assets by z (ties by larger x, then lower index), fixes the top
/// `card` as the support and re-solves the convex problem on it. On an
/// infeasible support the next window of the same ranking is tried, up to
/// n - card + 1 attempts.
std::optional<Solution> repair_and_polish(const model::Instance& inst,
                                          const model::Point& p,
                                          const qp::QpConfig& qp_cfg);

/// Runs the full DC iteration: subgradient step, convex subproblem,
/// stop on step norm <= epsilon, penalty escalation while z stays
/// fractional, then repair_and_polish. The instance must pass
/// validate_instance; run_dca itself is report-only about infeasibility.
/// By default the iteration starts from the rounded continuous relaxation;
/// `start` overrides that (e.g. to restart from an earlier solution).
DcaResult run_dca(const model::Instance& inst, const SolverConfig& cfg = {},
                  const std::optional<model::Point>& start = {});

/// Writes the iteration trace as a delimiter-separated table, one record
/// per iteration: k, F, objective, alpha, step norm, subproblem seconds.
void write_trace(const DcaResult& result, std::ostream& os);
void write_trace(const DcaResult& result, const std::string& path);

} // namespace cardmv::dca
