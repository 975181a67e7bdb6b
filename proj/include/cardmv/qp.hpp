#pragma once

#include <Eigen/Dense>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>

namespace cardmv::qp {

/// A convex quadratic program in standard form:
///
///     minimize    (1/2) y' P y + q' y
///     subject to  A_eq y  = b_eq
///                 A_in y <= h_in
///                 lb <= y <= ub        (entries may be -inf / +inf)
///
/// P must be symmetric (within 1e-12) and positive semidefinite; equal
/// lower/upper bounds are allowed and fix the variable.
struct QpProblem {
    Eigen::MatrixXd P;
    Eigen::VectorXd q;
    Eigen::MatrixXd A_eq;
    Eigen::VectorXd b_eq;
    Eigen::MatrixXd A_in;
    Eigen::VectorXd h_in;
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;

    Eigen::Index num_vars() const { return q.size(); }

    /// Problem with no constraints over `n` free variables.
    static QpProblem unconstrained(const Eigen::MatrixXd& P, const Eigen::VectorXd& q);
};

enum class QpStatus {
    Optimal,        ///< all three residuals at or below the tolerance
    Infeasible,     ///< constraints proved incompatible
    IterationLimit, ///< best iterate returned with its residuals
};

const char* to_string(QpStatus s);

/// Lagrange multipliers. Sign conventions (fixed here, used everywhere):
///
///   stationarity   P y + q + A_eq' nu + A_in' lambda - lambda_lb + lambda_ub = 0
///   with           lambda >= 0, lambda_lb >= 0, lambda_ub >= 0
///
/// i.e. nu is free, lambda pairs with A_in y <= h_in, lambda_lb with
/// y >= lb and lambda_ub with y <= ub. Entries for infinite bounds are 0.
struct QpDuals {
    Eigen::VectorXd eq;
    Eigen::VectorXd in;
    Eigen::VectorXd lb;
    Eigen::VectorXd ub;
};

/// Max-norm KKT residuals of a primal/dual pair:
///  - primal:         worst violation over all constraint blocks and bounds
///  - dual:           max-norm of the stationarity vector above, plus any
///                    negativity of the inequality multipliers
///  - complementarity: max_i |multiplier_i * slack_i| over all blocks
struct KktResiduals {
    double primal = 0.0;
    double dual = 0.0;
    double complementarity = 0.0;
    double max() const;
};

struct QpSolution {
    Eigen::VectorXd y;
    QpDuals duals;
    QpStatus status = QpStatus::IterationLimit;
    KktResiduals residuals;
    int iterations = 0;
    std::string message; ///< certificate description when infeasible
    double objective = 0.0;
};

struct QpConfig {
    double tol = 1e-8;    ///< residual tolerance certified on Optimal
    int max_iter = 50000; ///< iteration cap
    /// Primal warm start (typically the previous DCA iterate). Used to seed
    /// the interior-point iteration; the result is independent of it up to
    /// the certified residual tolerance.
    std::optional<Eigen::VectorXd> warm_start;
    /// Invoked after every solve, e.g. to re-certify residuals externally.
    std::function<void(const QpProblem&, const QpSolution&)> on_solve;
};

/// Solves the QP with a dense primal-dual interior-point method followed by
/// an active-set refinement step. Deterministic: identical inputs produce
/// identical outputs. Invariant-violating problems (asymmetric P, lb > ub,
/// inconsistent dimensions) are rejected with std::invalid_argument before
/// any solving. Status Optimal certifies all three KKT residuals <= tol.
QpSolution solve_qp(const QpProblem& p, const QpConfig& cfg = {});

/// Independent evaluation of the KKT residuals at (y, duals); shares no
/// state with solve_qp. Throws std::invalid_argument on dimension mismatch.
KktResiduals kkt_residuals(const QpProblem& p, const Eigen::VectorXd& y,
                           const QpDuals& duals);

/// Debug dump of a problem in the key/value text format (17 significant
/// digits, read back with load_qp) for offline reproduction of solver issues.
void dump_qp(const QpProblem& p, std::ostream& os);
QpProblem load_qp(std::istream& is);

} // namespace cardmv::qp
