#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace cardmv::model {

/// Immutable data of one cardinality-constrained portfolio selection
/// problem. All portfolio quantities are fractions of total wealth:
/// holdings sum to one and there are no currency units anywhere.
///
/// The problem it describes: choose exactly `card` assets and holdings
/// x (a_j <= x_j <= b_j on the selected assets, x_j = 0 elsewhere)
/// minimizing the tracking risk (x - x_bar)' Q (x - x_bar), subject to a
/// net-return floor  (x - x_bar)' r - (c_b' x_b + c_s' x_s) >= R  where
/// the trades x_b, x_s rebalance the current book P into x.
struct Instance {
    int n = 0;             ///< number of assets
    Eigen::VectorXd r;     ///< mean per-period return per asset
    Eigen::MatrixXd Q;     ///< covariance of returns, symmetric PSD
    double R = 0.0;        ///< required expected net portfolio return
    int card = 0;          ///< exact number of assets to select
    Eigen::VectorXd a;     ///< lower holding fraction per selected asset, in [0,1]
    Eigen::VectorXd b;     ///< upper holding fraction per selected asset, in [0,1]
    Eigen::VectorXd c_b;   ///< linear buy cost rates, nonnegative
    Eigen::VectorXd c_s;   ///< linear sell cost rates, nonnegative
    Eigen::VectorXd P;     ///< current holding portfolio, nonnegative
    Eigen::VectorXd x_bar; ///< benchmark portfolio, nonnegative
};

/// One candidate point in the relaxed space: holdings, purchases, sales
/// and selection indicators z in [0,1]^n.
struct Point {
    Eigen::VectorXd x;
    Eigen::VectorXd x_b;
    Eigen::VectorXd x_s;
    Eigen::VectorXd z;
};

/// Per-constraint absolute violations of one Point against an Instance.
/// `feasible` holds exactly when `max_violation <= tol`.
struct FeasibilityReport {
    double return_violation = 0.0;       ///< net-return floor
    double holding_flow_violation = 0.0; ///< P + x_b - x_s = x, max row
    double budget_violation = 0.0;       ///< |sum x - 1|
    double cardinality_violation = 0.0;  ///< |sum z - card|
    double lower_link_violation = 0.0;   ///< max_j (a_j z_j - x_j)+
    double upper_link_violation = 0.0;   ///< max_j (x_j - b_j z_j)+
    double nonnegativity_violation = 0.0; ///< x, x_b, x_s >= 0 and z in [0,1]
    double binariness_violation = 0.0;   ///< max_j min(z_j, 1-z_j), binary mode only
    double max_violation = 0.0;
    double tol = 0.0;
    bool feasible = false;
};

/// Result of structural validation. `issues` lists every violated
/// invariant in human-readable form; empty means the instance is usable.
struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
};

/// Returns (Q + Q') / 2.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& Q);

/// Checks every structural invariant of `inst`: dimensions, symmetry of Q
/// (within 1e-12), positive semidefiniteness (smallest eigenvalue >= -1e-10),
/// 0 <= a_j <= b_j <= 1, 1 <= card <= n, cost/holding nonnegativity,
/// necessary budget feasibility (the card smallest lower bounds must fit
/// under the budget and the card largest upper bounds must cover it), and
/// reachability of the return target R. Report-only; never throws.
ValidationReport validate_instance(const Instance& inst);

/// Tracking risk (x - x_bar)' Q (x - x_bar). Nonnegative whenever Q is PSD.
/// Throws std::invalid_argument on dimension mismatch.
double objective(const Instance& inst, const Eigen::VectorXd& x);

/// Evaluates the absolute violation of every constraint at `p`. In binary
/// mode the distance of z from {0,1}^n is additionally reported and counted
/// toward feasibility. Throws std::invalid_argument on dimension mismatch.
FeasibilityReport check_feasibility(const Instance& inst, const Point& p,
                                    double tol, bool binary_mode);

} // namespace cardmv::model
