#include "cardmv/model.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace cardmv::model {

namespace {

constexpr double kSymmetryTol = 1e-12;
constexpr double kPsdTol = 1e-10;

bool all_finite(const Eigen::VectorXd& v) {
    return v.allFinite();
}

void require_dims(const Instance& inst, const Eigen::VectorXd& v, const char* what) {
    if (v.size() != inst.n) {
        std::ostringstream msg;
        msg << what << " has length " << v.size() << ", expected n = " << inst.n;
        throw std::invalid_argument(msg.str());
    }
}

} // namespace

Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& Q) {
    return 0.5 * (Q + Q.transpose());
}

ValidationReport validate_instance(const Instance& inst) {
    ValidationReport rep;
    auto flag = [&rep](const std::string& msg) { rep.issues.push_back(msg); };

    if (inst.n < 1) {
        flag("asset count n must be at least 1");
        return rep;
    }
    const int n = inst.n;

    struct Field {
        const Eigen::VectorXd* v;
        const char* name;
    };
    const Field fields[] = {{&inst.r, "r"},     {&inst.a, "a"},   {&inst.b, "b"},
                            {&inst.c_b, "c_b"}, {&inst.c_s, "c_s"}, {&inst.P, "P"},
                            {&inst.x_bar, "x_bar"}};
    bool dims_ok = true;
    for (const auto& f : fields) {
        if (f.v->size() != n) {
            std::ostringstream msg;
            msg << f.name << " has length " << f.v->size() << ", expected " << n;
            flag(msg.str());
            dims_ok = false;
        } else if (!all_finite(*f.v)) {
            flag(std::string(f.name) + " contains non-finite entries");
            dims_ok = false;
        }
    }
    if (inst.Q.rows() != n || inst.Q.cols() != n) {
        std::ostringstream msg;
        msg << "Q is " << inst.Q.rows() << "x" << inst.Q.cols() << ", expected " << n << "x" << n;
        flag(msg.str());
        dims_ok = false;
    } else if (!inst.Q.allFinite()) {
        flag("Q contains non-finite entries");
        dims_ok = false;
    }
    if (!std::isfinite(inst.R)) flag("R is not finite");
    if (!dims_ok) return rep;

    const double asym = (inst.Q - inst.Q.transpose()).cwiseAbs().maxCoeff();
    if (asym > kSymmetryTol) {
        std::ostringstream msg;
        msg << "Q is asymmetric: max |Q - Q'| = " << asym;
        flag(msg.str());
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrized(inst.Q),
                                                           Eigen::EigenvaluesOnly);
        const double min_eig = eig.eigenvalues().minCoeff();
        if (min_eig < -kPsdTol) {
            std::ostringstream msg;
            msg << "Q is not positive semidefinite: smallest eigenvalue " << min_eig;
            flag(msg.str());
        }
    }

    if (inst.card < 1 || inst.card > n) {
        std::ostringstream msg;
        if (inst.card > n)
            msg << "card > n (card = " << inst.card << ", n = " << n << ")";
        else
            msg << "card must be at least 1 (card = " << inst.card << ")";
        flag(msg.str());
    }

    for (int j = 0; j < n; ++j) {
        if (inst.a[j] < 0.0 || inst.a[j] > 1.0) {
            flag("a[" + std::to_string(j) + "] outside [0,1]");
            break;
        }
    }
    for (int j = 0; j < n; ++j) {
        if (inst.b[j] < 0.0 || inst.b[j] > 1.0) {
            flag("b[" + std::to_string(j) + "] outside [0,1]");
            break;
        }
    }
    for (int j = 0; j < n; ++j) {
        if (inst.a[j] > inst.b[j]) {
            flag("a[" + std::to_string(j) + "] exceeds b[" + std::to_string(j) + "]");
            break;
        }
    }
    if (inst.c_b.minCoeff() < 0.0) flag("buy cost rates must be nonnegative");
    if (inst.c_s.minCoeff() < 0.0) flag("sell cost rates must be nonnegative");
    if (inst.P.minCoeff() < 0.0) flag("current holdings P must be nonnegative");
    if (inst.x_bar.minCoeff() < 0.0) flag("benchmark x_bar must be nonnegative");

    // Necessary budget feasibility over any feasible support: the card
    // smallest lower bounds must fit under the unit budget and the card
    // largest upper bounds must reach it.
    if (inst.card >= 1 && inst.card <= n) {
        std::vector<double> av(inst.a.data(), inst.a.data() + n);
        std::vector<double> bv(inst.b.data(), inst.b.data() + n);
        std::sort(av.begin(), av.end());
        std::sort(bv.begin(), bv.end(), std::greater<>());
        const double min_lower = std::accumulate(av.begin(), av.begin() + inst.card, 0.0);
        const double max_upper = std::accumulate(bv.begin(), bv.begin() + inst.card, 0.0);
        if (min_lower > 1.0 + 1e-12) {
            std::ostringstream msg;
            msg << "sum of lower bounds over any support exceeds budget 1 (best case "
                << min_lower << ")";
            flag(msg.str());
        }
        if (max_upper < 1.0 - 1e-12) {
            std::ostringstream msg;
            msg << "sum of the " << inst.card << " largest upper bounds is " << max_upper
                << " < 1, budget cannot be filled";
            flag(msg.str());
        }
    }

    // Necessary reachability of the return target: gross portfolio return is
    // at most max_j r_j and costs only subtract.
    const double best_gross = inst.r.maxCoeff() - inst.x_bar.dot(inst.r);
    if (inst.R > best_gross + 1e-12) {
        std::ostringstream msg;
        msg << "return target R = " << inst.R
            << " exceeds the maximum achievable gross return " << best_gross
            << " (return constraint unsatisfiable)";
        flag(msg.str());
    }

    return rep;
}

double objective(const Instance& inst, const Eigen::VectorXd& x) {
    require_dims(inst, x, "x");
    if (!all_finite(x)) throw std::invalid_argument("x contains non-finite entries");
    const Eigen::VectorXd d = x - inst.x_bar;
    return d.dot(inst.Q * d);
}

FeasibilityReport check_feasibility(const Instance& inst, const Point& p, double tol,
                                    bool binary_mode) {
    require_dims(inst, p.x, "x");
    require_dims(inst, p.x_b, "x_b");
    require_dims(inst, p.x_s, "x_s");
    require_dims(inst, p.z, "z");
    if (tol < 0.0) throw std::invalid_argument("tolerance must be nonnegative");

    FeasibilityReport rep;
    rep.tol = tol;

    const double net_return =
        (p.x - inst.x_bar).dot(inst.r) - inst.c_b.dot(p.x_b) - inst.c_s.dot(p.x_s);
    rep.return_violation = std::max(0.0, inst.R - net_return);

    rep.holding_flow_violation =
        (inst.P + p.x_b - p.x_s - p.x).cwiseAbs().maxCoeff();
    rep.budget_violation = std::abs(p.x.sum() - 1.0);
    rep.cardinality_violation = std::abs(p.z.sum() - static_cast<double>(inst.card));

    rep.lower_link_violation =
        (inst.a.cwiseProduct(p.z) - p.x).cwiseMax(0.0).maxCoeff();
    rep.upper_link_violation =
        (p.x - inst.b.cwiseProduct(p.z)).cwiseMax(0.0).maxCoeff();

    double nonneg = 0.0;
    nonneg = std::max(nonneg, (-p.x).maxCoeff());
    nonneg = std::max(nonneg, (-p.x_b).maxCoeff());
    nonneg = std::max(nonneg, (-p.x_s).maxCoeff());
    nonneg = std::max(nonneg, (-p.z).maxCoeff());
    nonneg = std::max(nonneg, (p.z.array() - 1.0).maxCoeff());
    rep.nonnegativity_violation = std::max(0.0, nonneg);

    if (binary_mode) {
        rep.binariness_violation =
            p.z.cwiseMin(Eigen::VectorXd::Ones(inst.n) - p.z).maxCoeff();
        rep.binariness_violation = std::max(0.0, rep.binariness_violation);
    }

    rep.max_violation = std::max({rep.return_violation, rep.holding_flow_violation,
                                  rep.budget_violation, rep.cardinality_violation,
                                  rep.lower_link_violation, rep.upper_link_violation,
                                  rep.nonnegativity_violation, rep.binariness_violation});
    rep.feasible = rep.max_violation <= tol;
    return rep;
}

} // namespace cardmv::model
