// Test-only reference implementations, deliberately independent of the
// library code paths they are used to check.
#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

namespace oracles {

/// Euclidean projection of c onto the probability simplex by the classical
/// sort-and-threshold rule. Independent of the qp module.
inline Eigen::VectorXd project_simplex(const Eigen::VectorXd& c) {
    const Eigen::Index n = c.size();
    std::vector<double> u(c.data(), c.data() + n);
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumsum = 0.0;
    double tau = 0.0;
    int rho = 0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumsum += u[static_cast<size_t>(k)];
        const double t = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[static_cast<size_t>(k)] - t > 0.0) {
            rho = static_cast<int>(k + 1);
            tau = t;
        }
    }
    (void)rho;
    Eigen::VectorXd y(n);
    for (Eigen::Index j = 0; j < n; ++j) y[j] = std::max(c[j] - tau, 0.0);
    return y;
}

/// Mean of each column, computed naively.
inline Eigen::VectorXd naive_mean(const Eigen::MatrixXd& rows) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(rows.cols());
    for (Eigen::Index t = 0; t < rows.rows(); ++t) m += rows.row(t).transpose();
    return m / static_cast<double>(rows.rows());
}

/// Unbiased sample covariance, computed entry by entry.
inline Eigen::MatrixXd naive_covariance(const Eigen::MatrixXd& rows) {
    const Eigen::Index T = rows.rows();
    const Eigen::Index n = rows.cols();
    const Eigen::VectorXd m = naive_mean(rows);
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double acc = 0.0;
            for (Eigen::Index t = 0; t < T; ++t)
                acc += (rows(t, i) - m[i]) * (rows(t, j) - m[j]);
            Q(i, j) = acc / static_cast<double>(T - 1);
        }
    }
    return Q;
}

/// Simple returns of a price matrix, computed naively.
inline Eigen::MatrixXd naive_returns(const Eigen::MatrixXd& prices) {
    const Eigen::Index T = prices.rows();
    Eigen::MatrixXd ret(T - 1, prices.cols());
    for (Eigen::Index t = 0; t + 1 < T; ++t)
        for (Eigen::Index j = 0; j < prices.cols(); ++j)
            ret(t, j) = (prices(t + 1, j) - prices(t, j)) / prices(t, j);
    return ret;
}

} // namespace oracles
