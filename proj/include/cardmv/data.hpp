#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cardmv/model.hpp"

namespace cardmv::data {

/// A per-period price history: one column per asset, one row per period.
struct PriceSeries {
    std::vector<std::string> assets;
    Eigen::MatrixXd prices; ///< T x n, strictly positive
    std::string period;     ///< free-text label, e.g. "weekly"

    Eigen::Index periods() const { return prices.rows(); }
    Eigen::Index num_assets() const { return prices.cols(); }
};

/// First and second moments of per-period simple returns.
struct MomentEstimate {
    Eigen::VectorXd r; ///< mean simple return per asset
    Eigen::MatrixXd Q; ///< unbiased sample covariance of returns
    int T_used = 0;    ///< number of return observations
};

/// Instance assembly settings. Any field left empty falls back to the
/// standard experimental defaults: a_j = 0.05, b_j = 1.0,
/// c_b = c_s = 0.001, P = 0, x_bar_j = 1/n. When `R` is unset, the target
/// return is placed at `r_fraction` of the way between the smallest and
/// largest per-asset return net of buy costs, capped at the best
/// single-asset return net of the benchmark so the target stays reachable.
struct InstanceConfig {
    int card = 1;
    std::optional<double> R;
    double r_fraction = 0.5;
    std::optional<Eigen::VectorXd> a;
    std::optional<Eigen::VectorXd> b;
    std::optional<Eigen::VectorXd> c_b;
    std::optional<Eigen::VectorXd> c_s;
    std::optional<Eigen::VectorXd> P;
    std::optional<Eigen::VectorXd> x_bar;
};

/// Parses a delimiter-separated price file: a header row of asset
/// identifiers, then one row of positive decimal prices per period.
/// Rejects non-positive or missing prices naming the offending row, files
/// with fewer than 3 periods, and inconsistent column counts. Throws
/// cardmv::ParseError.
PriceSeries load_prices(std::istream& is);
PriceSeries load_prices(const std::string& path);

/// Simple (arithmetic) per-period returns, their mean, and the unbiased
/// sample covariance (divisor T_used - 1).
MomentEstimate estimate_moments(const PriceSeries& ps);

/// Parses an OR-Library style statistics file:
///   line 1:            n
///   next n lines:      mean_j stddev_j
///   n(n+1)/2 lines:    i j corr_ij   (1-based upper triangle, i <= j)
/// Every correlation entry must be present and in [-1, 1]. Throws
/// cardmv::ParseError on wrong counts, out-of-range values or i > j.
MomentEstimate load_orlib(std::istream& is);
MomentEstimate load_orlib(const std::string& path);

/// The deterministic return-target rule used when no R is given: with
/// net_j = r_j - c_b_j over assets with a_j <= b_j,
///   R = min(net) + fraction * (max(net) - min(net)).
double pick_return_target(const Eigen::VectorXd& r, const Eigen::VectorXd& c_b,
                          const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          double fraction);

/// Builds a validated Instance from moment estimates and a config.
/// Throws cardmv::ValidationError listing the violated invariants when the
/// assembled instance does not pass validate_instance.
model::Instance build_instance(const MomentEstimate& m, const InstanceConfig& cfg);

} // namespace cardmv::data
