#pragma once

#include <cstdint>

#include "cardmv/model.hpp"

namespace cardmv::gen {

/// Settings for the seeded random instance generator. Returns are drawn
/// uniformly from [r_lo, r_hi]; volatilities from [vol_lo, vol_hi]; the
/// covariance comes from a factor model F F' + D (positive diagonal D), so
/// it is positive semidefinite by construction.
struct GenConfig {
    int n = 10;
    std::uint64_t seed = 1;
    int card = 0;          ///< 0 picks min(5, n)
    int factors = 3;
    double r_lo = -0.005;
    double r_hi = 0.01;
    double vol_lo = 0.01;
    double vol_hi = 0.05;
    double a = 0.05;
    double b = 1.0;
    double cost = 0.001;   ///< buy and sell rate
    double r_fraction = 0.5;
    bool benchmark_equal_weight = true; ///< x_bar = 1/n, else 0
};

/// Deterministic: the same config yields a bitwise-identical instance on
/// every run and platform (the generator does not use std:: distributions).
/// The return target comes from the data module's automatic rule. The
/// result always passes validate_instance.
model::Instance random_instance(const GenConfig& cfg);

} // namespace cardmv::gen
